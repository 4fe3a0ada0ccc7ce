import os

import numpy as np
import pytest

from flreg.cli import run
from flreg.estimators import model_from_text
from flreg.simulation import dataset_from_csv


def read(path):
    with open(path) as handle:
        return handle.read()


def simulate(tmp_path, name="data.csv", n=12, sigma="0", seed="1", extra=()):
    out = tmp_path / name
    status = run(
        ["simulate", "--n", str(n), "--sigma", sigma, "--alpha", "2",
         "--spacing", "well", "--seed", seed, "--out", str(out), *extra]
    )
    assert status == 0
    return out


class TestSimulate:
    def test_writes_wellformed_csv(self, tmp_path):
        out = simulate(tmp_path, n=4)
        lines = read(out).strip().split("\n")
        assert lines[0] == "# grid=midpoint p=50"
        assert lines[1].startswith("x_1,") and lines[1].endswith(",y")
        assert len(lines) == 2 + 4

    def test_same_argv_same_bytes(self, tmp_path):
        a = simulate(tmp_path, name="a.csv")
        b = simulate(tmp_path, name="b.csv")
        assert read(a) == read(b)

    def test_different_seed_different_bytes(self, tmp_path):
        a = simulate(tmp_path, name="a.csv", seed="1")
        b = simulate(tmp_path, name="b.csv", seed="2")
        assert read(a) != read(b)


class TestFitPredict:
    def test_end_to_end_ridge(self, tmp_path):
        data = simulate(tmp_path, n=4)
        model_path = tmp_path / "model.txt"
        assert run(["fit", "--data", str(data), "--method", "ridge",
                    "--rho", "0.1", "--out", str(model_path)]) == 0
        model = model_from_text(read(model_path))
        assert model.method == "ridge"
        assert model.slope.grid.p == 50
        preds = tmp_path / "preds.txt"
        assert run(["predict", "--model", str(model_path), "--data", str(data),
                    "--out", str(preds)]) == 0
        assert len(read(preds).strip().split("\n")) == 4

    def test_training_set_reproduction_with_tiny_ridge(self, tmp_path):
        # sigma = 0 and near-zero ridge: in-sample predictions recover Y
        data = simulate(tmp_path, n=16, sigma="0", seed="5")
        model_path = tmp_path / "model.txt"
        assert run(["fit", "--data", str(data), "--method", "ridge",
                    "--rho", "1e-8", "--out", str(model_path)]) == 0
        preds = tmp_path / "preds.txt"
        assert run(["predict", "--model", str(model_path), "--data", str(data),
                    "--out", str(preds)]) == 0
        predictions = np.array([float(v) for v in read(preds).split()])
        _, _, y = dataset_from_csv(read(data))
        assert np.max(np.abs(predictions - y)) <= 1e-4

    def test_pca_m_zero_is_precondition_error(self, tmp_path):
        data = simulate(tmp_path, n=6)
        out = tmp_path / "model.txt"
        assert run(["fit", "--data", str(data), "--method", "pca",
                    "--m", "0", "--out", str(out)]) == 4
        assert not out.exists()

    def test_missing_tuning_flag_is_usage_error(self, tmp_path):
        data = simulate(tmp_path, n=6)
        out = tmp_path / "model.txt"
        assert run(["fit", "--data", str(data), "--method", "pca",
                    "--out", str(out)]) == 2
        assert not out.exists()

    def test_grid_mismatch_between_model_and_data(self, tmp_path):
        data = simulate(tmp_path, n=6)
        small = simulate(tmp_path, name="small.csv", n=6, extra=("--p", "20", "--terms", "20"))
        model_path = tmp_path / "model.txt"
        assert run(["fit", "--data", str(data), "--method", "ridge",
                    "--rho", "0.1", "--out", str(model_path)]) == 0
        out = tmp_path / "preds.txt"
        assert run(["predict", "--model", str(model_path), "--data", str(small),
                    "--out", str(out)]) == 3
        assert not out.exists()


class TestErrorPaths:
    def test_unknown_subcommand_is_usage(self):
        assert run(["frobnicate"]) == 2

    def test_missing_metadata_line_is_data_format(self, tmp_path):
        data = simulate(tmp_path, n=4)
        stripped = tmp_path / "stripped.csv"
        stripped.write_text("\n".join(read(data).splitlines()[1:]) + "\n")
        out = tmp_path / "model.txt"
        assert run(["fit", "--data", str(stripped), "--method", "ridge",
                    "--rho", "0.1", "--out", str(out)]) == 3
        assert not out.exists()

    def test_wrong_column_count_is_data_format(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("# grid=midpoint p=3\nx_1,x_2,x_3,y\n1,2,3\n")
        out = tmp_path / "model.txt"
        assert run(["fit", "--data", str(bad), "--method", "ridge",
                    "--rho", "0.1", "--out", str(out)]) == 3

    def test_non_numeric_cell_is_data_format(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("# grid=midpoint p=2\nx_1,x_2,y\n1,zap,3\n1,2,3\n")
        out = tmp_path / "model.txt"
        assert run(["fit", "--data", str(bad), "--method", "ridge",
                    "--rho", "0.1", "--out", str(out)]) == 3

    def test_unreadable_input_is_io_error(self, tmp_path):
        out = tmp_path / "model.txt"
        assert run(["fit", "--data", str(tmp_path / "absent.csv"), "--method",
                    "ridge", "--rho", "0.1", "--out", str(out)]) == 5

    def test_failures_leave_no_partial_output(self, tmp_path):
        out = tmp_path / "target.txt"
        run(["fit", "--data", str(tmp_path / "absent.csv"), "--method",
             "ridge", "--rho", "0.1", "--out", str(out)])
        assert not out.exists()
        assert not [p for p in os.listdir(tmp_path) if p.startswith(".flreg-")]


class TestBatchCommands:
    def test_mc_table_smoke_and_determinism(self, tmp_path):
        argv = ["mc-table", "--spacing", "well", "--sigma", "0.5", "--n", "40",
                "--alpha", "2", "--reps", "6", "--seed", "7", "--m-max", "3",
                "--rho-count", "4"]
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        assert run(argv + ["--threads", "1", "--out", str(a)]) == 0
        assert run(argv + ["--threads", "4", "--out", str(b)]) == 0
        assert read(a) == read(b)
        lines = read(a).strip().split("\n")
        assert len(lines) == 2
        assert len(lines[1].split("\t")) == 11

    def test_mc_table_profile_output(self, tmp_path):
        out, prof = tmp_path / "t.tsv", tmp_path / "p.tsv"
        assert run(["mc-table", "--spacing", "well", "--sigma", "0.5", "--n", "40",
                    "--alpha", "2", "--reps", "4", "--seed", "1", "--m-max", "2",
                    "--rho-count", "3", "--threads", "1",
                    "--out", str(out), "--profile", str(prof)]) == 0
        assert read(prof).startswith("candidate\tmise")

    def test_rate_check_smoke(self, tmp_path):
        out = tmp_path / "rate.tsv"
        assert run(["rate-check", "--alpha", "2", "--beta", "2",
                    "--n", "30,60,120", "--reps", "6", "--seed", "3",
                    "--threads", "1", "--out", str(out)]) == 0
        lines = read(out).strip().split("\n")
        assert lines[0] == "estimator\tn\tmise\tfitted_slope\ttheoretical_slope"
        assert len(lines) == 1 + 6  # both estimators, three sizes each
        assert lines[1].split("\t")[-1] == f"{-0.5:.17g}"

    def test_diagnose_smoke(self, tmp_path):
        out = tmp_path / "diag.tsv"
        assert run(["diagnose", "--n", "100", "--alpha", "2", "--spacing", "well",
                    "--seed", "2", "--j-max", "4", "--out", str(out)]) == 0
        lines = read(out).strip().split("\n")
        assert lines[0].startswith("# hs_gap=")
        assert len(lines) == 2 + 4
