import math

import numpy as np
import pytest

from flreg import (
    DataFormatError,
    Grid,
    ParameterError,
    SimConfig,
    basis,
    draw_dataset,
    eigendecompose,
    gamma_sequence,
    inner_product,
    true_slope,
    truth_bundle,
)
from flreg.simulation import (
    basis_matrix,
    dataset_from_csv,
    dataset_to_csv,
    slope_coefficients,
)

GRID = Grid(50)


class TestBasis:
    def test_first_function_is_constant_one(self):
        assert np.all(basis(1, GRID).values == 1.0)

    def test_second_function_vanishes_at_midpoint(self):
        # p = 25 puts t = 0.5 on the grid; cos(pi/2) = 0
        grid = Grid(25)
        values = basis(2, grid).values
        assert abs(values[12]) < 1e-15

    def test_discrete_orthonormality(self):
        B = basis_matrix(GRID, 50)
        gram = B @ B.T / GRID.p
        assert np.max(np.abs(gram - np.eye(50))) <= 1e-10

    def test_out_of_range_index(self):
        with pytest.raises(ParameterError):
            basis(0, GRID)
        with pytest.raises(ParameterError):
            basis(51, GRID)


class TestTrueSlope:
    def test_leading_coefficients(self):
        coefs = slope_coefficients(50)
        assert coefs[0] == 0.3
        assert coefs[1] == 4.0 * (-1.0) ** 3 * 2.0**-2.0 == -1.0

    def test_projection_onto_third_basis_function(self):
        b = true_slope(GRID, 50)
        assert inner_product(b, basis(3, GRID)) == pytest.approx(4.0 / 9.0, abs=1e-10)


class TestGammaSequence:
    def test_well_spaced_second_coefficient(self):
        assert gamma_sequence("well_spaced", 2.0, 5)[1] == pytest.approx(-0.5)

    def test_closely_spaced_second_coefficient(self):
        assert gamma_sequence("closely_spaced", 2.0, 5)[1] == pytest.approx(-0.19996)

    def test_closely_spaced_first_block_start(self):
        # j = 5 is block q=1, k=0: 0.2 * (+1) * (5^-1 - 0)
        assert gamma_sequence("closely_spaced", 2.0, 5)[4] == pytest.approx(0.04)

    def test_unknown_spacing(self):
        with pytest.raises(ParameterError):
            gamma_sequence("random", 2.0, 5)


class TestTruthBundle:
    def test_kernel_reconstruction(self):
        cfg = SimConfig(n=10, sigma_eps=0.0, alpha=2.0, spacing="well_spaced", seed=0)
        truth = truth_bundle(cfg)
        B = basis_matrix(GRID, 50)
        direct = sum(
            g**2 * np.outer(B[j], B[j]) for j, g in enumerate(truth.gamma)
        )
        assert np.max(np.abs(truth.kernel.values - direct)) <= 1e-10

    def test_well_spaced_spectrum_recovered(self):
        cfg = SimConfig(n=10, sigma_eps=0.0, alpha=2.0, spacing="well_spaced", seed=0)
        truth = truth_bundle(cfg)
        sys = eigendecompose(truth.kernel)
        assert np.max(np.abs(sys.eigenvalues - truth.eigenvalues)) <= 1e-8

    def test_closely_spaced_blocks_nearly_tied(self):
        # designed 5-blocks at sorted ranks 5-9, 10-14, ..., 45-49 (1-based);
        # within-block spread measured relative to the leading eigenvalue
        cfg = SimConfig(n=10, sigma_eps=0.0, alpha=2.0, spacing="closely_spaced", seed=0)
        kappa = truth_bundle(cfg).eigenvalues
        top = kappa[0]
        for start in range(4, 49, 5):
            block = kappa[start : start + 5]
            assert (block.max() - block.min()) / top < 1e-3

    def test_sorted_descending_with_order_map(self):
        cfg = SimConfig(n=10, sigma_eps=0.0, alpha=1.1, spacing="closely_spaced", seed=0)
        truth = truth_bundle(cfg)
        assert np.all(np.diff(truth.eigenvalues) <= 0)
        np.testing.assert_allclose(
            truth.eigenvalues, (truth.gamma**2)[truth.eigen_order]
        )


class TestDrawDataset:
    def test_deterministic_given_config(self):
        cfg = SimConfig(n=20, sigma_eps=0.5, alpha=2.0, spacing="well_spaced", seed=42)
        a, _ = draw_dataset(cfg)
        b, _ = draw_dataset(cfg)
        assert np.array_equal(a.Y, b.Y)
        for x, y in zip(a.X, b.X):
            assert np.array_equal(x.values, y.values)

    def test_child_configs_differ(self):
        cfg = SimConfig(n=20, sigma_eps=0.5, alpha=2.0, spacing="well_spaced", seed=42)
        seeds = {cfg.child(r).seed for r in range(100)}
        assert len(seeds) == 100
        a, _ = draw_dataset(cfg.child(0))
        b, _ = draw_dataset(cfg.child(1))
        assert not np.array_equal(a.Y, b.Y)

    def test_noiseless_response_matches_score_expansion(self):
        # recover the scores from the (orthonormal) basis projections and
        # rebuild Y by hand
        cfg = SimConfig(
            n=8, sigma_eps=0.0, alpha=2.0, spacing="well_spaced", n_terms=3, p=50, seed=4
        )
        data, truth = draw_dataset(cfg)
        coefs = slope_coefficients(3)
        for x, y in zip(data.X, data.Y):
            z_gamma = [inner_product(x, basis(j + 1, GRID)) for j in range(3)]
            assert y == pytest.approx(float(np.dot(z_gamma, coefs)), abs=1e-12)

    def test_score_moments_match_design(self):
        # scores are unit-variance and uncorrelated: check first and second
        # empirical moments within three standard errors
        cfg = SimConfig(
            n=10_000, sigma_eps=0.0, alpha=2.0, spacing="well_spaced", n_terms=4, p=10, seed=99
        )
        data, truth = draw_dataset(cfg)
        grid = Grid(10)
        B = np.stack([basis(j, grid).values for j in range(1, 5)])
        scores = data.x_matrix() @ B.T / grid.p / truth.gamma  # (n, 4)
        n = cfg.n
        assert np.max(np.abs(scores.mean(axis=0))) < 3.0 / math.sqrt(n)
        cov = scores.T @ scores / n
        # var(Z^2) = 4/5 for uniform scores, so se(diag) = sqrt(0.8/n)
        assert np.max(np.abs(np.diag(cov) - 1.0)) < 3.0 * math.sqrt(0.8 / n)
        off = cov - np.diag(np.diag(cov))
        assert np.max(np.abs(off)) < 3.0 / math.sqrt(n)

    def test_component_variances_match_eigenvalues(self):
        cfg = SimConfig(
            n=10_000, sigma_eps=0.0, alpha=2.0, spacing="well_spaced", n_terms=4, p=10, seed=7
        )
        data, truth = draw_dataset(cfg)
        grid = Grid(10)
        B = np.stack([basis(j, grid).values for j in range(1, 5)])
        comps = data.x_matrix() @ B.T / grid.p  # xi_ij = gamma_j Z_ij
        emp_var = np.mean(comps**2, axis=0)
        kappa = truth.gamma**2
        se = np.sqrt(0.8 / cfg.n) * kappa  # var(xi^2) = kappa^2 var(Z^2)
        assert np.all(np.abs(emp_var - kappa) < 3.0 * se)

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            SimConfig(n=1, sigma_eps=0.5, alpha=2.0, spacing="well_spaced")
        with pytest.raises(ParameterError):
            SimConfig(n=10, sigma_eps=-0.1, alpha=2.0, spacing="well_spaced")
        with pytest.raises(ParameterError):
            SimConfig(n=10, sigma_eps=0.5, alpha=0.0, spacing="well_spaced")
        with pytest.raises(ParameterError):
            SimConfig(n=10, sigma_eps=0.5, alpha=2.0, spacing="sideways")
        with pytest.raises(ParameterError):
            SimConfig(n=10, sigma_eps=0.5, alpha=2.0, spacing="well_spaced", n_terms=51)


class TestDatasetCsv:
    def test_round_trip_is_lossless(self):
        cfg = SimConfig(n=5, sigma_eps=0.5, alpha=2.0, spacing="closely_spaced", seed=3)
        data, _ = draw_dataset(cfg)
        grid, X, Y = dataset_from_csv(dataset_to_csv(data))
        assert grid == data.grid
        assert np.array_equal(Y, data.Y)
        for orig, restored in zip(data.X, X):
            assert np.array_equal(orig.values, restored.values)

    def test_metadata_line_required(self):
        cfg = SimConfig(n=3, sigma_eps=0.0, alpha=2.0, spacing="well_spaced", seed=1)
        data, _ = draw_dataset(cfg)
        text = dataset_to_csv(data)
        body = "\n".join(text.splitlines()[1:])
        with pytest.raises(DataFormatError):
            dataset_from_csv(body)

    def test_column_count_and_numeric_cells_enforced(self):
        good = "# grid=midpoint p=2\nx_1,x_2,y\n1,2,3\n"
        grid, X, Y = dataset_from_csv(good)
        assert grid.p == 2 and Y[0] == 3.0
        with pytest.raises(DataFormatError):
            dataset_from_csv("# grid=midpoint p=2\nx_1,x_2,y\n1,2\n")
        with pytest.raises(DataFormatError):
            dataset_from_csv("# grid=midpoint p=2\nx_1,x_2,y\n1,2,zap\n")
        with pytest.raises(DataFormatError):
            dataset_from_csv("# grid=midpoint p=2\nx_1,x_3,y\n1,2,3\n")

    def test_y_column_optional_only_on_request(self):
        text = "# grid=midpoint p=2\nx_1,x_2\n1,2\n"
        with pytest.raises(DataFormatError):
            dataset_from_csv(text, require_y=True)
        _, X, Y = dataset_from_csv(text, require_y=False)
        assert Y is None and len(X) == 1
