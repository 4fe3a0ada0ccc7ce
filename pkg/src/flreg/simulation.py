"""Synthetic data generator for the simulation study.

The covariates are random cosine series on [0, 1],

    X_i = sum over j <= J of gamma_j * Z_ij * phi_j,

with phi_1 the constant function, phi_{j+1}(t) = sqrt(2) cos(j pi t), and
scores Z_ij drawn iid uniform on [-sqrt(3), sqrt(3)] (zero mean, unit
variance).  Responses follow Y_i = <slope, X_i> + eps_i with zero intercept
and Gaussian noise.  Two families of scale coefficients gamma_j are
supported: a "well_spaced" design whose squared scales decay as j^(-alpha)
with strictly separated values, and a "closely_spaced" design that produces
blocks of five nearly tied eigenvalues.

Reproducibility contract: a dataset is fully determined by its SimConfig.
Randomness comes from numpy's PCG64 generator seeded through a
SeedSequence; replication r of a Monte Carlo run uses the child config
``config.child(r)``, whose seed is derived from (seed, r) independently of
execution order.  Within one dataset the draw order is fixed: the n-by-J
score matrix is filled observation-major, then the n noise values follow.
Normal deviates use the generator's native ``standard_normal`` (ziggurat
method), which is exact in distribution.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, ParameterError
from .estimators import Dataset
from .grid import Grid, GridFunction, SymmetricKernel

__all__ = [
    "SimConfig",
    "TruthBundle",
    "basis",
    "basis_matrix",
    "slope_coefficients",
    "true_slope",
    "gamma_sequence",
    "truth_bundle",
    "draw_dataset",
    "dataset_to_csv",
    "dataset_from_csv",
]

SQRT3 = math.sqrt(3.0)

SPACINGS = ("well_spaced", "closely_spaced")


@dataclass(frozen=True)
class SimConfig:
    """One simulation scenario: sample size, noise, eigenvalue design, seed."""

    n: int
    sigma_eps: float
    alpha: float
    spacing: str
    n_terms: int = 50  # number of basis functions in slope and covariates
    p: int = 50  # grid size
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ParameterError(f"need n >= 2, got {self.n}")
        if self.sigma_eps < 0.0:
            raise ParameterError(f"need sigma_eps >= 0, got {self.sigma_eps}")
        if not self.alpha > 0.0:
            raise ParameterError(f"need alpha > 0, got {self.alpha}")
        if self.spacing not in SPACINGS:
            raise ParameterError(
                f"spacing must be one of {SPACINGS}, got {self.spacing!r}"
            )
        if not 1 <= self.n_terms <= self.p:
            raise ParameterError(
                f"need 1 <= n_terms <= p, got n_terms={self.n_terms}, p={self.p}"
            )
        if self.seed < 0:
            raise ParameterError(f"seed must be nonnegative, got {self.seed}")

    @property
    def grid(self) -> Grid:
        return Grid(self.p)

    def child(self, replication: int) -> "SimConfig":
        """Config for one Monte Carlo replication.

        The child seed is derived from (seed, replication) through a
        SeedSequence spawn key, so replications are mutually independent and
        do not depend on the order in which they are generated.
        """
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(replication,))
        return dataclasses.replace(
            self, seed=int(seq.generate_state(1, dtype=np.uint64)[0])
        )


def basis(j: int, grid: Grid) -> GridFunction:
    """The j-th basis function: constant for j = 1, unit-norm cosines after.

    basis(j) for j >= 2 is sqrt(2) cos((j - 1) pi t).  On the midpoint grid
    the family basis(1), ..., basis(p) is exactly orthonormal in the
    quadrature inner product.
    """
    if not 1 <= j <= grid.p:
        raise ParameterError(f"basis index must lie in [1, {grid.p}], got {j}")
    if j == 1:
        values = np.ones(grid.p)
    else:
        values = math.sqrt(2.0) * np.cos((j - 1) * math.pi * grid.points)
    return GridFunction(grid, values)


def basis_matrix(grid: Grid, count: int) -> np.ndarray:
    """Rows 1..count of the cosine basis evaluated on the grid, as (count, p)."""
    return np.stack([basis(j, grid).values for j in range(1, count + 1)])


def slope_coefficients(n_terms: int) -> np.ndarray:
    """Basis coefficients of the true slope: 0.3, then 4 (-1)^(j+1) j^(-2)."""
    j = np.arange(1, n_terms + 1, dtype=float)
    coefs = 4.0 * (-1.0) ** (j + 1.0) * j**-2.0
    coefs[0] = 0.3
    return coefs


def true_slope(grid: Grid, n_terms: int = 50) -> GridFunction:
    """The true slope function as a finite cosine series."""
    if not 1 <= n_terms <= grid.p:
        raise ParameterError(f"need 1 <= n_terms <= p, got {n_terms}")
    return GridFunction(grid, slope_coefficients(n_terms) @ basis_matrix(grid, n_terms))


def gamma_sequence(spacing: str, alpha: float, count: int) -> np.ndarray:
    """Score scale coefficients gamma_j for the requested eigenvalue design.

    well_spaced:     gamma_j = (-1)^(j+1) j^(-alpha/2), so the covariance
                     eigenvalues j^(-alpha) are strictly separated.
    closely_spaced:  gamma_1 = 1; gamma_j = 0.2 (-1)^(j+1) (1 - 0.0001 j)
                     for 2 <= j <= 4; and for j = 5q + k with q >= 1 and
                     0 <= k <= 4, gamma_j = 0.2 (-1)^(j+1)
                     ((5q)^(-alpha/2) - 0.0001 k), which yields blocks of
                     five nearly tied eigenvalues.
    """
    if count < 1:
        raise ParameterError(f"need count >= 1, got {count}")
    if spacing == "well_spaced":
        j = np.arange(1, count + 1, dtype=float)
        return (-1.0) ** (j + 1.0) * j ** (-alpha / 2.0)
    if spacing == "closely_spaced":
        out = np.empty(count)
        out[0] = 1.0
        for idx in range(1, count):
            j = idx + 1
            sign = -1.0 if j % 2 == 0 else 1.0
            if j <= 4:
                out[idx] = 0.2 * sign * (1.0 - 0.0001 * j)
            else:
                q, k = divmod(j, 5)
                out[idx] = 0.2 * sign * ((5.0 * q) ** (-alpha / 2.0) - 0.0001 * k)
        return out
    raise ParameterError(f"spacing must be one of {SPACINGS}, got {spacing!r}")


@dataclass(frozen=True)
class TruthBundle:
    """Everything the data-generating process knows: true slope, score
    scales, covariance kernel and its sorted eigenvalues."""

    slope: GridFunction
    gamma: np.ndarray  # (J,) in basis order
    kernel: SymmetricKernel
    eigenvalues: np.ndarray  # gamma**2 sorted nonincreasing
    eigen_order: np.ndarray  # 0-based basis index of each sorted eigenvalue


def truth_bundle(config: SimConfig) -> TruthBundle:
    """Deterministic part of a scenario: slope, scales and true covariance."""
    grid = config.grid
    gamma = gamma_sequence(config.spacing, config.alpha, config.n_terms)
    B = basis_matrix(grid, config.n_terms)
    # Two-operand accumulation keeps the kernel exactly symmetric.
    scaled = np.abs(gamma)[:, None] * B
    kernel = np.einsum("ju,jv->uv", scaled, scaled)
    kappa = gamma**2
    order = np.argsort(-kappa, kind="stable")
    return TruthBundle(
        slope=true_slope(grid, config.n_terms),
        gamma=gamma,
        kernel=SymmetricKernel(grid, kernel),
        eigenvalues=kappa[order],
        eigen_order=order,
    )


def draw_dataset(config: SimConfig) -> tuple[Dataset, TruthBundle]:
    """Draw one dataset from the scenario, fully determined by config.seed."""
    truth = truth_bundle(config)
    grid = config.grid
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    scores = rng.uniform(-SQRT3, SQRT3, size=(config.n, config.n_terms))
    noise = config.sigma_eps * rng.standard_normal(config.n)
    B = basis_matrix(grid, config.n_terms)
    xmat = np.einsum("nj,jp->np", scores * truth.gamma, B)
    y = np.einsum("np,p->n", xmat, truth.slope.values) / config.p + noise
    X = tuple(GridFunction(grid, row) for row in xmat)
    return Dataset(grid=grid, X=X, Y=y), truth


_METADATA_RE = re.compile(r"^# grid=midpoint p=(\d+)$")


def dataset_to_csv(data: Dataset) -> str:
    """Dataset as CSV text: a '# grid=midpoint p=<p>' metadata line, a
    header 'x_1,...,x_p,y', then one row per observation (17 significant
    digits)."""
    p = data.grid.p
    header = ",".join([f"x_{i}" for i in range(1, p + 1)] + ["y"])
    lines = [f"# grid=midpoint p={p}", header]
    for x, y in zip(data.X, data.Y):
        lines.append(",".join(f"{v:.17g}" for v in x.values) + f",{y:.17g}")
    return "\n".join(lines) + "\n"


def dataset_from_csv(
    text: str, require_y: bool = True
) -> tuple[Grid, tuple[GridFunction, ...], np.ndarray | None]:
    """Parse dataset CSV text back into grid, covariates and responses.

    With ``require_y=False`` the y column may be absent, in which case the
    returned responses are None (as needed when predicting on new curves).
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise DataFormatError("dataset CSV is empty")
    match = _METADATA_RE.match(lines[0])
    if match is None:
        raise DataFormatError(
            "dataset CSV must start with a '# grid=midpoint p=<p>' metadata line"
        )
    p = int(match.group(1))
    grid = Grid(p)
    if len(lines) < 2:
        raise DataFormatError("dataset CSV is missing its header line")
    x_names = [f"x_{i}" for i in range(1, p + 1)]
    header = lines[1].split(",")
    if header == x_names + ["y"]:
        has_y = True
    elif header == x_names and not require_y:
        has_y = False
    else:
        raise DataFormatError(
            f"dataset CSV header does not match the declared grid size p={p}"
        )
    n_cols = p + 1 if has_y else p
    X: list[GridFunction] = []
    ys: list[float] = []
    for lineno, line in enumerate(lines[2:], start=3):
        fields = line.split(",")
        if len(fields) != n_cols:
            raise DataFormatError(
                f"dataset CSV line {lineno}: expected {n_cols} columns, got {len(fields)}"
            )
        try:
            row = [float(f) for f in fields]
        except ValueError as exc:
            raise DataFormatError(f"dataset CSV line {lineno}: non-numeric cell") from exc
        X.append(GridFunction(grid, np.array(row[:p])))
        if has_y:
            ys.append(row[p])
    return grid, tuple(X), (np.array(ys) if has_y else None)
