"""Slope and intercept estimation for the scalar-on-function linear model.

Given pairs (X_i, Y_i) with functional covariates, the centred second
moments are the empirical covariance kernel and the empirical
cross-covariance function.  Two slope estimators are provided:

* ``pca_fit`` inverts the covariance on the span of its top m empirical
  eigenfunctions (spectral cutoff; m is the smoothing parameter);
* ``ridge_fit`` solves the Tikhonov-regularised operator equation
  (cov + rho * identity) slope = cross_cov (rho is the smoothing
  parameter), via a dense linear solve.  The equivalent spectral-filter
  form over all p eigenpairs is exposed separately as
  ``ridge_filter_slope`` so the two routes can be checked against each
  other.

The intercept is always the average of Y_i minus the fitted functional
term, which for centred moments reduces to y_mean - <slope, x_mean>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DataFormatError,
    DimensionMismatchError,
    InsufficientDataError,
    ParameterError,
    RankError,
)
from .grid import Grid, GridFunction, SymmetricKernel, inner_product
from .spectral import EigenSystem, eigendecompose

__all__ = [
    "Dataset",
    "CenteredMoments",
    "FittedModel",
    "compute_moments",
    "usable_rank",
    "pca_fit",
    "ridge_fit",
    "ridge_filter_slope",
    "estimate_intercept",
    "predict",
    "model_to_text",
    "model_from_text",
]

# An empirical eigenvalue is usable for spectral-cutoff inversion only if it
# exceeds this fraction of the leading eigenvalue.
PCA_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class Dataset:
    """n functional observations with scalar responses."""

    grid: Grid
    X: tuple[GridFunction, ...]
    Y: np.ndarray  # (n,)

    def __post_init__(self) -> None:
        X = tuple(self.X)
        Y = np.array(self.Y, dtype=float)
        if len(X) < 2:
            raise InsufficientDataError(f"need at least 2 observations, got {len(X)}")
        if Y.shape != (len(X),):
            raise DimensionMismatchError(
                f"Y has shape {Y.shape}, expected ({len(X)},)"
            )
        if not np.all(np.isfinite(Y)):
            raise ParameterError("Y contains non-finite entries")
        for x in X:
            if x.grid != self.grid:
                raise DimensionMismatchError("all X_i must share the dataset grid")
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return len(self.X)

    def x_matrix(self) -> np.ndarray:
        """Observations stacked as an (n, p) matrix."""
        return np.stack([x.values for x in self.X])


@dataclass(frozen=True)
class CenteredMoments:
    """Empirical means plus centred covariance and cross-covariance."""

    x_mean: GridFunction
    y_mean: float
    cov: SymmetricKernel
    cross_cov: GridFunction

    def __post_init__(self) -> None:
        if self.cov.grid != self.x_mean.grid or self.cross_cov.grid != self.x_mean.grid:
            raise DimensionMismatchError("moment components live on different grids")

    @property
    def grid(self) -> Grid:
        return self.x_mean.grid


@dataclass(frozen=True)
class FittedModel:
    """A fitted slope function with its intercept and tuning metadata."""

    slope: GridFunction
    intercept: float
    method: str  # "pca" | "ridge"
    parameter: float  # the cutoff m (as a float) or the ridge rho
    spectrum: EigenSystem | None = None


def compute_moments(data: Dataset) -> CenteredMoments:
    """Empirical means, covariance kernel and cross-covariance function.

    The covariance is accumulated from centred outer products (einsum with a
    fixed reduction order), which keeps it exactly symmetric and makes the
    result independent of BLAS threading.
    """
    n, p = data.n, data.grid.p
    xmat = data.x_matrix()
    x_mean = np.mean(xmat, axis=0)
    y_mean = float(np.mean(data.Y))
    xc = xmat - x_mean
    yc = data.Y - y_mean
    cov = np.einsum("ni,nj->ij", xc, xc) / n
    cross = np.einsum("ni,n->i", xc, yc) / n
    return CenteredMoments(
        x_mean=GridFunction(data.grid, x_mean),
        y_mean=y_mean,
        cov=SymmetricKernel(data.grid, cov),
        cross_cov=GridFunction(data.grid, cross),
    )


def usable_rank(spectrum: EigenSystem) -> int:
    """Number of leading eigenvalues safely above the numerical-null cutoff."""
    top = float(spectrum.eigenvalues[0])
    if top <= 0.0:
        return 0
    return int(np.sum(spectrum.eigenvalues > PCA_RANK_RTOL * top))


def _intercept_from_moments(slope: GridFunction, moments: CenteredMoments) -> float:
    return moments.y_mean - inner_product(slope, moments.x_mean)


def pca_fit(
    moments: CenteredMoments, m: int, spectrum: EigenSystem | None = None
) -> FittedModel:
    """Spectral-cutoff slope estimate using the top m empirical eigenpairs.

    The slope is the sum over j <= m of (<cross_cov, v_j> / eigenvalue_j)
    * v_j.  Terms are accumulated in ascending j so the estimates are
    exactly nested in m.  A precomputed ``spectrum`` of ``moments.cov`` may
    be passed to avoid repeated eigendecompositions.
    """
    if spectrum is None:
        spectrum = eigendecompose(moments.cov)
    rank = usable_rank(spectrum)
    if not 1 <= m <= rank:
        raise RankError(
            f"cutoff m={m} outside the usable spectral rank; "
            f"largest admissible m is {rank}"
        )
    p = moments.grid.p
    g = moments.cross_cov.values
    slope = np.zeros(p)
    for j in range(m):
        coef = float(np.dot(spectrum.vectors[:, j], g)) / p / spectrum.eigenvalues[j]
        slope = slope + coef * spectrum.vectors[:, j]
    slope_fn = GridFunction(moments.grid, slope)
    return FittedModel(
        slope=slope_fn,
        intercept=_intercept_from_moments(slope_fn, moments),
        method="pca",
        parameter=float(m),
        spectrum=spectrum,
    )


def ridge_fit(
    moments: CenteredMoments, rho: float, spectrum: EigenSystem | None = None
) -> FittedModel:
    """Tikhonov-regularised slope estimate.

    Solves the p x p system (cov / p + rho * identity) slope = cross_cov,
    the grid discretisation of the regularised operator equation.  ``rho``
    must be strictly positive, which makes the system nonsingular.
    """
    if not rho > 0.0:
        raise ParameterError(f"ridge parameter must be positive, got {rho}")
    p = moments.grid.p
    system = moments.cov.values / p + rho * np.eye(p)
    slope = np.linalg.solve(system, moments.cross_cov.values)
    slope_fn = GridFunction(moments.grid, slope)
    if spectrum is None:
        spectrum = eigendecompose(moments.cov)
    return FittedModel(
        slope=slope_fn,
        intercept=_intercept_from_moments(slope_fn, moments),
        method="ridge",
        parameter=float(rho),
        spectrum=spectrum,
    )


def ridge_filter_slope(
    spectrum: EigenSystem, cross_cov: GridFunction, rho: float
) -> GridFunction:
    """Ridge slope via the spectral filter over all p eigenpairs.

    Independent route to the same estimate as ``ridge_fit``: the coefficient
    on eigenfunction j is <cross_cov, v_j> / (eigenvalue_j + rho).
    """
    if not rho > 0.0:
        raise ParameterError(f"ridge parameter must be positive, got {rho}")
    if spectrum.grid != cross_cov.grid:
        raise DimensionMismatchError("spectrum and cross-covariance grids differ")
    p = spectrum.grid.p
    coords = spectrum.vectors.T @ cross_cov.values / p
    coefs = coords / (spectrum.eigenvalues + rho)
    return GridFunction(spectrum.grid, spectrum.vectors @ coefs)


def estimate_intercept(slope: GridFunction, data: Dataset) -> float:
    """Average of Y_i minus the fitted functional term <slope, X_i>."""
    if slope.grid != data.grid:
        raise DimensionMismatchError("slope and data live on different grids")
    fitted = data.x_matrix() @ slope.values / data.grid.p
    return float(np.mean(data.Y - fitted))


def predict(model: FittedModel, x_new: GridFunction) -> float:
    """Plug-in prediction: intercept + <slope, x_new>."""
    return model.intercept + inner_product(model.slope, x_new)


def model_to_text(model: FittedModel) -> str:
    """Serialize a fitted model to its plain-text file format.

    Four header lines (method, tuning parameter, intercept, grid size)
    followed by the p slope values, one per line, 17 significant digits.
    """
    if model.method == "pca":
        param_line = f"m={int(model.parameter)}"
    elif model.method == "ridge":
        param_line = f"rho={model.parameter:.17g}"
    else:
        raise ParameterError(f"unknown method {model.method!r}")
    lines = [
        f"method={model.method}",
        param_line,
        f"intercept={model.intercept:.17g}",
        f"p={model.slope.grid.p}",
    ]
    lines.extend(f"{v:.17g}" for v in model.slope.values)
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> FittedModel:
    """Parse a model file produced by ``model_to_text``."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise DataFormatError("model file truncated: missing header lines")

    def _field(line: str, key: str) -> str:
        prefix = key + "="
        if not line.startswith(prefix):
            raise DataFormatError(f"model file: expected '{prefix}...', got {line!r}")
        return line[len(prefix):]

    method = _field(lines[0], "method")
    if method == "pca":
        parameter = float(int(_field(lines[1], "m")))
    elif method == "ridge":
        parameter = float(_field(lines[1], "rho"))
    else:
        raise DataFormatError(f"model file: unknown method {method!r}")
    try:
        intercept = float(_field(lines[2], "intercept"))
        p = int(_field(lines[3], "p"))
        values = [float(line) for line in lines[4:] if line.strip()]
    except ValueError as exc:
        raise DataFormatError(f"model file: non-numeric field ({exc})") from exc
    if len(values) != p:
        raise DataFormatError(
            f"model file: expected {p} slope values, found {len(values)}"
        )
    grid = Grid(p)
    return FittedModel(
        slope=GridFunction(grid, np.array(values)),
        intercept=intercept,
        method=method,
        parameter=parameter,
    )
