"""Dataset container and standardization helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = ["Dataset", "Standardization", "prepare_dataset", "original_scale"]

_STD_TOL = 1e-10


def _as_float_matrix(a, name):
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``x`` (n rows, p features) plus response ``y``.

    ``standardized`` asserts that every column of ``x`` has zero mean and
    unit empirical standard deviation and that ``y`` has zero mean (all to
    1e-10). ``intercept`` records that the data were centered, so an
    intercept on the original scale can be recovered later.
    """

    x: np.ndarray
    y: np.ndarray
    standardized: bool = False
    intercept: bool = False

    def __post_init__(self):
        x = _as_float_matrix(self.x, "x")
        y = _as_float_matrix(self.y, "y")
        if x.ndim != 2:
            raise DataError(f"x must be 2-d, got shape {x.shape}")
        if y.ndim != 1:
            raise DataError(f"y must be 1-d, got shape {y.shape}")
        n, p = x.shape
        if n < 2 or p < 1:
            raise DataError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if y.shape[0] != n:
            raise DataError(f"x has {n} rows but y has {y.shape[0]} entries")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.standardized:
            mu = x.mean(axis=0)
            sd = x.std(axis=0)
            if np.abs(mu).max() > _STD_TOL or np.abs(sd - 1.0).max() > _STD_TOL:
                raise DataError("standardized flag set but x columns are not "
                                "zero-mean unit-sd")
            if abs(float(y.mean())) > _STD_TOL:
                raise DataError("standardized flag set but y is not centered")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class Standardization:
    """Centering/scaling applied to raw data, kept for back-transforms."""

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float


def prepare_dataset(x, y, *, standardize: bool = True,
                    intercept: bool = True) -> tuple[Dataset, Standardization]:
    """Build a fitting-ready :class:`Dataset` from raw arrays.

    ``intercept`` centers ``x`` columns and ``y``; ``standardize``
    additionally divides each column by its empirical standard deviation.
    Constant columns keep scale 1 so they survive as all-zero columns
    instead of dividing by zero. Returns the dataset together with the
    applied transform.
    """
    x = _as_float_matrix(x, "x")
    y = _as_float_matrix(y, "y")
    if x.ndim != 2 or y.ndim != 1:
        raise DataError("expected a 2-d design matrix and 1-d response")
    p = x.shape[1]
    x_mean = x.mean(axis=0) if intercept else np.zeros(p)
    xt = x - x_mean if intercept else x.copy()
    if standardize:
        sd = np.sqrt(((x - x.mean(axis=0)) ** 2).mean(axis=0))
        x_scale = np.where(sd > 0, sd, 1.0)
        xt = xt / x_scale
        all_scaled = bool(np.all(sd > 0))
    else:
        x_scale = np.ones(p)
        all_scaled = False
    y_mean = float(y.mean()) if intercept else 0.0
    yt = y - y_mean
    dataset = Dataset(xt, yt,
                      standardized=standardize and intercept and all_scaled,
                      intercept=intercept)
    return dataset, Standardization(x_mean=x_mean, x_scale=x_scale, y_mean=y_mean)


def original_scale(beta: np.ndarray, transform: Standardization) -> tuple[np.ndarray, float]:
    """Map coefficients fit on transformed data back to the raw scale.

    Returns ``(beta_raw, intercept)`` such that predictions
    ``x @ beta_raw + intercept`` reproduce the transformed-scale fit.
    """
    beta_raw = np.asarray(beta, dtype=np.float64) / transform.x_scale
    intercept = transform.y_mean - float(transform.x_mean @ beta_raw)
    return beta_raw, intercept
