"""Pseudo datasets and their solution paths.

Builds V leave-one-fold-out (or bootstrap) copies of a dataset, fits a
lasso path on each, and constructs the shared evaluation grids used by
the selection criteria. Each pseudo path is anchored at its own entry
penalty; alignment across paths happens downstream through the grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, Standardization, prepare_dataset
from .errors import DegenerateGridError
from .lasso import SolutionPath, compute_path

__all__ = [
    "FoldAssignment",
    "PseudoPathSet",
    "TauGrid",
    "LambdaGrid",
    "FractionGrid",
    "make_folds",
    "pseudo_paths",
    "bootstrap_pseudo_paths",
    "common_tau_grid",
    "common_lambda_grid",
    "fraction_grid",
]

SCHEME_CV = "cv_folds"
SCHEME_BOOTSTRAP = "bootstrap"


@dataclass(frozen=True)
class FoldAssignment:
    """Balanced random partition of n rows into v folds."""

    labels: np.ndarray
    v: int
    seed: int

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be 1-d")
        counts = np.bincount(labels, minlength=self.v)
        if labels.min(initial=0) < 0 or labels.max(initial=0) >= self.v:
            raise ValueError("labels out of range")
        if counts.min() == 0:
            raise ValueError("every fold must be nonempty")
        if counts.max() - counts.min() > 1:
            raise ValueError("fold sizes must differ by at most 1")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def rows_in_fold(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)

    def rows_not_in_fold(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels != k)


@dataclass(frozen=True)
class PseudoPathSet:
    """Solution paths fit on V perturbed copies of one dataset.

    ``transforms`` is present only when each pseudo dataset was
    re-standardized after row removal; it maps the parent design into
    each fold's fitting coordinates.
    """

    paths: tuple[SolutionPath, ...]
    scheme: str
    folds: FoldAssignment | None = None
    transforms: tuple[Standardization, ...] | None = None

    def __post_init__(self):
        if self.scheme not in (SCHEME_CV, SCHEME_BOOTSTRAP):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == SCHEME_CV:
            if self.folds is None:
                raise ValueError("cv_folds scheme requires a fold assignment")
            if len(self.paths) != self.folds.v:
                raise ValueError("path count does not match fold count")
        if self.transforms is not None and len(self.transforms) != len(self.paths):
            raise ValueError("transform count does not match path count")

    @property
    def v(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class TauGrid:
    """Equally spaced L1-norm grid on the intersection of path domains."""

    values: np.ndarray
    tau_upper: float

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.shape[0] < 2:
            raise ValueError("grid needs at least 2 values")
        if values[0] != 0.0 or values[-1] != self.tau_upper:
            raise ValueError("grid must span [0, tau_upper]")
        steps = np.diff(values)
        if np.any(np.abs(steps - steps[0]) > 1e-12 * max(1.0, self.tau_upper)):
            raise ValueError("grid values must be equally spaced")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LambdaGrid:
    """Equally spaced penalty grid on the intersection of path domains."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.shape[0] < 2 or np.any(np.diff(values) <= 0):
            raise ValueError("lambda grid must be increasing with >= 2 values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class FractionGrid:
    """Equally spaced grid of L1-norm fractions of each saturated path."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values[0] != 0.0 or values[-1] != 1.0:
            raise ValueError("fraction grid must span [0, 1]")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def make_folds(n: int, v: int, seed: int) -> FoldAssignment:
    """Uniformly random balanced partition, reproducible for a seed."""
    if v < 2 or v > n:
        raise ValueError(f"need 2 <= v <= n, got v={v}, n={n}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    labels = np.empty(n, dtype=np.int64)
    labels[rng.permutation(n)] = np.arange(n) % v
    return FoldAssignment(labels=labels, v=v, seed=seed)


def _pseudo_dataset(dataset: Dataset, rows: np.ndarray,
                    restandardize: bool) -> tuple[Dataset, Standardization | None]:
    x = dataset.x[rows]
    y = dataset.y[rows]
    if restandardize:
        return prepare_dataset(x, y, standardize=True, intercept=True)
    return Dataset(x, y), None


def pseudo_paths(dataset: Dataset, folds: FoldAssignment,
                 grid_size: int = 100, lambda_min_ratio: float = 1e-3,
                 restandardize: bool = False) -> PseudoPathSet:
    """Fit one solution path per leave-one-fold-out copy of the data.

    Path k is fit on the rows outside fold k, on its own entry-anchored
    penalty grid. With ``restandardize`` each pseudo dataset is centered
    and rescaled after row removal and the applied transforms are kept on
    the result.
    """
    if folds.n != dataset.n:
        raise ValueError(f"fold assignment covers {folds.n} rows, dataset has {dataset.n}")
    paths = []
    transforms = []
    for k in range(folds.v):
        sub, tr = _pseudo_dataset(dataset, folds.rows_not_in_fold(k), restandardize)
        paths.append(_fit_tagged(sub, grid_size, lambda_min_ratio, fold=k))
        transforms.append(tr)
    return PseudoPathSet(paths=tuple(paths), scheme=SCHEME_CV, folds=folds,
                         transforms=tuple(transforms) if restandardize else None)


def bootstrap_pseudo_paths(dataset: Dataset, v: int, seed: int,
                           grid_size: int = 100, lambda_min_ratio: float = 1e-3,
                           restandardize: bool = False) -> PseudoPathSet:
    """Fit one solution path per bootstrap resample of the data rows."""
    if v < 2:
        raise ValueError(f"need v >= 2, got {v}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    paths = []
    transforms = []
    for k in range(v):
        rows = rng.integers(0, dataset.n, size=dataset.n)
        sub, tr = _pseudo_dataset(dataset, rows, restandardize)
        paths.append(_fit_tagged(sub, grid_size, lambda_min_ratio, fold=k))
        transforms.append(tr)
    return PseudoPathSet(paths=tuple(paths), scheme=SCHEME_BOOTSTRAP,
                         transforms=tuple(transforms) if restandardize else None)


def _fit_tagged(sub: Dataset, grid_size: int, lambda_min_ratio: float,
                fold: int) -> SolutionPath:
    from .errors import ConvergenceError
    try:
        return compute_path(sub, grid_size=grid_size,
                            lambda_min_ratio=lambda_min_ratio)
    except ConvergenceError as err:
        err.fold = fold
        raise


def common_tau_grid(pset: PseudoPathSet, m: int = 1000) -> TauGrid:
    """Equally spaced L1-norm grid on the intersection of path domains.

    The upper end is the smallest saturated L1 norm across the pseudo
    paths, so every grid value is queryable on every path.
    """
    if m < 2:
        raise ValueError(f"need m >= 2, got {m}")
    tau_upper = min(p.max_tau for p in pset.paths)
    if tau_upper <= 0.0:
        raise DegenerateGridError("all pseudo paths are identically zero; "
                                  "no usable tau domain")
    return TauGrid(values=np.linspace(0.0, tau_upper, m), tau_upper=tau_upper)


def common_lambda_grid(pset: PseudoPathSet, m: int = 1000) -> LambdaGrid:
    """Equally spaced penalty grid on the intersection of path domains."""
    if m < 2:
        raise ValueError(f"need m >= 2, got {m}")
    lo = max(float(p.lambdas[-1]) for p in pset.paths)
    hi = min(float(p.lambdas[0]) for p in pset.paths)
    if not lo < hi:
        raise DegenerateGridError("pseudo path penalty domains do not overlap")
    return LambdaGrid(values=np.linspace(lo, hi, m))


def fraction_grid(m: int = 1000) -> FractionGrid:
    """Equally spaced grid of saturated-norm fractions on [0, 1]."""
    if m < 2:
        raise ValueError(f"need m >= 2, got {m}")
    return FractionGrid(values=np.linspace(0.0, 1.0, m))
