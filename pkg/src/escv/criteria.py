"""Selection criteria over a solution path family.

Evaluates estimation-stability (ES), cross-validation error, and BIC
curves on a shared grid, and applies the corresponding selection rules.
The ES criterion measures how much the V pseudo fitted-value vectors
disagree at each grid point, normalized by the squared size of their
mean; the ESCV rule picks a local minimum of that curve no larger than
the CV choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import UnsupportedSchemeError
from .lasso import (CoefficientVector, SolutionPath, coeff_at_lambda,
                    coeff_at_tau, path_coefficients,
                    path_coefficients_at_lambdas)
from .resampling import (SCHEME_CV, FractionGrid, LambdaGrid, PseudoPathSet,
                         TauGrid)

__all__ = [
    "CriterionCurve",
    "SelectionResult",
    "pseudo_fits",
    "sample_variance_metric",
    "pairwise_distance_metric",
    "es_value",
    "es_curve",
    "sample_variance_curve",
    "cv_curve",
    "select_cv",
    "select_escv",
    "select_bic",
]

ALIGN_L1 = "l1_norm"
ALIGN_LAMBDA = "lambda"
ALIGN_FRACTION = "l1_fraction"
ALIGNMENTS = (ALIGN_L1, ALIGN_LAMBDA, ALIGN_FRACTION)

KINDS = ("es", "sample_variance", "cv_error", "bic")
METHODS = ("escv", "cv", "bic")
ESCV_RULES = ("min_es", "first_dip")

# mean fitted values below this squared norm make the ES ratio undefined
ES_MEAN_FLOOR = 1e-12

_GRID_FOR_ALIGNMENT = {ALIGN_L1: TauGrid, ALIGN_LAMBDA: LambdaGrid,
                       ALIGN_FRACTION: FractionGrid}


@dataclass(frozen=True)
class CriterionCurve:
    """A selection criterion evaluated on a common grid.

    ``values`` holds NaN at grid points where the criterion is undefined
    (and -inf for saturated BIC points); ``defined`` flags the finite
    entries.
    """

    grid: TauGrid | LambdaGrid | FractionGrid
    values: np.ndarray
    defined: np.ndarray
    kind: str
    alignment: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.alignment not in ALIGNMENTS:
            raise ValueError(f"unknown alignment {self.alignment!r}")
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        defined = np.ascontiguousarray(self.defined, dtype=bool)
        m = self.grid.values.shape[0]
        if values.shape != (m,) or defined.shape != (m,):
            raise ValueError("curve arrays do not match the grid")
        if np.any(defined & ~np.isfinite(values)):
            raise ValueError("defined entries must be finite")
        if self.kind in ("es", "sample_variance", "cv_error"):
            if np.any(defined & (values < 0)):
                raise ValueError(f"{self.kind} values must be nonnegative")
        values.flags.writeable = False
        defined.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "defined", defined)


@dataclass(frozen=True)
class SelectionResult:
    """A chosen regularization point with its coefficients and context."""

    method: str
    tau: float
    coefficients: CoefficientVector
    support: tuple[int, ...]
    curve: CriterionCurve
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.support != self.coefficients.support:
            raise ValueError("support does not match the nonzero coefficients")
        cv_tau = self.diagnostics.get("cv_tau")
        if self.method == "escv" and cv_tau is not None and self.tau > cv_tau:
            raise ValueError("escv choice exceeded the cv choice")

    @property
    def model_size(self) -> int:
        return len(self.support)


def _fold_design(dataset: Dataset, pset: PseudoPathSet, k: int,
                 rows: np.ndarray | None = None) -> np.ndarray:
    x = dataset.x if rows is None else dataset.x[rows]
    if pset.transforms is None or pset.transforms[k] is None:
        return x
    tr = pset.transforms[k]
    return (x - tr.x_mean) / tr.x_scale


def _fold_offset(pset: PseudoPathSet, k: int) -> float:
    if pset.transforms is None or pset.transforms[k] is None:
        return 0.0
    return pset.transforms[k].y_mean


def pseudo_fits(dataset: Dataset, pset: PseudoPathSet, tau: float) -> np.ndarray:
    """Fitted values of every pseudo solution at one grid point.

    Column k is the full design applied to path k's coefficients at
    ``tau`` (in the fold's own fitting coordinates when the pseudo data
    were re-standardized).
    """
    out = np.empty((dataset.n, pset.v))
    for k, path in enumerate(pset.paths):
        out[:, k] = _fold_design(dataset, pset, k) @ coeff_at_tau(path, tau).beta
    return out


def sample_variance_metric(fits: np.ndarray) -> float:
    """Mean squared deviation of the fit columns around their average."""
    fits = np.asarray(fits, dtype=np.float64)
    if fits.ndim != 2 or fits.shape[1] < 2:
        raise ValueError("need an n x V matrix with V >= 2")
    dev = fits - fits.mean(axis=1, keepdims=True)
    return float((dev * dev).sum() / fits.shape[1])


def pairwise_distance_metric(fits: np.ndarray) -> float:
    """Average squared distance over unordered pairs of fit columns."""
    fits = np.asarray(fits, dtype=np.float64)
    if fits.ndim != 2 or fits.shape[1] < 2:
        raise ValueError("need an n x V matrix with V >= 2")
    v = fits.shape[1]
    total = 0.0
    for k in range(v):
        for j in range(k + 1, v):
            d = fits[:, k] - fits[:, j]
            total += float(d @ d)
    return total / (v * (v - 1) / 2)


def es_value(fits: np.ndarray) -> float:
    """Stability ratio of one set of pseudo fits.

    Sample variance of the columns divided by the squared norm of their
    mean; NaN (undefined) when the mean fit is numerically zero, as at
    tau = 0.
    """
    fits = np.asarray(fits, dtype=np.float64)
    if fits.ndim != 2 or fits.shape[1] < 2:
        raise ValueError("need an n x V matrix with V >= 2")
    mean = fits.mean(axis=1)
    msq = float(mean @ mean)
    if msq < ES_MEAN_FLOOR:
        return float("nan")
    return sample_variance_metric(fits) / msq


def _stability_components(dataset: Dataset, pset: PseudoPathSet,
                          taus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-grid-point variance of pseudo fits and squared mean-fit norm."""
    v = pset.v
    fits = np.empty((v, dataset.n, taus.shape[0]))
    for k, path in enumerate(pset.paths):
        coefs = path_coefficients(path, taus)
        fits[k] = _fold_design(dataset, pset, k) @ coefs.T
    mean = fits.mean(axis=0)
    dev = fits - mean
    var = np.einsum("kim,kim->m", dev, dev) / v
    msq = np.einsum("im,im->m", mean, mean)
    return var, msq


def es_curve(dataset: Dataset, pset: PseudoPathSet, grid: TauGrid) -> CriterionCurve:
    """Stability ratio at every grid point (undefined where the mean fit
    vanishes)."""
    var, msq = _stability_components(dataset, pset, grid.values)
    defined = msq >= ES_MEAN_FLOOR
    values = np.full(grid.m, np.nan)
    values[defined] = var[defined] / msq[defined]
    return CriterionCurve(grid=grid, values=values, defined=defined,
                          kind="es", alignment=ALIGN_L1)


def sample_variance_curve(dataset: Dataset, pset: PseudoPathSet,
                          grid: TauGrid) -> CriterionCurve:
    """Unnormalized pseudo-fit variance at every grid point."""
    var, _ = _stability_components(dataset, pset, grid.values)
    return CriterionCurve(grid=grid, values=var,
                          defined=np.ones(grid.m, dtype=bool),
                          kind="sample_variance", alignment=ALIGN_L1)


def _fold_coefficients(path: SolutionPath, grid, alignment: str) -> np.ndarray:
    if alignment == ALIGN_L1:
        return path_coefficients(path, grid.values)
    if alignment == ALIGN_LAMBDA:
        return path_coefficients_at_lambdas(path, grid.values)
    return path_coefficients(path, grid.values * path.max_tau)


def cv_curve(dataset: Dataset, pset: PseudoPathSet, grid,
             alignment: str = ALIGN_L1) -> CriterionCurve:
    """Held-out squared prediction error at every grid point.

    Fold k's path is queried under the requested alignment and evaluated
    on the rows of fold k; errors are pooled over all n rows. Requires
    the cv_folds scheme (bootstrap resamples have no held-out rows).
    """
    if pset.scheme != SCHEME_CV:
        raise UnsupportedSchemeError("cv error requires cv_folds pseudo paths")
    if alignment not in ALIGNMENTS:
        raise ValueError(f"unknown alignment {alignment!r}")
    expected = _GRID_FOR_ALIGNMENT[alignment]
    if not isinstance(grid, expected):
        raise TypeError(f"{alignment} alignment expects a {expected.__name__}")
    m = grid.values.shape[0]
    errs = np.zeros(m)
    for k, path in enumerate(pset.paths):
        rows = pset.folds.rows_in_fold(k)
        coefs = _fold_coefficients(path, grid, alignment)
        preds = _fold_design(dataset, pset, k, rows) @ coefs.T + _fold_offset(pset, k)
        resid = dataset.y[rows][:, None] - preds
        errs += (resid * resid).sum(axis=0)
    values = errs / dataset.n
    return CriterionCurve(grid=grid, values=values,
                          defined=np.ones(m, dtype=bool),
                          kind="cv_error", alignment=alignment)


def _full_path_coefficient(full_path: SolutionPath, index_value: float,
                           alignment: str) -> tuple[CoefficientVector, bool]:
    """Coefficients on the full-data path at a selected grid value.

    Returns the vector and a flag marking whether the query had to be
    clamped into the full path's domain (possible when the pseudo-path
    intersection extends past it).
    """
    if alignment == ALIGN_LAMBDA:
        if index_value >= full_path.lambdas[0]:
            p = full_path.betas.shape[1]
            return CoefficientVector(beta=np.zeros(p), tau=0.0,
                                     lam=float(index_value)), False
        lo = float(full_path.lambdas[-1])
        if index_value < lo:
            return coeff_at_lambda(full_path, lo), True
        return coeff_at_lambda(full_path, index_value), False
    tau = index_value if alignment == ALIGN_L1 else index_value * full_path.max_tau
    if tau > full_path.max_tau:
        return coeff_at_tau(full_path, full_path.max_tau), True
    return coeff_at_tau(full_path, tau), False


def select_cv(curve: CriterionCurve, full_path: SolutionPath) -> SelectionResult:
    """Global minimizer of a cv_error curve, most regularized on ties.

    The reported coefficients come from the full-data path at the chosen
    grid value under the curve's alignment.
    """
    if curve.kind != "cv_error":
        raise ValueError("select_cv needs a cv_error curve")
    order = np.arange(curve.values.shape[0])
    if curve.alignment == ALIGN_LAMBDA:
        order = order[::-1]  # largest penalty first
    best = None
    for i in order:
        if not curve.defined[i]:
            continue
        if best is None or curve.values[i] < curve.values[best]:
            best = i
    if best is None:
        raise ValueError("cv curve has no defined values")
    index_value = float(curve.grid.values[best])
    coef, clamped = _full_path_coefficient(full_path, index_value, curve.alignment)
    if curve.alignment == ALIGN_L1:
        tau = index_value  # grid member, exactly
    elif curve.alignment == ALIGN_FRACTION:
        tau = index_value * full_path.max_tau
    else:
        tau = coef.tau
    return SelectionResult(
        method="cv", tau=tau, coefficients=coef, support=coef.support,
        curve=curve,
        diagnostics={"index_value": index_value, "grid_index": int(best),
                     "alignment": curve.alignment, "clamped": clamped})


def select_escv(curve: CriterionCurve, cv_tau: float, full_path: SolutionPath,
                rule: str = "min_es") -> SelectionResult:
    """Pick a local minimum of the stability curve below the CV choice.

    Candidates are interior grid points with defined neighbors that sit
    at the leftmost point of a (possibly flat) local minimum, restricted
    to ``0 < tau <= cv_tau``. ``min_es`` takes the candidate with the
    smallest curve value (ties to the smaller tau); ``first_dip`` takes
    the smallest-tau candidate. With no candidates the CV choice is
    returned with a fallback flag.
    """
    if curve.kind != "es":
        raise ValueError("select_escv needs an es curve")
    if rule not in ESCV_RULES:
        raise ValueError(f"unknown escv rule {rule!r}")
    t = curve.grid.values
    v = curve.values
    d = curve.defined
    ok = (d[1:-1] & d[:-2] & d[2:]
          & (v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:])
          & (t[1:-1] > 0) & (t[1:-1] <= cv_tau))
    candidates = np.flatnonzero(ok) + 1
    diagnostics = {"cv_tau": float(cv_tau), "rule": rule,
                   "local_minima": [float(t[i]) for i in candidates],
                   "fallback": candidates.size == 0}
    if candidates.size == 0:
        tau = float(cv_tau)
    else:
        if rule == "min_es":
            pick = candidates[int(np.argmin(v[candidates]))]
        else:
            pick = candidates[0]
        tau = float(t[pick])
        diagnostics["grid_index"] = int(pick)
        diagnostics["es_value"] = float(v[pick])
    diagnostics["index_value"] = tau
    coef, clamped = _full_path_coefficient(full_path, tau, ALIGN_L1)
    diagnostics["clamped"] = clamped
    # tau is the selected grid value (or exactly cv_tau on fallback), so
    # the escv <= cv dominance holds as float comparison, not just to ulp
    return SelectionResult(method="escv", tau=tau, coefficients=coef,
                           support=coef.support, curve=curve,
                           diagnostics=diagnostics)


def select_bic(dataset: Dataset, full_path: SolutionPath,
               grid: TauGrid) -> SelectionResult:
    """Minimize n*log(RSS/n) + df*log(n) over the grid, df = support size.

    Saturated points (RSS = 0) score -inf and win immediately; the result
    is flagged. Ties go to the smaller tau.
    """
    n = dataset.n
    taus = np.minimum(grid.values, full_path.max_tau)
    coefs = path_coefficients(full_path, taus)
    resid = dataset.y[:, None] - dataset.x @ coefs.T
    rss = np.einsum("im,im->m", resid, resid)
    df = (coefs != 0.0).sum(axis=1)
    with np.errstate(divide="ignore"):
        values = n * np.log(rss / n) + df * np.log(n)
    best = 0
    for i in range(1, values.shape[0]):
        if values[i] < values[best]:
            best = i
    defined = np.isfinite(values)
    curve = CriterionCurve(grid=grid, values=values, defined=defined,
                           kind="bic", alignment=ALIGN_L1)
    coef, clamped = _full_path_coefficient(full_path, float(grid.values[best]),
                                           ALIGN_L1)
    return SelectionResult(
        method="bic", tau=float(grid.values[best]), coefficients=coef,
        support=coef.support, curve=curve,
        diagnostics={"index_value": float(grid.values[best]),
                     "grid_index": int(best), "clamped": clamped,
                     "saturated": bool(rss[best] == 0.0)})
