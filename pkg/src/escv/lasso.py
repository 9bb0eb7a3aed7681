"""Pathwise lasso solver and L1-norm bookkeeping.

Solves ``min_b ||y - X b||_2^2 + lam * ||b||_1`` (no 1/n scaling) by
cyclic coordinate descent with warm starts along a geometric lambda
grid, and supports querying the fitted path at arbitrary L1 norms
(``tau``) or penalty values via local linear interpolation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _descent
from .data import Dataset
from .errors import ConvergenceError

__all__ = [
    "CoefficientVector",
    "SolutionPath",
    "NullResponseWarning",
    "lambda_zero",
    "fit_lasso",
    "compute_path",
    "coeff_at_tau",
    "coeff_at_lambda",
    "path_coefficients",
    "path_coefficients_at_lambdas",
    "kkt_residual",
    "objective_value",
]

SOLVER_TOL = 1e-8
MAX_CYCLES = 100_000
KKT_REL_TOL = 1e-6
KKT_ABS_TOL = 1e-8
_L1_MATCH_TOL = 1e-12


class NullResponseWarning(UserWarning):
    """Response is identically zero (or orthogonal to every feature)."""


@dataclass(frozen=True)
class CoefficientVector:
    """A single lasso solution: coefficients, their L1 norm, and the
    penalty that produced them (``lam`` is None for tau-interpolated
    vectors, which do not correspond to a solved penalty value)."""

    beta: np.ndarray
    tau: float
    lam: float | None = None

    def __post_init__(self):
        beta = np.ascontiguousarray(self.beta, dtype=np.float64)
        beta.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        l1 = float(np.abs(beta).sum())
        if abs(self.tau - l1) > _L1_MATCH_TOL * max(1.0, self.tau):
            raise ValueError(f"tau={self.tau} does not match ||beta||_1={l1}")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.beta))


@dataclass(frozen=True)
class SolutionPath:
    """A fitted lasso path on one dataset.

    ``lambdas`` is strictly decreasing with ``lambdas[0] = lambda_zero``
    (entry point of the path, all-zero solution), ``betas[g]`` is the
    solution at ``lambdas[g]`` and ``taus[g]`` its L1 norm.
    ``nonmonotone`` lists grid indices g where ``taus[g+1] < taus[g]``,
    which can happen on strongly correlated designs.
    """

    lambdas: np.ndarray
    betas: np.ndarray
    taus: np.ndarray
    lambda_zero: float
    nonmonotone: tuple[int, ...] = field(default=())

    def __post_init__(self):
        lambdas = np.ascontiguousarray(self.lambdas, dtype=np.float64)
        betas = np.ascontiguousarray(self.betas, dtype=np.float64)
        taus = np.ascontiguousarray(self.taus, dtype=np.float64)
        if betas.ndim != 2 or lambdas.ndim != 1 or taus.ndim != 1:
            raise ValueError("malformed path arrays")
        g = lambdas.shape[0]
        if betas.shape[0] != g or taus.shape[0] != g or g < 2:
            raise ValueError("path arrays disagree on grid size")
        if np.any(np.diff(lambdas) >= 0) or lambdas[-1] <= 0:
            raise ValueError("lambda grid must be strictly decreasing and positive")
        if taus[0] != 0.0:
            raise ValueError("path must enter at tau = 0")
        l1 = np.abs(betas).sum(axis=1)
        if np.any(np.abs(taus - l1) > _L1_MATCH_TOL * np.maximum(1.0, taus)):
            raise ValueError("taus do not match coefficient L1 norms")
        for arr in (lambdas, betas, taus):
            arr.flags.writeable = False
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "taus", taus)

    @property
    def grid_size(self) -> int:
        return self.lambdas.shape[0]

    @property
    def max_tau(self) -> float:
        return float(self.taus.max())


def lambda_zero(dataset: Dataset) -> float:
    """Smallest penalty at which the all-zero vector is optimal.

    Equals ``2 * max_j |x_j . y|``. Returns 0 (with a
    :class:`NullResponseWarning`) when the response is identically zero
    or orthogonal to every column.
    """
    corr = dataset.x.T @ dataset.y
    lam0 = 2.0 * float(np.abs(corr).max())
    if lam0 == 0.0:
        warnings.warn("response carries no signal for any feature; the "
                      "lasso path is identically zero", NullResponseWarning,
                      stacklevel=2)
    return lam0


def _kkt_target(lam: float, n: int, p: int) -> float:
    if lam > 0.0:
        return KKT_REL_TOL * lam
    # lam == 0: the OLS gradient can only be driven to zero when the
    # problem is overdetermined.
    return KKT_ABS_TOL if n > p else np.inf


def _support_polish(gram: np.ndarray, q: np.ndarray, yy: float, lam: float,
                    beta: np.ndarray, n: int, x: np.ndarray,
                    max_solves: int = 120) -> np.ndarray:
    """Active-set refinement of the warm start before the certifying descent.

    Solves the stationarity system on the working support, taking partial
    steps to the first zero crossing (dropping that coordinate) until the
    sign pattern is feasible, then admits the worst off-support violator
    and repeats. Saturated working sets (one more coordinate than rows)
    advance by a fit-preserving slide along the design null direction to
    the best zero crossing. Returns the refined point only if it does not
    increase the penalized objective; plain coordinate descent always
    runs afterwards, so this is a warm-start booster, never a certificate.
    """
    def objective(b):
        return float(b @ (gram @ b) - 2.0 * (q @ b) + yy + lam * np.abs(b).sum())

    def slide(active, cur, signs):
        # moving along null(x[:, active]) keeps the fit fixed, so the
        # objective changes only through the penalty; take the crossing
        # that lowers it most and drop the crossing coordinate
        null = np.linalg.svd(x[:, active], full_matrices=True)[2][-1]
        penalty = lam * np.abs(cur).sum()
        best = None
        for direction in (null, -null):
            movable = (cur != 0.0) & (np.sign(direction) == -signs) & (direction != 0.0)
            if not np.any(movable):
                continue
            t = np.full(cur.shape, np.inf)
            t[movable] = -cur[movable] / direction[movable]
            t_hit = float(t.min())
            cand = cur + t_hit * direction
            cand_pen = lam * np.abs(cand).sum()
            if cand_pen < penalty and (best is None or cand_pen < best[0]):
                best = (cand_pen, cand, t <= t_hit)
        if best is None:
            return None
        _, cand, crossed = best
        cand[crossed] = 0.0
        keep = ~crossed
        return active[keep], cand[keep], np.sign(cand[keep])

    p = beta.shape[0]
    start_obj = objective(beta)
    original = beta
    active = np.flatnonzero(beta != 0.0)
    cur = beta[active].copy()
    signs = np.sign(cur)
    solves = 0
    stuck = False
    while solves < max_solves and not stuck:
        # reach sign feasibility on the working set
        while active.size:
            if active.size > n:
                slid = slide(active, cur, signs)
                if slid is None:
                    stuck = True
                    break
                active, cur, signs = slid
                continue
            try:
                sol = np.linalg.solve(gram[np.ix_(active, active)],
                                      q[active] - 0.5 * lam * signs)
            except np.linalg.LinAlgError:
                return original
            solves += 1
            bad = (np.sign(sol) != signs) & (sol != 0.0)
            if not np.any(bad):
                cur = sol
                break
            # partial step to the first zero crossing, drop the crossers
            with np.errstate(divide="ignore", invalid="ignore"):
                tj = np.where(bad, cur / (cur - sol), np.inf)
            t = float(tj.min())
            cur = cur + t * (sol - cur)
            crossed = tj <= t
            keep = ~crossed
            active, cur, signs = active[keep], cur[keep], signs[keep]
            if solves >= max_solves:
                break
        if stuck:
            break
        full = np.zeros(p)
        full[active] = cur
        grad = 2.0 * (q - gram @ full)
        excess = np.abs(grad) - lam
        if active.size:
            excess[active] = -np.inf
        worst = int(np.argmax(excess))
        if excess[worst] <= 0.0:
            break
        if active.size > n:
            break
        active = np.append(active, worst)
        cur = np.append(cur, 0.0)
        signs = np.append(signs, np.sign(grad[worst]))
    refined = np.zeros(p)
    refined[active] = cur
    if objective(refined) <= start_obj:
        return refined
    return original


def fit_lasso(dataset: Dataset, lam: float,
              warm_start: CoefficientVector | np.ndarray | None = None,
              tol: float = SOLVER_TOL,
              max_cycles: int = MAX_CYCLES,
              accelerate: bool = True) -> CoefficientVector:
    """Solve the lasso at a single penalty by cyclic coordinate descent.

    The returned vector satisfies the stationarity conditions
    ``2 x_j . (y - X b) = lam * sign(b_j)`` on the support and
    ``|2 x_j . (y - X b)| <= lam`` off it, to within ``1e-6 * lam``
    (absolute 1e-8 at lam = 0 with n > p). ``accelerate`` allows a
    support-system refinement of the warm start; the convergence
    certificate always comes from the descent cycles themselves. Raises
    :class:`~escv.errors.ConvergenceError` carrying the last iterate if
    the cycle cap is reached first.
    """
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    n, p = dataset.n, dataset.p
    if warm_start is None:
        beta = np.zeros(p)
    else:
        start = warm_start.beta if isinstance(warm_start, CoefficientVector) else warm_start
        beta = np.array(start, dtype=np.float64, copy=True)
        if beta.shape != (p,):
            raise ValueError(f"warm start has shape {beta.shape}, expected ({p},)")
    if accelerate:
        gram = dataset.x.T @ dataset.x
        q = dataset.x.T @ dataset.y
        yy = float(dataset.y @ dataset.y)
        beta = _support_polish(gram, q, yy, float(lam), beta, n, dataset.x)
    xt = np.ascontiguousarray(dataset.x.T)
    col_sq = (xt * xt).sum(axis=1)
    r = dataset.y - dataset.x @ beta
    cycles, kkt, ok = _descent.cyclic_descent(
        xt, r, beta, col_sq, float(lam), float(tol), int(max_cycles),
        _kkt_target(float(lam), n, p))
    if not ok:
        raise ConvergenceError(
            f"coordinate descent did not converge in {cycles} cycles "
            f"at lam={lam:g} (KKT residual {kkt:.3g})",
            beta=beta, kkt=kkt, lam=float(lam))
    return CoefficientVector(beta=beta, tau=float(np.abs(beta).sum()), lam=float(lam))


def compute_path(dataset: Dataset, grid_size: int = 100,
                 lambda_min_ratio: float = 1e-3,
                 tol: float = SOLVER_TOL,
                 max_cycles: int = MAX_CYCLES,
                 accelerate: bool = True) -> SolutionPath:
    """Fit the lasso on a geometric penalty grid with warm starts.

    The grid runs from ``lambda_zero`` down to
    ``lambda_min_ratio * lambda_zero``; the entry point is the all-zero
    solution by construction. Convergence failures propagate with the
    offending grid index attached.
    """
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    if not 0 < lambda_min_ratio < 1:
        raise ValueError(f"lambda_min_ratio must be in (0, 1), got {lambda_min_ratio}")
    n, p = dataset.n, dataset.p
    lam0 = lambda_zero(dataset)
    exponents = np.arange(grid_size) / (grid_size - 1)
    if lam0 == 0.0:
        # Null response: every solution is zero; keep a nominal positive
        # grid so downstream interpolation still has a well-formed path.
        lambdas = lambda_min_ratio ** exponents
        zeros = np.zeros((grid_size, p))
        return SolutionPath(lambdas=lambdas, betas=zeros,
                            taus=np.zeros(grid_size), lambda_zero=0.0)
    lambdas = lam0 * lambda_min_ratio ** exponents
    betas = np.zeros((grid_size, p))
    xt = np.ascontiguousarray(dataset.x.T)
    col_sq = (xt * xt).sum(axis=1)
    if accelerate:
        gram = dataset.x.T @ dataset.x
        q = dataset.x.T @ dataset.y
        yy = float(dataset.y @ dataset.y)
    beta = np.zeros(p)
    for g in range(1, grid_size):
        lam = float(lambdas[g])
        if accelerate:
            beta = _support_polish(gram, q, yy, lam, beta, n, dataset.x)
        r = dataset.y - dataset.x @ beta
        cycles, kkt, ok = _descent.cyclic_descent(
            xt, r, beta, col_sq, lam, float(tol), int(max_cycles),
            _kkt_target(lam, n, p))
        if not ok:
            raise ConvergenceError(
                f"path solve failed at grid index {g} (lam={lam:g}, "
                f"KKT residual {kkt:.3g})",
                beta=beta.copy(), kkt=kkt, lam=lam, grid_index=g)
        betas[g] = beta
    taus = np.abs(betas).sum(axis=1)
    drops = np.flatnonzero(np.diff(taus) < 0)
    return SolutionPath(lambdas=lambdas, betas=betas, taus=taus,
                        lambda_zero=lam0,
                        nonmonotone=tuple(int(i) for i in drops))


def _interp_rows(path: SolutionPath, taus_query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient rows at the queried tau values.

    Returns ``(rows, hit)`` where ``hit[i]`` is the grid index matched
    exactly (first match scanning from the path entry) or -1 for an
    interpolated row. Interpolated rows are rescaled so their L1 norm
    equals the query exactly; grid hits are returned bit for bit.
    """
    t = path.taus
    q = np.atleast_1d(np.asarray(taus_query, dtype=np.float64))
    m = q.shape[0]
    tmax = float(t.max())
    if np.any(q < 0) or np.any(q > tmax):
        bad = q[(q < 0) | (q > tmax)][0]
        raise ValueError(f"tau={bad} outside the path domain [0, {tmax}]")
    rows = np.empty((m, path.betas.shape[1]))
    hit = np.full(m, -1, dtype=np.int64)
    if path.nonmonotone:
        lo = np.minimum(t[:-1], t[1:])
        hi = np.maximum(t[:-1], t[1:])
        for i in range(m):
            tau = q[i]
            exact = np.flatnonzero(t == tau)
            if exact.size:
                g = int(exact[0])
                hit[i] = g
                rows[i] = path.betas[g]
                continue
            inside = np.flatnonzero((lo <= tau) & (tau <= hi))
            g = int(inside[0])  # earliest crossing wins
            w = (tau - t[g]) / (t[g + 1] - t[g])
            rows[i] = (1.0 - w) * path.betas[g] + w * path.betas[g + 1]
    else:
        left = np.searchsorted(t, q, side="left")
        exact = (left < t.shape[0]) & (t[np.minimum(left, t.shape[0] - 1)] == q)
        hit[exact] = left[exact]
        rows[exact] = path.betas[left[exact]]
        miss = ~exact
        if np.any(miss):
            g = np.searchsorted(t, q[miss], side="right") - 1
            w = (q[miss] - t[g]) / (t[g + 1] - t[g])
            rows[miss] = (1.0 - w)[:, None] * path.betas[g] + w[:, None] * path.betas[g + 1]
    interp = hit < 0
    if np.any(interp):
        l1 = np.abs(rows[interp]).sum(axis=1)
        mismatch = np.abs(l1 - q[interp]) > _L1_MATCH_TOL * np.maximum(1.0, q[interp])
        if np.any(mismatch):
            idx = np.flatnonzero(interp)[mismatch]
            norms = l1[mismatch]
            if np.any(norms <= 0):
                raise ArithmeticError("interpolated coefficients cancelled to "
                                      "zero L1 norm; cannot rescale")
            rows[idx] *= (q[idx] / norms)[:, None]
    return rows, hit


def coeff_at_tau(path: SolutionPath, tau: float) -> CoefficientVector:
    """Coefficients on the path at L1 norm ``tau``.

    Grid points reproduce their stored vectors exactly; other values are
    linearly interpolated between the bracketing grid points and rescaled
    so the L1 norm matches ``tau``. Non-monotone stretches resolve to the
    earliest crossing from the path entry.
    """
    rows, hit = _interp_rows(path, np.array([tau], dtype=np.float64))
    g = int(hit[0])
    lam = float(path.lambdas[g]) if g >= 0 else None
    return CoefficientVector(beta=rows[0], tau=float(np.abs(rows[0]).sum()), lam=lam)


def path_coefficients(path: SolutionPath, taus: np.ndarray) -> np.ndarray:
    """Vectorized :func:`coeff_at_tau`: one row per queried tau value."""
    rows, _ = _interp_rows(path, taus)
    return rows


def coeff_at_lambda(path: SolutionPath, lam: float) -> CoefficientVector:
    """Coefficients on the path at penalty ``lam``.

    Values at or above the path entry return the zero vector; interior
    values interpolate linearly in lambda; values below the fitted grid
    are out of domain.
    """
    rows = path_coefficients_at_lambdas(path, np.array([lam], dtype=np.float64))
    return CoefficientVector(beta=rows[0], tau=float(np.abs(rows[0]).sum()),
                             lam=float(lam))


def path_coefficients_at_lambdas(path: SolutionPath, lams: np.ndarray) -> np.ndarray:
    """Vectorized lambda queries: one coefficient row per penalty value."""
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    lo = float(path.lambdas[-1])
    if np.any(lams < lo):
        bad = lams[lams < lo][0]
        raise ValueError(f"lam={bad} below the fitted grid minimum {lo}")
    rows = np.zeros((lams.shape[0], path.betas.shape[1]))
    inside = np.flatnonzero(lams < path.lambdas[0])
    if inside.size:
        asc = path.lambdas[::-1]
        g_count = path.lambdas.shape[0]
        pos = np.searchsorted(asc, lams[inside], side="left")
        g = g_count - 1 - pos  # lambdas[g] >= lam, closest from above
        exact = path.lambdas[g] == lams[inside]
        rows[inside[exact]] = path.betas[g[exact]]
        miss = ~exact
        if np.any(miss):
            gl = g[miss]  # lambdas[gl] > lam > lambdas[gl + 1]
            w = (path.lambdas[gl] - lams[inside][miss]) / (path.lambdas[gl] - path.lambdas[gl + 1])
            rows[inside[miss]] = ((1.0 - w)[:, None] * path.betas[gl]
                                  + w[:, None] * path.betas[gl + 1])
    return rows


def kkt_residual(dataset: Dataset, beta: CoefficientVector | np.ndarray,
                 lam: float) -> float:
    """Largest stationarity violation of ``beta`` for the given penalty."""
    b = beta.beta if isinstance(beta, CoefficientVector) else np.asarray(beta, dtype=np.float64)
    if b.shape != (dataset.p,):
        raise ValueError(f"beta has shape {b.shape}, expected ({dataset.p},)")
    g = 2.0 * (dataset.x.T @ (dataset.y - dataset.x @ b))
    viol = np.where(b > 0, np.abs(g - lam),
                    np.where(b < 0, np.abs(g + lam),
                             np.maximum(np.abs(g) - lam, 0.0)))
    return float(viol.max())


def objective_value(dataset: Dataset, beta: CoefficientVector | np.ndarray,
                    lam: float) -> float:
    """Penalized least-squares objective at ``beta``."""
    b = beta.beta if isinstance(beta, CoefficientVector) else np.asarray(beta, dtype=np.float64)
    r = dataset.y - dataset.x @ b
    return float(r @ r + lam * np.abs(b).sum())
