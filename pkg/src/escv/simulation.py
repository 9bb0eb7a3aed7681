"""Gaussian-design benchmark harness.

Generates correlated Gaussian designs with a sparse linear signal, runs
replicated regularization-selection experiments (ESCV against CV and
BIC on one shared solution path per replicate), and aggregates
estimation, prediction, and support-recovery metrics with standard
errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .criteria import (ALIGN_FRACTION, ALIGN_L1, ALIGN_LAMBDA, ALIGNMENTS,
                       cv_curve, es_curve, select_bic, select_cv, select_escv)
from .data import Dataset
from .errors import ConvergenceError
from .lasso import compute_path
from .resampling import (common_lambda_grid, common_tau_grid, fraction_grid,
                         make_folds, pseudo_paths)

__all__ = [
    "DesignSpec",
    "ReplicateMetrics",
    "ExperimentConfig",
    "ScenarioResult",
    "AggregateReport",
    "AlignmentReport",
    "SpreadSummary",
    "gen_sigma",
    "gen_replicate",
    "estimation_error",
    "prediction_error",
    "selection_metrics",
    "run_experiment",
    "alignment_experiment",
    "max_l1_spread",
    "paper_presets",
]

DESIGN_KINDS = ("constant", "block", "toeplitz")
PLACEMENTS = ("leading", "random")
METRIC_NAMES = ("estimation_error", "prediction_error", "f_measure",
                "model_size", "tp", "fp")


@dataclass(frozen=True)
class DesignSpec:
    """One simulation scenario: design family, correlation, and noise.

    True coefficients are drawn uniformly on [beta_low, beta_high] over
    ``n_true`` support indices; the support sits on the leading features
    for the constant and block designs and is randomly placed for the
    Toeplitz design.
    """

    kind: str
    rho: float
    p: int
    n: int
    sigma: float
    n_true: int = 10
    beta_low: float = 1.0 / 3.0
    beta_high: float = 1.0
    n_blocks: int = 10
    support_placement: str = ""

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        if self.support_placement == "":
            default = "random" if self.kind == "toeplitz" else "leading"
            object.__setattr__(self, "support_placement", default)
        if self.support_placement not in PLACEMENTS:
            raise ValueError(f"unknown support placement {self.support_placement!r}")
        if self.kind in ("constant", "block"):
            if not 0.0 <= self.rho < 1.0:
                raise ValueError(f"{self.kind} design needs 0 <= rho < 1, got {self.rho}")
            if self.support_placement != "leading":
                raise ValueError(f"{self.kind} design uses leading support placement")
        else:
            if not abs(self.rho) < 1.0:
                raise ValueError(f"toeplitz design needs |rho| < 1, got {self.rho}")
            if self.support_placement != "random":
                raise ValueError("toeplitz design uses random support placement")
        if self.n < 2 or self.p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not 0 <= self.n_true <= self.p:
            raise ValueError(f"need 0 <= n_true <= p, got n_true={self.n_true}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if self.kind == "block" and not 1 <= self.n_blocks <= self.p:
            raise ValueError(f"need 1 <= n_blocks <= p, got {self.n_blocks}")


def gen_sigma(spec: DesignSpec, seed: int = 0) -> np.ndarray:
    """True feature covariance for a scenario.

    constant: unit diagonal, rho everywhere off it. block: features are
    randomly grouped (seeded) into ``n_blocks`` near-equal blocks with
    within-block correlation rho. toeplitz: rho^|i-j|.
    """
    p = spec.p
    if spec.kind == "constant":
        sigma = np.full((p, p), spec.rho)
        np.fill_diagonal(sigma, 1.0)
        return sigma
    if spec.kind == "block":
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        block_of = np.empty(p, dtype=np.int64)
        block_of[rng.permutation(p)] = np.arange(p) % spec.n_blocks
        sigma = np.eye(p)
        for b in range(spec.n_blocks):
            idx = np.flatnonzero(block_of == b)
            sigma[np.ix_(idx, idx)] = spec.rho
        np.fill_diagonal(sigma, 1.0)
        return sigma
    offsets = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return np.asarray(spec.rho, dtype=np.float64) ** offsets


def gen_replicate(spec: DesignSpec,
                  seed: int | np.random.SeedSequence) -> tuple[Dataset, np.ndarray, np.ndarray]:
    """Draw one dataset from the scenario: rows i.i.d. N(0, sigma_matrix),
    response x @ beta + noise. Returns (dataset, beta, sigma_matrix);
    beta is redrawn per replicate."""
    rng = np.random.default_rng(seed)
    sigma_seed = int(rng.integers(0, 2**63 - 1))
    sigma_matrix = gen_sigma(spec, seed=sigma_seed)
    chol = np.linalg.cholesky(sigma_matrix)
    x = rng.standard_normal((spec.n, spec.p)) @ chol.T
    if spec.support_placement == "leading":
        support = np.arange(spec.n_true)
    else:
        support = np.sort(rng.choice(spec.p, size=spec.n_true, replace=False))
    beta = np.zeros(spec.p)
    beta[support] = rng.uniform(spec.beta_low, spec.beta_high, size=spec.n_true)
    y = x @ beta + spec.sigma * rng.standard_normal(spec.n)
    return Dataset(x, y), beta, sigma_matrix


def estimation_error(beta_hat: np.ndarray, beta: np.ndarray) -> float:
    """Euclidean distance between estimated and true coefficients."""
    bh = np.asarray(beta_hat, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    if bh.shape != b.shape:
        raise ValueError(f"shape mismatch: {bh.shape} vs {b.shape}")
    d = bh - b
    return float(np.sqrt(d @ d))


def prediction_error(beta_hat: np.ndarray, beta: np.ndarray,
                     sigma_matrix: np.ndarray) -> float:
    """Root quadratic form of the coefficient error against the true
    feature covariance."""
    bh = np.asarray(beta_hat, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    if bh.shape != b.shape:
        raise ValueError(f"shape mismatch: {bh.shape} vs {b.shape}")
    if sigma_matrix.shape != (b.shape[0], b.shape[0]):
        raise ValueError(f"covariance shape {sigma_matrix.shape} does not "
                         f"match p={b.shape[0]}")
    d = bh - b
    q = float(d @ (sigma_matrix @ d))
    if q < -1e-12:
        raise ValueError(f"covariance quadratic form is negative ({q})")
    return float(np.sqrt(max(q, 0.0)))


def selection_metrics(support, true_support) -> tuple[int, int, float]:
    """True positives, false positives, and F-measure of a support set."""
    s = frozenset(int(j) for j in support)
    t = frozenset(int(j) for j in true_support)
    if not t:
        raise ValueError("true support is empty")
    tp = len(s & t)
    fp = len(s - t)
    if tp == 0:
        return tp, fp, 0.0
    precision = tp / (tp + fp)
    recall = tp / len(t)
    return tp, fp, 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ReplicateMetrics:
    """Performance of one method on one replicate."""

    method: str
    estimation_error: float
    prediction_error: float
    f_measure: float
    model_size: int
    tp: int
    fp: int


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for a replicated selection experiment."""

    scenarios: tuple[DesignSpec, ...]
    replications: int = 100
    folds: int = 8
    seed: int = 0
    lambda_grid_size: int = 100
    lambda_min_ratio: float = 1e-3
    tau_grid_size: int = 1000
    methods: tuple[str, ...] = ("escv", "cv", "bic")
    escv_rule: str = "min_es"
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.scenarios:
            raise ValueError("need at least one scenario")
        if self.replications < 2:
            raise ValueError("need at least 2 replications")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        bad = [m for m in self.methods if m not in ("escv", "cv", "bic")]
        if bad:
            raise ValueError(f"unknown methods: {bad}")


@dataclass(frozen=True)
class ScenarioResult:
    """Aggregated metrics for one scenario: method -> metric -> (mean, se)."""

    spec: DesignSpec
    stats: dict
    n_replicates: int
    n_failures: int


@dataclass(frozen=True)
class AggregateReport:
    """Aggregate of a full experiment run."""

    scenarios: tuple[ScenarioResult, ...]
    replications: int
    seed: int
    folds: int

    @property
    def total_failures(self) -> int:
        return sum(s.n_failures for s in self.scenarios)

    def to_rows(self) -> list[dict]:
        rows = []
        for sc in self.scenarios:
            for method, metrics in sc.stats.items():
                for metric, (mean, se) in metrics.items():
                    rows.append({
                        "design": sc.spec.kind, "rho": sc.spec.rho,
                        "sigma": sc.spec.sigma, "n": sc.spec.n, "p": sc.spec.p,
                        "method": method, "metric": metric,
                        "mean": mean, "se": se,
                    })
        return rows


@dataclass(frozen=True)
class AlignmentReport:
    """Mean CV estimation error per scenario under each path alignment."""

    scenarios: tuple[DesignSpec, ...]
    stats: tuple[dict, ...]  # per scenario: alignment -> (mean, se)
    replications: int
    seed: int
    folds: int

    def to_rows(self) -> list[dict]:
        rows = []
        for spec, stat in zip(self.scenarios, self.stats):
            for alignment, (mean, se) in stat.items():
                rows.append({
                    "design": spec.kind, "rho": spec.rho, "sigma": spec.sigma,
                    "n": spec.n, "p": spec.p, "alignment": alignment,
                    "metric": "estimation_error", "mean": mean, "se": se,
                })
        return rows


@dataclass(frozen=True)
class SpreadSummary:
    """Bootstrap distribution summary of saturated path L1 norms."""

    max_taus: np.ndarray
    deciles: np.ndarray  # quantiles at 0%, 10%, ..., 100%

    @property
    def lower_decile(self) -> float:
        return float(self.deciles[1])

    @property
    def upper_decile(self) -> float:
        return float(self.deciles[9])


def _replicate_seed(seed: int, scenario_index: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(scenario_index, rep))


def _fit_replicate(spec: DesignSpec, cfg: ExperimentConfig,
                   scenario_index: int, rep: int):
    """Everything shared by the selection methods for one replicate."""
    root = _replicate_seed(cfg.seed, scenario_index, rep)
    data_ss, fold_ss = root.spawn(2)
    dataset, beta_true, sigma_matrix = gen_replicate(spec, data_ss)
    full_path = compute_path(dataset, grid_size=cfg.lambda_grid_size,
                             lambda_min_ratio=cfg.lambda_min_ratio)
    fold_seed = int(fold_ss.generate_state(1, np.uint64)[0])
    folds = make_folds(dataset.n, cfg.folds, fold_seed)
    pset = pseudo_paths(dataset, folds, grid_size=cfg.lambda_grid_size,
                        lambda_min_ratio=cfg.lambda_min_ratio)
    return dataset, beta_true, sigma_matrix, full_path, pset


def _score(method: str, result, beta_true, sigma_matrix, true_support) -> ReplicateMetrics:
    beta_hat = result.coefficients.beta
    tp, fp, f = selection_metrics(result.support, true_support)
    return ReplicateMetrics(
        method=method,
        estimation_error=estimation_error(beta_hat, beta_true),
        prediction_error=prediction_error(beta_hat, beta_true, sigma_matrix),
        f_measure=f, model_size=len(result.support), tp=tp, fp=fp)


def _selection_replicate(spec: DesignSpec, cfg: ExperimentConfig,
                         scenario_index: int, rep: int):
    """One replicate of the main experiment; returns metrics or the error."""
    try:
        dataset, beta_true, sigma_matrix, full_path, pset = _fit_replicate(
            spec, cfg, scenario_index, rep)
        grid = common_tau_grid(pset, cfg.tau_grid_size)
        cvc = cv_curve(dataset, pset, grid, ALIGN_L1)
        cv_res = select_cv(cvc, full_path)
        results = {"cv": cv_res}
        if "escv" in cfg.methods:
            esc = es_curve(dataset, pset, grid)
            results["escv"] = select_escv(esc, cv_res.diagnostics["index_value"],
                                          full_path, rule=cfg.escv_rule)
        if "bic" in cfg.methods:
            results["bic"] = select_bic(dataset, full_path, grid)
        true_support = np.flatnonzero(beta_true)
        return {m: _score(m, results[m], beta_true, sigma_matrix, true_support)
                for m in cfg.methods}
    except ConvergenceError as err:
        return err


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(values.shape[0])) if values.shape[0] > 1 else float("nan")
    return mean, se


def _run_tasks(worker, tasks, n_jobs: int):
    if n_jobs == 1:
        return [worker(*t) for t in tasks]
    return Parallel(n_jobs=n_jobs)(delayed(worker)(*t) for t in tasks)


def run_experiment(cfg: ExperimentConfig) -> AggregateReport:
    """Replicated selection experiment over all configured scenarios.

    Every method selects from the same full-data path using the same
    folds within a replicate. Replicates draw independent seeded
    substreams, so results are reproducible and order-independent under
    parallel execution. Replicates whose solver fails are excluded and
    counted; the run aborts if more than 1% fail.
    """
    scenario_results = []
    for si, spec in enumerate(cfg.scenarios):
        tasks = [(spec, cfg, si, rep) for rep in range(cfg.replications)]
        outcomes = _run_tasks(_selection_replicate, tasks, cfg.n_jobs)
        good = [o for o in outcomes if not isinstance(o, ConvergenceError)]
        n_failures = len(outcomes) - len(good)
        if not good:
            raise ConvergenceError(f"all replicates failed for scenario {spec}")
        stats = {}
        for method in cfg.methods:
            per_metric = {}
            for metric in METRIC_NAMES:
                vals = np.array([getattr(o[method], metric) for o in good],
                                dtype=np.float64)
                per_metric[metric] = _mean_se(vals)
            stats[method] = per_metric
        scenario_results.append(ScenarioResult(
            spec=spec, stats=stats, n_replicates=len(good),
            n_failures=n_failures))
    report = AggregateReport(scenarios=tuple(scenario_results),
                             replications=cfg.replications, seed=cfg.seed,
                             folds=cfg.folds)
    total = cfg.replications * len(cfg.scenarios)
    if report.total_failures > 0.01 * total:
        raise ConvergenceError(
            f"{report.total_failures} of {total} replicates failed to converge")
    return report


def _alignment_replicate(spec: DesignSpec, cfg: ExperimentConfig,
                         scenario_index: int, rep: int,
                         alignments: tuple[str, ...]):
    try:
        dataset, beta_true, _, full_path, pset = _fit_replicate(
            spec, cfg, scenario_index, rep)
        out = {}
        for alignment in alignments:
            if alignment == ALIGN_L1:
                grid = common_tau_grid(pset, cfg.tau_grid_size)
            elif alignment == ALIGN_LAMBDA:
                grid = common_lambda_grid(pset, cfg.tau_grid_size)
            else:
                grid = fraction_grid(cfg.tau_grid_size)
            res = select_cv(cv_curve(dataset, pset, grid, alignment), full_path)
            out[alignment] = estimation_error(res.coefficients.beta, beta_true)
        return out
    except ConvergenceError as err:
        return err


def alignment_experiment(cfg: ExperimentConfig,
                         alignments: tuple[str, ...] = ALIGNMENTS) -> AlignmentReport:
    """CV estimation error under each path alignment on shared replicates.

    Each replicate reuses one pseudo-path set for every alignment, so the
    comparison isolates the alignment convention itself.
    """
    for a in alignments:
        if a not in ALIGNMENTS:
            raise ValueError(f"unknown alignment {a!r}")
    stats = []
    for si, spec in enumerate(cfg.scenarios):
        tasks = [(spec, cfg, si, rep, tuple(alignments))
                 for rep in range(cfg.replications)]
        outcomes = _run_tasks(_alignment_replicate, tasks, cfg.n_jobs)
        good = [o for o in outcomes if not isinstance(o, ConvergenceError)]
        if not good:
            raise ConvergenceError(f"all replicates failed for scenario {spec}")
        if len(outcomes) - len(good) > 0.01 * len(outcomes):
            raise ConvergenceError(
                f"{len(outcomes) - len(good)} of {len(outcomes)} replicates "
                "failed to converge")
        stats.append({a: _mean_se(np.array([o[a] for o in good])) for a in alignments})
    return AlignmentReport(scenarios=tuple(cfg.scenarios), stats=tuple(stats),
                           replications=cfg.replications, seed=cfg.seed,
                           folds=cfg.folds)


def max_l1_spread(spec: DesignSpec, b: int, seed: int,
                  grid_size: int = 100,
                  lambda_min_ratio: float = 1e-3) -> SpreadSummary:
    """Bootstrap distribution of the saturated L1 norm of the lasso path.

    Generates one dataset from the scenario, fits a path on each of
    ``b`` row resamples, and summarizes the spread of the largest L1
    norm reached. A wide spread is what makes fraction-of-saturated-norm
    alignment unreliable.
    """
    if b < 2:
        raise ValueError(f"need b >= 2, got {b}")
    data_ss, boot_ss = np.random.SeedSequence(seed).spawn(2)
    dataset, _, _ = gen_replicate(spec, data_ss)
    rng = np.random.default_rng(boot_ss)
    maxes = np.empty(b)
    for i in range(b):
        rows = rng.integers(0, dataset.n, size=dataset.n)
        path = compute_path(Dataset(dataset.x[rows], dataset.y[rows]),
                            grid_size=grid_size,
                            lambda_min_ratio=lambda_min_ratio)
        maxes[i] = path.max_tau
    return SpreadSummary(max_taus=maxes,
                         deciles=np.quantile(maxes, np.linspace(0.0, 1.0, 11)))


def _fmt_stat(mean: float, se: float) -> str:
    return f"{mean:8.3f} ({se:.3f})"


def format_report_table(report: AggregateReport) -> str:
    """Fixed-width console rendering of an aggregate report."""
    lines = []
    for sc in report.scenarios:
        spec = sc.spec
        methods = list(sc.stats.keys())
        lines.append(f"{spec.kind} design  rho={spec.rho:g}  sigma={spec.sigma:g}  "
                     f"n={spec.n}  p={spec.p}  "
                     f"[{sc.n_replicates} replicates, {sc.n_failures} failed]")
        header = f"  {'metric':<18}" + "".join(f"{m:>18}" for m in methods)
        lines.append(header)
        for metric in METRIC_NAMES:
            row = f"  {metric:<18}"
            for m in methods:
                mean, se = sc.stats[m][metric]
                row += f"{_fmt_stat(mean, se):>18}"
            lines.append(row)
        lines.append("")
    lines.append(f"replications={report.replications}  folds={report.folds}  "
                 f"seed={report.seed}  (mean with standard error in parens)")
    return "\n".join(lines)


def format_alignment_table(report: AlignmentReport) -> str:
    """Fixed-width console rendering of an alignment benchmark."""
    alignments = list(report.stats[0].keys())
    lines = ["cv estimation error by path alignment",
             f"  {'scenario':<40}" + "".join(f"{a:>20}" for a in alignments)]
    for spec, stat in zip(report.scenarios, report.stats):
        label = f"{spec.kind} rho={spec.rho:g} sigma={spec.sigma:g} p={spec.p}"
        row = f"  {label:<40}"
        for a in alignments:
            mean, se = stat[a]
            row += f"{_fmt_stat(mean, se):>20}"
        lines.append(row)
    lines.append(f"replications={report.replications}  folds={report.folds}  "
                 f"seed={report.seed}")
    return "\n".join(lines)


def _grid(kind: str, p: int, rhos, sigmas, n: int = 100) -> tuple[DesignSpec, ...]:
    return tuple(DesignSpec(kind=kind, rho=r, p=p, n=n, sigma=s)
                 for r in rhos for s in sigmas)


def paper_presets() -> dict[str, tuple[DesignSpec, ...]]:
    """Named scenario grids for the benchmark tables."""
    sigmas = (0.5, 1.0, 2.0)
    constant_rhos = (0.0, 0.2, 0.5, 0.9)
    presets = {
        "table1": _grid("constant", 150, constant_rhos, (0.5,)),
        "table2": _grid("constant", 150, constant_rhos, sigmas),
        "table4": _grid("constant", 50, constant_rhos, sigmas),
        "table5": _grid("constant", 500, constant_rhos, sigmas),
        "table6": _grid("block", 150, (0.3, 0.5, 0.9), sigmas),
        "table7": _grid("toeplitz", 150, (0.5, 0.9, 0.99), sigmas),
        "smoke": (DesignSpec(kind="constant", rho=0.5, p=150, n=100, sigma=1.0),),
    }
    presets["table8"] = (
        _grid("constant", 150, (0.0, 0.5, 0.9), sigmas)
        + _grid("constant", 50, (0.0, 0.5, 0.9), sigmas)
        + _grid("constant", 500, (0.0, 0.5, 0.9), sigmas)
        + presets["table6"] + presets["table7"])
    return presets
