"""Command line interface.

Commands: ``fit`` (select on a user CSV), ``simulate`` (replicated
benchmark suites), ``curves`` (emit criterion curves for one dataset),
``align-bench`` (CV error under the three path alignments), and
``spread`` (bootstrap distribution of saturated path norms).

Exit codes: 0 success, 2 argument/config error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import dataclasses
import functools
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np
import yaml

from . import plots
from .criteria import (ALIGN_FRACTION, ALIGN_L1, ALIGN_LAMBDA, cv_curve,
                       es_curve, sample_variance_curve, select_bic, select_cv,
                       select_escv)
from .data import original_scale, prepare_dataset
from .errors import (ConfigError, ConvergenceError, DataError,
                     DegenerateGridError)
from .fileio import (fmt, read_design_csv, write_alignment_csv,
                     write_curves_csv, write_report_csv,
                     write_result_document, write_spread_csv)
from .lasso import compute_path
from .resampling import (SCHEME_BOOTSTRAP, SCHEME_CV, TauGrid,
                         bootstrap_pseudo_paths, common_lambda_grid,
                         fraction_grid, make_folds, pseudo_paths)
from .simulation import (DesignSpec, ExperimentConfig, alignment_experiment,
                         format_alignment_table, format_report_table,
                         max_l1_spread, paper_presets, run_experiment)

_ALIGN_CLI = {"l1norm": ALIGN_L1, "lambda": ALIGN_LAMBDA,
              "l1fraction": ALIGN_FRACTION}
_SCHEME_CLI = {"cv": SCHEME_CV, "bootstrap": SCHEME_BOOTSTRAP}
_RULE_CLI = {"min-es": "min_es", "first-dip": "first_dip"}
_METHODS = ("escv", "cv", "bic")

_CONFIG_KEYS = {"replications", "folds", "seed", "tau_grid", "lambda_grid",
                "lambda_min_ratio", "methods", "escv_rule", "jobs",
                "scenarios"}
_SCENARIO_KEYS = {"design", "rho", "sigma", "n", "p", "n_true", "beta_low",
                  "beta_high", "n_blocks", "support_placement"}


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConvergenceError as err:
            click.echo(f"numerical failure: {err}", err=True)
            sys.exit(4)
        except DataError as err:
            click.echo(f"data error: {err}", err=True)
            sys.exit(3)
        except (ConfigError, ValueError) as err:
            click.echo(f"error: {err}", err=True)
            sys.exit(2)
    return wrapper


@click.group()
def main():
    """Regularization selection for the lasso by estimation stability
    (ESCV), with CV and BIC baselines and a simulation benchmark."""


def _parse_methods(raw: str) -> tuple[str, ...]:
    methods = tuple(m.strip() for m in raw.split(",") if m.strip())
    bad = [m for m in methods if m not in _METHODS]
    if bad:
        raise ConfigError(f"unknown methods {bad}; choose from {list(_METHODS)}")
    if not methods:
        raise ConfigError("need at least one method")
    return methods


def _fit_options(fn):
    decorators = [
        click.option("--y-col", default=None,
                     help="Response column name or index (default: last column)."),
        click.option("--no-header", is_flag=True,
                     help="Input CSV has no header row."),
        click.option("--folds", default=8, show_default=True,
                     help="Number of cross-validation folds."),
        click.option("--seed", default=0, show_default=True,
                     help="Seed for folds and resampling."),
        click.option("--tau-grid", default=1000, show_default=True,
                     help="Number of grid points for the selection criteria."),
        click.option("--lambda-grid", default=100, show_default=True,
                     help="Number of penalty values per solution path."),
        click.option("--lambda-min-ratio", default=1e-3, show_default=True,
                     help="Smallest penalty as a fraction of the path entry."),
        click.option("--alignment", default="l1norm", show_default=True,
                     type=click.Choice(sorted(_ALIGN_CLI)),
                     help="Path alignment used by the CV method."),
        click.option("--scheme", default="cv", show_default=True,
                     type=click.Choice(sorted(_SCHEME_CLI)),
                     help="Pseudo-data scheme for the stability curve."),
        click.option("--methods", default="escv,cv,bic", show_default=True,
                     help="Comma-separated selection methods to run."),
        click.option("--escv-rule", default="min-es", show_default=True,
                     type=click.Choice(sorted(_RULE_CLI)),
                     help="Which qualifying ES local minimum to take."),
        click.option("--standardize/--no-standardize", default=True,
                     show_default=True,
                     help="Center and scale features (and center response)."),
        click.option("--intercept/--no-intercept", default=True,
                     show_default=True, help="Center the data so an intercept "
                     "is recovered on the original scale."),
        click.option("--fold-standardize/--no-fold-standardize", default=None,
                     help="Re-standardize each pseudo dataset after row "
                     "removal (default: follows --standardize)."),
        click.option("--standardized-coefs", is_flag=True,
                     help="Report coefficients on the fitted (standardized) "
                     "scale instead of the original scale."),
        click.option("--no-plots", is_flag=True, help="Skip figure rendering."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


@dataclass(frozen=True)
class _FitSettings:
    folds: int
    seed: int
    tau_grid: int
    lambda_grid: int
    lambda_min_ratio: float
    alignment: str
    scheme: str
    methods: tuple[str, ...]
    escv_rule: str
    standardize: bool
    intercept: bool
    fold_standardize: bool


def _settings_from_flags(**kw) -> _FitSettings:
    fold_std = kw["fold_standardize"]
    if fold_std is None:
        fold_std = kw["standardize"]
    if kw["tau_grid"] < 2 or kw["lambda_grid"] < 2:
        raise ConfigError("grid sizes must be at least 2")
    return _FitSettings(
        folds=kw["folds"], seed=kw["seed"], tau_grid=kw["tau_grid"],
        lambda_grid=kw["lambda_grid"],
        lambda_min_ratio=kw["lambda_min_ratio"],
        alignment=_ALIGN_CLI[kw["alignment"]],
        scheme=_SCHEME_CLI[kw["scheme"]],
        methods=_parse_methods(kw["methods"]),
        escv_rule=_RULE_CLI[kw["escv_rule"]],
        standardize=kw["standardize"], intercept=kw["intercept"],
        fold_standardize=fold_std and kw["standardize"])


@dataclass(frozen=True)
class _FitOutcome:
    dataset: object
    transform: object
    grid: TauGrid
    sample_variance: object
    es: object
    cv_error: object
    results: dict
    markers: dict


def _run_fit_pipeline(x, y, opts: _FitSettings) -> _FitOutcome:
    dataset, transform = prepare_dataset(
        x, y, standardize=opts.standardize, intercept=opts.intercept)
    if not 2 <= opts.folds <= dataset.n:
        raise ConfigError(f"folds must be in [2, n={dataset.n}], got {opts.folds}")
    full_path = compute_path(dataset, grid_size=opts.lambda_grid,
                             lambda_min_ratio=opts.lambda_min_ratio)
    folds = make_folds(dataset.n, opts.folds, opts.seed)
    cv_pset = pseudo_paths(dataset, folds, grid_size=opts.lambda_grid,
                           lambda_min_ratio=opts.lambda_min_ratio,
                           restandardize=opts.fold_standardize)
    if opts.scheme == SCHEME_BOOTSTRAP:
        boot_seed = int(np.random.SeedSequence(
            entropy=opts.seed, spawn_key=(1,)).generate_state(1, np.uint64)[0])
        es_pset = bootstrap_pseudo_paths(
            dataset, opts.folds, boot_seed, grid_size=opts.lambda_grid,
            lambda_min_ratio=opts.lambda_min_ratio,
            restandardize=opts.fold_standardize)
    else:
        es_pset = cv_pset
    upper = min(min(p.max_tau for p in cv_pset.paths),
                min(p.max_tau for p in es_pset.paths))
    if upper <= 0:
        raise DegenerateGridError("all pseudo paths are identically zero; "
                                  "the response carries no signal")
    grid = TauGrid(values=np.linspace(0.0, upper, opts.tau_grid), tau_upper=upper)
    sv = sample_variance_curve(dataset, es_pset, grid)
    es = es_curve(dataset, es_pset, grid)
    cvc = cv_curve(dataset, cv_pset, grid, ALIGN_L1)
    cv_res = select_cv(cvc, full_path)
    results = {}
    for method in opts.methods:
        if method == "cv":
            if opts.alignment == ALIGN_L1:
                results["cv"] = cv_res
            else:
                if opts.alignment == ALIGN_LAMBDA:
                    agrid = common_lambda_grid(cv_pset, opts.tau_grid)
                else:
                    agrid = fraction_grid(opts.tau_grid)
                results["cv"] = select_cv(
                    cv_curve(dataset, cv_pset, agrid, opts.alignment), full_path)
        elif method == "escv":
            results["escv"] = select_escv(
                es, cv_res.diagnostics["index_value"], full_path,
                rule=opts.escv_rule)
        else:
            results["bic"] = select_bic(dataset, full_path, grid)
    markers = {}
    if "escv" in results:
        markers["escv"] = float(results["escv"].diagnostics["index_value"])
    markers["cv"] = float(cv_res.diagnostics["index_value"])
    return _FitOutcome(dataset=dataset, transform=transform, grid=grid,
                       sample_variance=sv, es=es, cv_error=cvc,
                       results=results, markers=markers)


def _method_section(method: str, result, transform, names,
                    standardized_coefs: bool):
    fields = {"tau": float(result.tau)}
    lam = result.coefficients.lam
    if lam is not None:
        fields["lambda"] = float(lam)
    fields["model_size"] = result.model_size
    fields["support"] = [names[j] for j in result.support]
    if method == "escv":
        fields["fallback"] = bool(result.diagnostics.get("fallback", False))
        fields["cv_tau"] = float(result.diagnostics.get("cv_tau"))
    if standardized_coefs:
        fields["coefficient_scale"] = "standardized"
        coefs = result.coefficients.beta
    else:
        fields["coefficient_scale"] = "original"
        coefs, intercept = original_scale(result.coefficients.beta, transform)
        fields["intercept"] = intercept
    return method, fields, coefs, names


def _write_fit_outputs(out_path: Path, outcome: _FitOutcome, meta: dict,
                       names, methods, standardized_coefs: bool,
                       emit_curves: bool, no_plots: bool) -> None:
    sections = [_method_section(m, outcome.results[m], outcome.transform,
                                names, standardized_coefs)
                for m in methods]
    write_result_document(out_path, meta=meta, sections=sections)
    if emit_curves:
        curves_path = out_path.with_suffix(".curves.csv")
        write_curves_csv(curves_path, outcome.grid, outcome.sample_variance,
                         outcome.es, outcome.cv_error, outcome.markers)
        if not no_plots:
            plots.save_curves_figure(curves_path.with_suffix(".png"),
                                     outcome.grid, outcome.sample_variance,
                                     outcome.es, outcome.cv_error,
                                     outcome.markers)


@main.command()
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", default=None,
              help="Result document path (default: <input stem>_fit.txt).")
@click.option("--emit-curves", is_flag=True,
              help="Also write the criterion curves next to the result.")
@_fit_options
@_handle_errors
def fit(data, output, emit_curves, y_col, no_header, standardized_coefs,
        no_plots, **flags):
    """Fit the lasso path on a CSV and report the selected solutions."""
    opts = _settings_from_flags(**flags)
    x, y, names, y_name = read_design_csv(data, y_col=y_col,
                                          header=not no_header)
    outcome = _run_fit_pipeline(x, y, opts)
    out_path = Path(output) if output else Path(f"{Path(data).stem}_fit.txt")
    meta = {
        "input": data, "response": y_name, "n": outcome.dataset.n,
        "p": outcome.dataset.p, "folds": opts.folds, "seed": opts.seed,
        "tau_grid": opts.tau_grid, "lambda_grid": opts.lambda_grid,
        "lambda_min_ratio": opts.lambda_min_ratio,
        "alignment": opts.alignment, "scheme": opts.scheme,
        "escv_rule": opts.escv_rule, "standardize": opts.standardize,
        "intercept": opts.intercept,
        "fold_standardize": opts.fold_standardize,
        "methods": list(opts.methods),
    }
    _write_fit_outputs(out_path, outcome, meta, names, opts.methods,
                       standardized_coefs, emit_curves, no_plots)
    for method in opts.methods:
        res = outcome.results[method]
        click.echo(f"{method}: tau={res.tau:.6g} model_size={res.model_size} "
                   f"support={list(res.support)}")
    click.echo(f"wrote {out_path}")


@main.command()
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", default=None,
              help="Curves CSV path (default: <input stem>_curves.csv).")
@_fit_options
@_handle_errors
def curves(data, output, y_col, no_header, standardized_coefs, no_plots,
           **flags):
    """Emit stability and cv-error curves for a CSV dataset."""
    opts = _settings_from_flags(**flags)
    x, y, _, _ = read_design_csv(data, y_col=y_col, header=not no_header)
    if "escv" not in opts.methods:
        opts = dataclasses.replace(
            opts, methods=tuple(dict.fromkeys(opts.methods + ("escv",))))
    outcome = _run_fit_pipeline(x, y, opts)
    out_path = Path(output) if output else Path(f"{Path(data).stem}_curves.csv")
    write_curves_csv(out_path, outcome.grid, outcome.sample_variance,
                     outcome.es, outcome.cv_error, outcome.markers)
    if not no_plots:
        plots.save_curves_figure(out_path.with_suffix(".png"), outcome.grid,
                                 outcome.sample_variance, outcome.es,
                                 outcome.cv_error, outcome.markers)
    click.echo(f"wrote {out_path}")


def _load_config_file(path) -> dict:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as err:
        raise ConfigError(f"cannot parse config {path}: {err}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a key/value mapping")
    for key in raw:
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
    scenarios = raw.get("scenarios")
    if not scenarios:
        raise ConfigError("config must define at least one scenario")
    specs = []
    for i, sc in enumerate(scenarios):
        if not isinstance(sc, dict):
            raise ConfigError(f"scenario {i} must be a key/value block")
        for key in sc:
            if key not in _SCENARIO_KEYS:
                raise ConfigError(f"unknown config key {key!r} in scenario {i}")
        kind = sc.get("design")
        if kind is None:
            raise ConfigError(f"scenario {i} is missing 'design'")
        kwargs = {k: v for k, v in sc.items() if k != "design"}
        try:
            specs.append(DesignSpec(kind=kind, **kwargs))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"scenario {i}: {err}") from None
    raw = dict(raw)
    raw["scenarios"] = tuple(specs)
    return raw


def _experiment_config(config, preset, overrides) -> tuple[ExperimentConfig, str | None]:
    if (config is None) == (preset is None):
        raise ConfigError("pass exactly one of --config or --preset")
    settings = {"replications": 100, "folds": 8, "seed": 0, "tau_grid": 1000,
                "lambda_grid": 100, "lambda_min_ratio": 1e-3,
                "methods": ("escv", "cv", "bic"), "escv_rule": "min_es",
                "jobs": 1}
    if config is not None:
        loaded = _load_config_file(config)
        scenarios = loaded.pop("scenarios")
        settings.update(loaded)
        preset_name = None
    else:
        presets = paper_presets()
        if preset not in presets:
            raise ConfigError(f"unknown preset {preset!r}; choose from "
                              f"{sorted(presets)}")
        scenarios = presets[preset]
        preset_name = preset
        if preset == "smoke":
            settings["replications"] = 2
    for key, value in overrides.items():
        if value is not None:
            settings[key] = value
    if isinstance(settings["methods"], str):
        settings["methods"] = _parse_methods(settings["methods"])
    else:
        settings["methods"] = tuple(settings["methods"])
        bad = [m for m in settings["methods"] if m not in _METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(_METHODS)}")
    try:
        cfg = ExperimentConfig(
            scenarios=scenarios, replications=int(settings["replications"]),
            folds=int(settings["folds"]), seed=int(settings["seed"]),
            lambda_grid_size=int(settings["lambda_grid"]),
            lambda_min_ratio=float(settings["lambda_min_ratio"]),
            tau_grid_size=int(settings["tau_grid"]),
            methods=settings["methods"],
            escv_rule=str(settings["escv_rule"]),
            n_jobs=int(settings["jobs"]))
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return cfg, preset_name


def _experiment_overrides(fn):
    decorators = [
        click.option("--replications", "-R", default=None, type=int,
                     help="Replicates per scenario."),
        click.option("--seed", default=None, type=int, help="Master seed."),
        click.option("--folds", default=None, type=int,
                     help="Cross-validation folds."),
        click.option("--tau-grid", default=None, type=int,
                     help="Criterion grid size."),
        click.option("--lambda-grid", default=None, type=int,
                     help="Penalty values per path."),
        click.option("--lambda-min-ratio", default=None, type=float,
                     help="Smallest penalty as a fraction of the path entry."),
        click.option("--jobs", "-j", default=None, type=int,
                     help="Parallel workers (1 = sequential)."),
        click.option("--no-plots", is_flag=True, help="Skip figure rendering."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


@main.command()
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              default=None, help="YAML experiment config.")
@click.option("--preset", default=None,
              help="Named scenario grid (table1, table2, table4-table8, smoke).")
@click.option("--methods", default=None,
              help="Comma-separated selection methods to run.")
@click.option("--escv-rule", default=None, type=click.Choice(sorted(_RULE_CLI)),
              help="Which qualifying ES local minimum to take.")
@click.option("--output", "-o", default="escv_report.csv", show_default=True,
              help="Report CSV path (figure written alongside).")
@_experiment_overrides
@_handle_errors
def simulate(config, preset, methods, escv_rule, output, no_plots, **overrides):
    """Run a replicated benchmark from a config file or preset."""
    if methods is not None:
        overrides["methods"] = _parse_methods(methods)
    if escv_rule is not None:
        overrides["escv_rule"] = _RULE_CLI[escv_rule]
    cfg, preset_name = _experiment_config(config, preset, overrides)
    out_path = Path(output)
    if preset_name == "table1":
        report = alignment_experiment(cfg)
        write_alignment_csv(out_path, report)
        if not no_plots:
            plots.save_alignment_figure(out_path.with_suffix(".png"), report)
        click.echo(format_alignment_table(report))
    else:
        report = run_experiment(cfg)
        write_report_csv(out_path, report)
        if not no_plots:
            plots.save_report_figure(out_path.with_suffix(".png"), report)
        click.echo(format_report_table(report))
    click.echo(f"wrote {out_path}")


@main.command("align-bench")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              default=None, help="YAML experiment config.")
@click.option("--preset", default="table1", show_default=True,
              help="Named scenario grid.")
@click.option("--output", "-o", default="escv_alignment.csv", show_default=True,
              help="Report CSV path (figure written alongside).")
@_experiment_overrides
@_handle_errors
def align_bench(config, preset, output, no_plots, **overrides):
    """Compare CV selection under the three path alignments."""
    if config is not None:
        preset = None
    cfg, _ = _experiment_config(config, preset, overrides)
    report = alignment_experiment(cfg)
    out_path = Path(output)
    write_alignment_csv(out_path, report)
    if not no_plots:
        plots.save_alignment_figure(out_path.with_suffix(".png"), report)
    click.echo(format_alignment_table(report))
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--design", default="constant", show_default=True,
              type=click.Choice(["constant", "block", "toeplitz"]))
@click.option("--rho", default=0.5, show_default=True, type=float)
@click.option("--sigma", default=1.0, show_default=True, type=float)
@click.option("--n", default=100, show_default=True, type=int)
@click.option("--p", default=150, show_default=True, type=int)
@click.option("--resamples", "-B", default=500, show_default=True, type=int,
              help="Number of bootstrap path fits.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--lambda-grid", default=100, show_default=True, type=int)
@click.option("--lambda-min-ratio", default=1e-3, show_default=True, type=float)
@click.option("--output", "-o", default="escv_spread.csv", show_default=True,
              help="Spread CSV path (figure written alongside).")
@click.option("--no-plots", is_flag=True, help="Skip figure rendering.")
@_handle_errors
def spread(design, rho, sigma, n, p, resamples, seed, lambda_grid,
           lambda_min_ratio, output, no_plots):
    """Bootstrap spread of the saturated path L1 norm on one dataset."""
    spec = DesignSpec(kind=design, rho=rho, p=p, n=n, sigma=sigma)
    summary = max_l1_spread(spec, resamples, seed, grid_size=lambda_grid,
                            lambda_min_ratio=lambda_min_ratio)
    out_path = Path(output)
    write_spread_csv(out_path, summary)
    if not no_plots:
        plots.save_spread_figure(out_path.with_suffix(".png"), summary)
    ratio = summary.upper_decile / summary.lower_decile
    click.echo(f"lower decile={fmt(summary.lower_decile)} upper "
               f"decile={fmt(summary.upper_decile)} ratio={ratio:.4f}")
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
