"""Figure rendering for the CLI report paths.

Every function writes a PNG next to the corresponding delimited output.
The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_curves_figure",
    "save_report_figure",
    "save_alignment_figure",
    "save_spread_figure",
]

_METHOD_COLORS = {"escv": "tab:blue", "cv": "tab:orange", "bic": "tab:green"}


def save_curves_figure(path, grid, sample_variance, es, cv_error,
                       markers: dict[str, float]) -> None:
    """Stability and cv-error curves over tau with selection markers."""
    taus = grid.values
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), sharex=True)
    axes[0].plot(taus, sample_variance.values, color="tab:purple", lw=1.2)
    axes[0].set_title("pseudo-fit sample variance")
    es_vals = np.where(es.defined, es.values, np.nan)
    axes[1].plot(taus, es_vals, color="tab:blue", lw=1.2)
    axes[1].set_title("estimation stability (ES)")
    axes[2].plot(taus, cv_error.values, color="tab:orange", lw=1.2)
    axes[2].set_title("cv error")
    for ax in axes:
        ax.set_xlabel("tau (L1 norm)")
        for method, tau in markers.items():
            ax.axvline(tau, color=_METHOD_COLORS.get(method, "grey"),
                       ls="--", lw=0.9, label=f"{method}: tau={tau:.4g}")
    axes[1].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _scenario_label(spec) -> str:
    return f"{spec.kind}\nrho={spec.rho:g}\nsigma={spec.sigma:g}\np={spec.p}"


def save_report_figure(path, report, metrics=("f_measure", "model_size")) -> None:
    """Grouped bars of selected aggregate metrics per scenario and method."""
    scenarios = report.scenarios
    methods = list(scenarios[0].stats.keys())
    n_sc = len(scenarios)
    fig, axes = plt.subplots(len(metrics), 1,
                             figsize=(max(6.0, 0.9 * n_sc * len(methods)),
                                      3.0 * len(metrics)),
                             squeeze=False)
    xs = np.arange(n_sc)
    width = 0.8 / len(methods)
    for row, metric in enumerate(metrics):
        ax = axes[row, 0]
        for mi, method in enumerate(methods):
            means = [sc.stats[method][metric][0] for sc in scenarios]
            ses = [sc.stats[method][metric][1] for sc in scenarios]
            ax.bar(xs + (mi - (len(methods) - 1) / 2) * width, means, width,
                   yerr=ses, capsize=2, label=method,
                   color=_METHOD_COLORS.get(method))
        ax.set_ylabel(metric)
        ax.set_xticks(xs)
        ax.set_xticklabels([_scenario_label(sc.spec) for sc in scenarios],
                           fontsize=7)
        if row == 0:
            ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_alignment_figure(path, report) -> None:
    """Bars of CV estimation error per scenario under each alignment."""
    alignments = list(report.stats[0].keys())
    n_sc = len(report.scenarios)
    xs = np.arange(n_sc)
    width = 0.8 / len(alignments)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * n_sc), 3.6))
    for ai, alignment in enumerate(alignments):
        means = [stat[alignment][0] for stat in report.stats]
        ses = [stat[alignment][1] for stat in report.stats]
        ax.bar(xs + (ai - (len(alignments) - 1) / 2) * width, means, width,
               yerr=ses, capsize=2, label=alignment)
    ax.set_ylabel("cv estimation error")
    ax.set_xticks(xs)
    ax.set_xticklabels([_scenario_label(spec) for spec in report.scenarios],
                       fontsize=7)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_spread_figure(path, summary) -> None:
    """Histogram of bootstrap saturated L1 norms with decile markers."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.hist(summary.max_taus, bins=30, color="tab:blue", alpha=0.8)
    ax.axvline(summary.lower_decile, color="k", ls="--", lw=0.9,
               label=f"10%: {summary.lower_decile:.4g}")
    ax.axvline(summary.upper_decile, color="k", ls=":", lw=0.9,
               label=f"90%: {summary.upper_decile:.4g}")
    ax.set_xlabel("saturated L1 norm")
    ax.set_ylabel("count")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
