"""Matplotlib rendering of learning curves, sweeps, and report figures.

Every figure is written as SVG with a pinned hash salt and stripped date
metadata, so identical experiments produce byte-identical files.  Each curve
carries a stable ``gid`` of the form ``curve-<name>`` that survives into the
SVG element ids.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import EnsembleStats, SweepRow, TheorySimReport
from .filters import Algorithm

_HASHSALT = "gclms"
_COLORS = {
    Algorithm.LMS: "tab:blue",
    Algorithm.ZA_LMS: "tab:red",
    Algorithm.GC_LMS: "tab:green",
}
_LABELS = {
    Algorithm.LMS: "LMS",
    Algorithm.ZA_LMS: "ZA-LMS",
    Algorithm.GC_LMS: "GC-LMS",
}


def save_svg(fig: plt.Figure, path: Path) -> None:
    """Write a figure as deterministic SVG and release it."""
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": _HASHSALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_svg(curves: dict[str, tuple[np.ndarray, np.ndarray]], path: Path, *,
             xlabel: str = "iteration", ylabel: str = "MSE", logy: bool = True) -> None:
    """Render named (x, y) curves to an SVG file, one polyline per curve."""
    if not curves:
        raise ValueError("curves must be non-empty")
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    plot = ax.semilogy if logy else ax.plot
    for name, (x, y) in curves.items():
        (line,) = plot(x, y, label=name)
        line.set_gid(f"curve-{name}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    save_svg(fig, path)


def learning_curve_figure(stats: EnsembleStats) -> plt.Figure:
    """Ensemble-mean MSE per iteration, one log-scaled curve per algorithm."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    iters = np.arange(stats.scenario.total_iterations)
    for alg in stats.algorithms:
        (line,) = ax.semilogy(
            iters, stats.mse[alg], color=_COLORS[alg], label=_LABELS[alg], linewidth=1.0
        )
        line.set_gid(f"curve-{alg.column}")
    for _, stop in stats.scenario.phase_bounds()[:-1]:
        ax.axvline(stop, color="0.6", linestyle=":", linewidth=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("ensemble-mean squared error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def sweep_figure(rows: list[SweepRow]) -> plt.Figure:
    """Measured (solid) and predicted (dashed) EMSE against sparsity."""
    if not rows:
        raise ValueError("rows must be non-empty")
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    sparsity = [row.sparsity for row in rows]
    algorithms = list(rows[0].emse_measured)
    for alg in algorithms:
        measured = [row.emse_measured[alg] for row in rows]
        (line,) = ax.semilogy(
            sparsity, measured, marker="o", color=_COLORS[alg],
            label=f"{_LABELS[alg]} measured", linewidth=1.0, markersize=4,
        )
        line.set_gid(f"curve-{alg.column}-measured")
        predicted = np.asarray([row.emse_predicted.get(alg, np.nan) for row in rows])
        if np.isfinite(predicted).any():
            (line,) = ax.semilogy(
                sparsity, predicted, linestyle="--", color=_COLORS[alg],
                label=f"{_LABELS[alg]} predicted", linewidth=1.0,
            )
            line.set_gid(f"curve-{alg.column}-predicted")
    ax.set_xlabel("sparsity (fraction of zero taps)")
    ax.set_ylabel("steady-state excess MSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def report_figure(report: TheorySimReport) -> plt.Figure:
    """Measured vs predicted EMSE per algorithm as paired bars."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    rows = report.rows
    centers = np.arange(len(rows), dtype=float)
    width = 0.38
    for i, row in enumerate(rows):
        bar = ax.bar(
            centers[i] - width / 2, row.emse_measured, width,
            color=_COLORS[row.algorithm], label="measured" if i == 0 else None,
        )
        bar[0].set_gid(f"bar-{row.algorithm.column}-measured")
        if np.isfinite(row.emse_predicted):
            bar = ax.bar(
                centers[i] + width / 2, row.emse_predicted, width,
                color=_COLORS[row.algorithm], alpha=0.45,
                label="predicted" if i == 0 else None,
            )
            bar[0].set_gid(f"bar-{row.algorithm.column}-predicted")
        ax.errorbar(
            centers[i] - width / 2, row.emse_measured, yerr=2 * row.emse_stderr,
            color="black", capsize=3, linewidth=0.8,
        )
    ax.set_xticks(centers, [_LABELS[row.algorithm] for row in rows])
    ax.set_ylabel("steady-state excess MSE")
    ax.set_yscale("log")
    ax.grid(True, axis="y", which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig
