"""Matplotlib rendering of histogram panels and rejection-rate curves.

Figures are written straight to files (Agg backend); the output format follows
the file extension, with vector formats (svg, pdf) recommended.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .scenarios import ExperimentReport, SweepPoint  # noqa: E402


def save_histogram_panel(report: ExperimentReport, path, title: str | None = None):
    """One bar panel per variant, with the KS statistic and p-value annotated."""
    variants = list(report.series)
    fig, axes = plt.subplots(
        1, len(variants), figsize=(3.2 * len(variants), 3.0), sharey=True
    )
    if len(variants) == 1:
        axes = [axes]
    for ax, variant in zip(axes, variants):
        series = report.series[variant]
        bins = series.histogram.size
        edges = np.arange(bins) / bins
        freq = series.histogram / max(series.n_values, 1)
        ax.bar(edges, freq, width=1.0 / bins, align="edge", color="#4878a8", edgecolor="white")
        ax.axhline(1.0 / bins, color="black", linewidth=0.8, linestyle="--")
        ax.set_title(f"{variant}\nD={series.d_stat:.4f}, p={_format_p(series.p_value)}")
        ax.set_xlim(0, 1)
        ax.set_xlabel("BOT value")
    axes[0].set_ylabel("relative frequency")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _format_p(p: float) -> str:
    # Display floor only; stored p-values keep full precision.
    return "<5e-05" if p < 5e-5 else f"{p:.4f}"


def save_level_curves(rows: list[tuple[int, int, str, float]], path, level: float):
    """Rejection rate against ensemble size, one panel per variant, lines per dimension."""
    variants = sorted({r[2] for r in rows})
    dims = sorted({r[0] for r in rows})
    fig, axes = plt.subplots(1, len(variants), figsize=(4.0 * len(variants), 3.2), sharey=True)
    if len(variants) == 1:
        axes = [axes]
    for ax, variant in zip(axes, variants):
        for p in dims:
            pts = sorted((r[1], r[3]) for r in rows if r[0] == p and r[2] == variant)
            ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o", label=f"p={p}")
        ax.axhline(level, color="black", linewidth=0.8, linestyle="--")
        ax.set_title(variant)
        ax.set_xlabel("ensemble size n")
        ax.set_ylim(-0.02, 1.02)
    axes[0].set_ylabel("rejection rate")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_power_curves(points: list[SweepPoint], path, sweep: str, level: float):
    """Power against the swept forecast parameter, one line per variant."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    grid = [pt.value for pt in points]
    variants = list(points[0].rates)
    for variant in variants:
        ax.plot(grid, [pt.rates[variant] for pt in points], marker="o", label=variant)
    ax.axhline(level, color="black", linewidth=0.8, linestyle="--")
    ax.set_xlabel(sweep)
    ax.set_ylabel("rejection rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
