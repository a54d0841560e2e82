"""Figure rendering for report outputs.

Figures are written as PNG files next to the delimited tables; rendering
is opt-in from the CLI and never required for the numeric outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from srlab.bayes import PosteriorTable
from srlab.engine import Kind
from srlab.experiments import DecayCurve, LambdaTable, MedianStabilityTrace

BAND_SD = 1.0  # shaded band half-width in posterior standard deviations


def plot_posterior(table: PosteriorTable, path: Path, title: str = "") -> Path:
    """Posterior mean vs b_prev with a 1-sd band, one line per kind."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for kind in (Kind.SUPPORT, Kind.RESISTANCE, Kind.COMBINED):
        bs = sorted(b for k, b in table if k is kind)
        means = [table[(kind, b)].mean for b in bs]
        sds = [table[(kind, b)].sd for b in bs]
        ax.plot(bs, means, marker="o", label=kind.value)
        ax.fill_between(
            bs,
            [m - BAND_SD * s for m, s in zip(means, sds)],
            [m + BAND_SD * s for m, s in zip(means, sds)],
            alpha=0.15,
        )
    ax.axhline(0.5, color="grey", linestyle=":", linewidth=1)
    ax.set_xlabel("previous bounces")
    ax.set_ylabel("posterior bounce probability")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_lambda(table: LambdaTable, path: Path, title: str = "") -> Path:
    """Estimated win probability vs b_prev, one line per kind."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for kind in (Kind.SUPPORT, Kind.RESISTANCE, Kind.COMBINED):
        bs = sorted(b for k, b in table.rows if k is kind)
        pairs = [(b, table.rows[(kind, b)].lam) for b in bs]
        pairs = [(b, v) for b, v in pairs if v is not None]
        if pairs:
            ax.plot(*zip(*pairs), marker="o", label=kind.value)
    ax.axhline(0.5, color="grey", linestyle=":", linewidth=1)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("previous bounces")
    ax.set_ylabel("estimated win probability")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_decay(curves: list[DecayCurve], path: Path, title: str = "") -> Path:
    """Posterior mean vs lag, one line per b_prev, combined kind only."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for curve in curves:
        if curve.kind is not Kind.COMBINED:
            continue
        lags = [p.lag for p in curve.points]
        means = [p.mean for p in curve.points]
        sds = [p.sd for p in curve.points]
        ax.plot(lags, means, marker="o", label=f"b_prev={curve.b_prev}")
        ax.fill_between(
            lags,
            [m - BAND_SD * s for m, s in zip(means, sds)],
            [m + BAND_SD * s for m, s in zip(means, sds)],
            alpha=0.15,
        )
    ax.set_xlabel("lag window (steps)")
    ax.set_ylabel("posterior bounce probability")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_stability(trace: MedianStabilityTrace, path: Path, title: str = "") -> Path:
    """Running median of the shuffle-side estimate as replicates accumulate."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [r for r, _ in trace.points]
    ys = [m for _, m in trace.points]
    ax.plot(xs, ys)
    ax.axhline(0.5, color="grey", linestyle=":", linewidth=1)
    ax.set_xlabel("replicates used")
    ax.set_ylabel(f"running median at b_prev={trace.target_b_prev}")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
