"""Figures for experiment reports, written next to the CSV/JSON file."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_result", "plot_paths"]


def plot_result(result, report_path) -> list:
    """One PNG per statistic: per-seed values and the median against ``n``."""
    report_path = Path(report_path)
    written = []
    names = list(dict.fromkeys(r.statistic for r in result.records))
    for name in names:
        recs = [r for r in result.records if r.statistic == name]
        seeds = [r for r in recs if r.seed != "all"]
        agg = sorted((r for r in recs if r.seed == "all"), key=lambda r: r.n)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot([r.n for r in seeds], [r.value for r in seeds], ".", alpha=0.4, label="per seed")
        if agg:
            ns = np.array([r.n for r in agg])
            med = np.array([r.value for r in agg])
            lo = np.array([r.ci_lo for r in agg])
            hi = np.array([r.ci_hi for r in agg])
            ax.errorbar(ns, med, yerr=np.vstack([med - lo, hi - med]), fmt="o-", capsize=3, label="median")
        if len({r.n for r in recs}) > 1:
            ax.set_xscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel(name)
        ax.set_title(f"{result.config.name}: {name}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        out = report_path.with_name(f"{report_path.stem}_{name}.png")
        fig.savefig(out, dpi=100)
        plt.close(fig)
        written.append(out)
    if result.config.kind == "profile-classify":
        written.append(_plot_cusp_profiles(result, report_path))
    return written


def _plot_cusp_profiles(result, report_path):
    from .cusp import cusp_profile, mode_traces

    alpha = float(result.config.params.get("alpha", result.config.alpha or 1.5))
    fig, axes = plt.subplots(1, 3, figsize=(10, 3))
    for ax, (key, (data, expected)) in zip(axes, mode_traces(alpha).items()):
        p = cusp_profile(data).path
        ax.plot(p.times, p.values[:, 0])
        ax.axhline(0, color="grey", lw=0.5)
        ax.axhline(1, color="grey", lw=0.5, ls="--")
        ax.set_title(f"({key}) {expected}")
        ax.set_xlabel("t")
    fig.tight_layout()
    out = report_path.with_name(f"{report_path.stem}_profiles.png")
    fig.savefig(out, dpi=100)
    plt.close(fig)
    return out


def plot_paths(paths, out_path, max_paths: int = 20) -> Path:
    """Overlay of the first coordinate of up to ``max_paths`` step paths."""
    from .paths import value_sequence

    fig, ax = plt.subplots(figsize=(6, 3.5))
    for p in paths[:max_paths]:
        t = np.r_[0.0, p.times]
        ax.step(t, value_sequence(p)[:, 0], where="post", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("W_n(t)")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=100)
    plt.close(fig)
    return out_path
