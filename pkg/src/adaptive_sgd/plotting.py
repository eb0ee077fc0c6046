"""SVG figures of ensemble aggregates: log10 mean +/- one standard deviation vs k."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["PLOT_QUANTITIES", "plot_aggregate", "plot_comparison", "log_spaced_indices"]

PLOT_QUANTITIES = {
    "D_k": r"$F(w_k) - F(w^\star)$",
    "dist_sq": r"$\|w_k - w^\star\|^2$",
    "alpha_k": r"step size $\alpha_k$",
    "L_est": r"$L$ estimate",
    "var_est": r"variance estimate",
    "g_est": r"$E\|f'\|^2$ estimate",
}


def log_spaced_indices(n, max_points=2000):
    """Indices 0..n-1 thinned to at most ``max_points``, roughly uniform in log k."""
    if n <= max_points:
        return np.arange(n)
    idx = np.unique(np.round(np.logspace(0, np.log10(n), max_points)).astype(int) - 1)
    return np.union1d([0], idx[idx < n])


def _band(ax, k, agg, name, label=None):
    mean = agg.get(f"{name}_log10_mean")
    std = agg.get(f"{name}_log10_std")
    if mean is None:
        return False
    idx = log_spaced_indices(len(k))
    kk = np.maximum(k[idx], 1)
    m, s = mean[idx], std[idx]
    ok = np.isfinite(m)
    if not ok.any():
        return False
    line, = ax.plot(kk[ok], 10.0 ** m[ok], lw=1.2, label=label)
    s = np.where(np.isfinite(s), s, 0.0)
    ax.fill_between(kk[ok], 10.0 ** (m[ok] - s[ok]), 10.0 ** (m[ok] + s[ok]), color=line.get_color(), alpha=0.25, lw=0)
    return True


def plot_aggregate(agg, out_dir, title=""):
    """One SVG per quantity present in ``agg``; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    k = np.asarray(agg["k"])
    paths = []
    for name, ylabel in PLOT_QUANTITIES.items():
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        if not _band(ax, k, agg, name):
            plt.close(fig)
            continue
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("iteration k")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title, fontsize=9)
        ax.grid(True, which="major", alpha=0.3)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{name}.svg")
        fig.savefig(path, format="svg")
        plt.close(fig)
        paths.append(path)
    return paths


def plot_comparison(aggs, out_dir, title=""):
    """Overlay several aggregates (e.g. one per sweep value); ``aggs`` maps label -> aggregate."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, ylabel in PLOT_QUANTITIES.items():
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        drawn = False
        for label, agg in aggs.items():
            drawn |= _band(ax, np.asarray(agg["k"]), agg, name, label=label)
        if not drawn:
            plt.close(fig)
            continue
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("iteration k")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7)
        if title:
            ax.set_title(title, fontsize=9)
        ax.grid(True, which="major", alpha=0.3)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{name}.svg")
        fig.savefig(path, format="svg")
        plt.close(fig)
        paths.append(path)
    return paths
