"""File-only matplotlib figures for traces, lifespan sweeps and check reports."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path, config_hash=None):
    # fixed metadata keeps PNG bytes reproducible
    meta = {"Software": "fracwave"}
    if config_hash:
        meta["Comment"] = f"config_hash={config_hash}"
    fig.savefig(path, dpi=100, metadata=meta)
    plt.close(fig)
    return path


def plot_trace(trace, path, title=None, config_hash=None):
    """Norms along a run on a log axis, and their ratio to the envelope."""
    t = trace.array("times")
    fig, (ax, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for name, label in (("l2", "L2"), ("seminorm", "seminorm"), ("dt_l2", "time derivative")):
        y = np.abs(trace.array(name))
        if np.any(y > 0):
            ax.semilogy(t, np.where(y > 0, y, np.nan), label=label)
    env = trace.array("envelope")
    if np.any(env != 1):
        ax.semilogy(t, env, "k--", lw=0.8, label="envelope")
    ax.set_ylabel("norm")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="best", fontsize=8)
    ax2.plot(t, trace.array("ratio"))
    ax2.set_xlabel("t")
    ax2.set_ylabel("weighted ratio")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path, config_hash)


def plot_lifespans(records, fit, path, config_hash=None):
    """log T against log epsilon with the fitted line and the 1-p reference."""
    fin = [r for r in records if math.isfinite(r.lifespan)]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if fin:
        eps = np.array([r.epsilon for r in fin])
        T = np.array([r.lifespan for r in fin])
        ax.loglog(eps, T, "o", label="lifespan")
        if math.isfinite(fit.get("slope", math.nan)):
            xs = np.geomspace(eps.min(), eps.max(), 50)
            ax.loglog(xs, np.exp(fit["intercept"]) * xs ** fit["slope"], "-",
                      label=f"fit slope {fit['slope']:.3f} +- {fit['ci']:.3f}")
            ref = T[-1] * (xs / eps[-1]) ** fit["expected_slope"]
            ax.loglog(xs, ref, "k:", label=f"slope {fit['expected_slope']:g}")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("T(epsilon)")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path, config_hash)


def plot_reports(reports, path):
    """Worst ratio over tolerance per check (bars above 1 fail)."""
    names = [r.name for r in reports]
    vals = []
    for r in reports:
        tol = r.tolerance if math.isfinite(r.tolerance) and r.tolerance > 0 else math.nan
        vals.append(r.worst_ratio / tol if tol == tol else math.nan)
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(names) + 1.5))
    y = np.arange(len(names))
    colors = ["tab:green" if r.passed else "tab:red" for r in reports]
    ax.barh(y, np.nan_to_num(np.maximum(vals, 1e-18), nan=1e-18), color=colors)
    ax.set_xscale("log")
    ax.axvline(1.0, color="k", lw=0.8)
    ax.set_yticks(y, names, fontsize=7)
    ax.set_xlabel("worst / tolerance")
    fig.tight_layout()
    return _save(fig, path)
