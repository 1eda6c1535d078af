"""Figure rendering for the report paths.

All functions write a PNG next to the delimited output and return the path.
The Agg backend keeps rendering headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_state",
    "save_entropy_history",
    "save_profile",
    "save_convergence",
    "save_sweep",
]

plt.rcParams["figure.figsize"] = (7.0, 4.5)
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.linestyle"] = "--"
plt.rcParams["grid.alpha"] = 0.5


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def save_state(x, u0, u1, path, title="") -> Path:
    fig, ax = plt.subplots()
    ax.plot(x, u0, "k--", lw=1, label="initial")
    ax.plot(x, u1, "C0-", lw=1.5, label="final")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    if title:
        ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def save_entropy_history(times, entropy, path) -> Path:
    fig, ax = plt.subplots()
    ax.plot(times, entropy, "C0-", lw=1.5)
    ax.set_xlabel("t")
    ax.set_ylabel("total entropy")
    return _finish(fig, path)


def save_profile(x, ledger, path, title="") -> Path:
    fig, ax = plt.subplots()
    ax.plot(x, ledger.s_total, "C0-", lw=1.2, label="S")
    ax.plot(x, ledger.s_temporal, "C1-", lw=1.2, label="S temporal")
    ax.plot(x, ledger.s_spatial, "C2--", lw=1.2, label="S spatial")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("entropy production per cell")
    if title:
        ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def save_convergence(rows, path, guide_order=None, title="") -> Path:
    dts = np.array([r.dt for r in rows])
    vals = np.abs(np.array([r.value for r in rows]))
    fig, ax = plt.subplots()
    ax.loglog(dts, vals, "o-", label="measured")
    if guide_order is not None and vals[0] > 0:
        ax.loglog(
            dts,
            vals[0] * (dts / dts[0]) ** guide_order,
            "k--",
            lw=1,
            label=f"order {guide_order} guide",
        )
    ax.invert_xaxis()
    ax.set_xlabel("dt")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def save_sweep(result, path, title="") -> Path:
    lams = np.array([r.lam for r in result.rows])
    worst = np.array([r.max_s_total for r in result.rows])
    fig, ax = plt.subplots()
    ax.plot(lams, worst, "o-")
    ax.axhline(0.0, color="k", lw=0.8)
    if result.lambda_star is not None:
        ax.axvline(result.lambda_star, color="C3", lw=1, ls="--",
                   label=f"threshold ~ {result.lambda_star:.2f}")
        ax.legend()
    ax.set_yscale("symlog", linthresh=1e-14)
    ax.set_xlabel("lambda = dt/dx")
    ax.set_ylabel("worst per-cell entropy production")
    if title:
        ax.set_title(title)
    return _finish(fig, path)
