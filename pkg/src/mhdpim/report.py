"""Figures written next to the CSV output.

Figures are built on bare :class:`matplotlib.figure.Figure` objects with
the Agg canvas, so no GUI backend or pyplot state is involved.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

_SAVE_KW = dict(dpi=120, metadata={"Software": None})


def _new(nrows=1, ncols=1, size=(6.4, 4.0)):
    fig = Figure(figsize=size, layout="constrained")
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def _positive(values):
    v = np.asarray(values, dtype=float)
    return np.where((v > 0) & np.isfinite(v), v, np.nan)


def plot_convergence(rows: list[dict], path, title: str = "") -> Path:
    """Log-log error versus h for both Elsasser fields with a slope-2 guide."""
    h = np.array([float(r["h"]) for r in rows])
    fig, axes = _new()
    ax = axes[0, 0]
    for key, label, marker in (("err_zp_L2", "z+", "o"), ("err_zm_L2", "z-", "s")):
        ax.loglog(h, _positive([r[key] for r in rows]), marker=marker, label=label)
    e0 = np.nanmax(_positive([r["err_zp_L2"] for r in rows]))
    if math.isfinite(e0):
        ax.loglog(h, e0 * (h / h[0]) ** 2, "k--", lw=0.8, label="slope 2")
    ax.set_xlabel("h = dt")
    ax.set_ylabel("max-in-time L2 error")
    ax.set_title(title)
    ax.legend()
    path = Path(path)
    fig.savefig(path, **_SAVE_KW)
    return path


def plot_diagnostics(series: dict[str, list[dict]], path, title: str = "") -> Path:
    """Energy, cross-helicity and (when available) energy error against time.

    ``series`` maps a label (usually the scheme) to diagnostic rows.
    """
    has_err = any(math.isfinite(float(r.get("E_err", math.nan)))
                  for rows in series.values() for r in rows)
    ncols = 3 if has_err else 2
    fig, axes = _new(1, ncols, size=(4.0 * ncols, 3.4))
    for label, rows in series.items():
        t = [float(r["t"]) for r in rows]
        axes[0, 0].plot(t, [float(r["E_primitive"]) for r in rows], label=label)
        axes[0, 1].plot(t, [float(r["H_C"]) for r in rows], label=label)
        if has_err:
            axes[0, 2].semilogy(t, _positive([r.get("E_err", math.nan) for r in rows]),
                                label=label)
    axes[0, 0].set_ylabel("energy (u, B)")
    axes[0, 1].set_ylabel("cross helicity")
    if has_err:
        axes[0, 2].set_ylabel("|E - E_exact|")
    for ax in axes[0]:
        ax.set_xlabel("t")
        ax.legend()
    fig.suptitle(title)
    path = Path(path)
    fig.savefig(path, **_SAVE_KW)
    return path


def plot_steps(rows: list[dict], path, tol: float | None = None, title: str = "") -> Path:
    """Step sizes, error estimates and Picard counts of an adaptive run."""
    acc = [r for r in rows if int(r["accepted"])]
    rej = [r for r in rows if not int(r["accepted"])]
    fig, axes = _new(3, 1, size=(6.4, 7.0))
    t = [float(r["t"]) for r in acc]
    axes[0, 0].semilogy(t, [float(r["tau"]) for r in acc], ".-", label="accepted")
    if rej:
        axes[0, 0].semilogy([float(r["t"]) for r in rej], [float(r["tau"]) for r in rej],
                            "rx", label="rejected")
    axes[0, 0].set_ylabel("step size")
    axes[0, 0].legend()
    axes[1, 0].semilogy(t, _positive([r["lte"] for r in acc]), ".")
    if tol is not None:
        axes[1, 0].axhline(tol, color="k", ls="--", lw=0.8)
    axes[1, 0].set_ylabel("LTE estimate")
    axes[2, 0].step(t, [int(r["iterations"]) for r in acc], where="post")
    axes[2, 0].set_ylabel("Picard sweeps")
    axes[2, 0].set_xlabel("t")
    fig.suptitle(title)
    path = Path(path)
    fig.savefig(path, **_SAVE_KW)
    return path
