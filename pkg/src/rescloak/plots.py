"""Figure rendering for the report paths: every CSV the CLI writes gets a
companion PNG next to it."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "convergence_figure",
    "scan_figure",
    "invariance_figure",
    "residual_figure",
]

_RC = {
    "figure.figsize": (6.0, 4.5),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)


def convergence_figure(rows: Sequence, path) -> None:
    """Log-log plot of the boundary-map distance against the scale h."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        hs = np.array([r.h for r in rows])
        es = np.array([r.norm_diff for r in rows])
        ax.loglog(hs, es, "ko-", label="weighted norm")
        ax.loglog(hs, [r.norm_diff_plain for r in rows], "s--", color="tab:gray",
                  label="plain spectral norm")
        if len(hs) >= 2:
            slope = np.polyfit(np.log(hs), np.log(es), 1)[0]
            ref = es[-1] * (hs / hs[-1]) ** 1.0
            ax.loglog(hs, ref, ":", color="tab:red", label="slope 1 reference")
            ax.set_title(f"boundary-map convergence, fitted slope {slope:.2f}")
        ax.set_xlabel("inclusion scale h")
        ax.set_ylabel("NtD distance to background")
        ax.invert_xaxis()
        ax.legend()
        _save(fig, path)


def scan_figure(rho0, rho1, indicator, with_lossy: bool, path) -> None:
    """Heatmap of the log stability indicator over the density grid."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        im = ax.pcolormesh(
            rho1, rho0, np.log10(np.maximum(indicator, 1e-300)), shading="nearest"
        )
        fig.colorbar(im, ax=ax, label="log10 stability indicator")
        ax.set_xlabel("annulus density")
        ax.set_ylabel("core density")
        ax.set_title("lossy layer on" if with_lossy else "lossless")
        _save(fig, path)


def invariance_figure(h_meshes: Sequence[float], diffs: Sequence[float], path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.loglog(h_meshes, diffs, "ko-")
        ax.set_xlabel("mesh size")
        ax.set_ylabel("relative NtD difference")
        ax.set_title("physical vs small-inclusion boundary maps")
        ax.invert_xaxis()
        _save(fig, path)


def residual_figure(labels: Sequence[str], residuals: Sequence[float], tol: float, path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        y = np.arange(len(labels))
        ax.barh(y, residuals, color="tab:blue")
        ax.axvline(tol, color="tab:red", ls="--", label=f"tolerance {tol:g}")
        ax.set_yticks(y, labels)
        ax.set_xscale("log")
        ax.set_xlabel("relative residual")
        ax.legend()
        _save(fig, path)
