"""Static figures for run directories and sweeps (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .mission import MissionLog  # noqa: E402


def save_ssim_map(ssim: np.ndarray, path: Path | str) -> None:
    """Full-resolution red-blue colormap: red for low similarity, blue for high."""
    plt.imsave(path, ssim, cmap="RdBu", vmin=-1.0, vmax=1.0)


def plot_speed_trace(log: MissionLog, path: Path | str) -> None:
    fig, ax = plt.subplots(figsize=(8, 3))
    t = np.array([c.t for c in log.captures])
    ax.step(t, log.speeds(), where="post", lw=1.0, label="applied speed")
    lo, hi = log.nominal_speed - log.max_discrepancy, log.nominal_speed + log.max_discrepancy
    ax.axhline(log.nominal_speed, color="0.5", ls="--", lw=0.8)
    ax.axhspan(lo, hi, color="0.9", zorder=0)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("speed [m/s]")
    ax.set_title(f"{log.mode}, nominal {log.nominal_speed:g} m/s")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_ssim_histogram(hist: Sequence[float], edges: np.ndarray, path: Path | str) -> None:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(edges[:-1], hist, width=np.diff(edges), align="edge", edgecolor="k", lw=0.3)
    ax.set_xlabel("SSIM")
    ax.set_ylabel("fraction of pixels")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_iou_vs_speed(rows: Sequence[Mapping], path: Path | str) -> None:
    """IoU sum against nominal speed per mode, with a one-sigma band across seeds."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode in sorted({r["mode"] for r in rows}):
        sub = sorted((r for r in rows if r["mode"] == mode), key=lambda r: r["nominal_speed"])
        s = np.array([r["nominal_speed"] for r in sub], dtype=float)
        m = np.array([r["iou_sum_mean"] for r in sub], dtype=float)
        sd = np.sqrt(np.array([r["iou_sum_var"] for r in sub], dtype=float))
        ax.plot(s, m, marker="o", label=mode)
        ax.fill_between(s, m - sd, m + sd, alpha=0.25)
    ax.set_xlabel("nominal speed [m/s]")
    ax.set_ylabel("IoU crop + IoU weed")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
