"""Matplotlib renderings written next to the delimited outputs: benchmark
boxplots, sampled-arm fans, and trajectory fans."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import BenchmarkReport

FAINT = dict(color="#3a6ea5", alpha=0.08, lw=0.7)
BOLD = dict(color="#b3132d", lw=2.2)


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_boxplots(path, report: BenchmarkReport) -> None:
    """Both error metrics per model on a log scale, whiskers = full range."""
    models = [s.model for s in report.summaries]
    fig, ax = plt.subplots(figsize=(1.2 * max(6, len(models)), 4))
    offset = {"err_post": (-0.18, "#3a6ea5"), "err_resim": (0.18, "#b3132d")}
    floor = 1e-6
    for metric, (dx, color) in offset.items():
        boxes = []
        for i, s in enumerate(report.summaries):
            st = s.post_stats if metric == "err_post" else s.resim_stats
            boxes.append({
                "med": max(st["median"], floor),
                "q1": max(st["q1"], floor), "q3": max(st["q3"], floor),
                "whislo": max(st["lo"], floor),
                "whishi": min(max(st["hi"], floor), 1e12),
                "label": models[i],
            })
            ax.bxp([boxes[-1]], positions=[i + dx], widths=0.3, showfliers=False,
                   boxprops=dict(color=color), whiskerprops=dict(color=color, ls=":"),
                   capprops=dict(color=color), medianprops=dict(color="white", lw=1.4),
                   patch_artist=True)
        for artist in ax.artists:
            artist.set_facecolor(color)
    ax.set_yscale("log")
    ax.set_xticks(range(len(models)))
    ax.set_xticklabels(models, rotation=30, ha="right")
    ax.set_ylabel("error (log scale)")
    ax.set_title(f"{report.problem}: posterior mismatch (blue) / re-simulation (red)")
    ax.grid(axis="y", alpha=0.3)
    _save(fig, path)


def render_arms(path, arm_points: np.ndarray, mode_points: np.ndarray,
                y_star, contour_lines: list, title: str = "") -> None:
    """Fan of sampled arm configurations with the modal arm and the 97%
    endpoint contour, target marked by a cross."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for pts in arm_points:
        ax.plot(pts[:, 0], pts[:, 1], **FAINT)
    ax.plot(mode_points[:, 0], mode_points[:, 1], **BOLD, zorder=5)
    for line in contour_lines:
        ax.plot(line[:, 0], line[:, 1], color="#2d2d2d", lw=1.2, zorder=4)
    ax.plot(*np.atleast_1d(y_star)[:2], marker="+", color="#555555", ms=14,
            mew=2.5, zorder=6)
    ax.set_aspect("equal")
    ax.set_title(title)
    _save(fig, path)


def render_trajectories(path, trajs: list, mode_traj: np.ndarray, y_star: float,
                        impacts: np.ndarray, title: str = "") -> None:
    """Fan of sampled trajectories, impact density strip and target line."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for tr in trajs:
        ax.plot(tr[:, 0], tr[:, 1], **FAINT)
    ax.plot(mode_traj[:, 0], mode_traj[:, 1], **BOLD, zorder=5)
    ax.axvline(float(np.atleast_1d(y_star)[0]), color="#555555", lw=1.5, ls="--")
    ax.axhline(0.0, color="black", lw=0.8)
    finite = impacts[np.isfinite(impacts)]
    if finite.size:
        hist, edges = np.histogram(finite, bins=40, density=True)
        centers = 0.5 * (edges[:-1] + edges[1:])
        ax.fill_between(centers, 0, -hist * 0.5, color="#2e7d32", alpha=0.6)
    ax.set_title(title)
    ax.set_xlabel("impact coordinate")
    _save(fig, path)
