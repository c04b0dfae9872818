"""2-D kernel density on a grid and highest-density-region contours.

Used for the endpoint clouds: the 97% contour is the density level whose
superlevel set contains 97% of the points. Density is estimated by
binning the points and convolving with a separable Gaussian kernel;
contour segments come from marching squares, chained into polylines.
Everything is deterministic given the grid spec.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = 200
    ny: int = 200
    bandwidth: float | None = None  # None: Scott's rule

    @classmethod
    def around(cls, points: np.ndarray, pad: float = 0.15, nx: int = 200, ny: int = 200,
               bandwidth: float | None = None) -> "GridSpec":
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        return cls(lo[0] - pad * span[0], hi[0] + pad * span[0],
                   lo[1] - pad * span[1], hi[1] + pad * span[1], nx, ny, bandwidth)


def _gauss_kernel_1d(sigma_cells: float) -> np.ndarray:
    radius = max(1, int(np.ceil(4.0 * sigma_cells)))
    t = np.arange(-radius, radius + 1)
    k = np.exp(-0.5 * (t / sigma_cells) ** 2)
    return k / k.sum()


def kde_grid(points: np.ndarray, grid: GridSpec):
    """(xs, ys, density) on the grid; density integrates to ~1 inside it."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("kde_grid expects (n, 2) points")
    if np.allclose(points.std(axis=0), 0.0):
        raise DegenerateDataError("all points identical")
    n = points.shape[0]
    std = points.std(axis=0)
    if grid.bandwidth is not None:
        bw = np.array([grid.bandwidth, grid.bandwidth])
    else:
        bw = std * n ** (-1.0 / 6.0)  # Scott's rule, d = 2
    xs = np.linspace(grid.x_min, grid.x_max, grid.nx)
    ys = np.linspace(grid.y_min, grid.y_max, grid.ny)
    dx = xs[1] - xs[0]
    dy = ys[1] - ys[0]
    counts, _, _ = np.histogram2d(points[:, 0], points[:, 1],
                                  bins=[grid.nx, grid.ny],
                                  range=[[grid.x_min - dx / 2, grid.x_max + dx / 2],
                                         [grid.y_min - dy / 2, grid.y_max + dy / 2]])
    kx = _gauss_kernel_1d(max(bw[0] / dx, 0.5))
    ky = _gauss_kernel_1d(max(bw[1] / dy, 0.5))
    smooth = np.apply_along_axis(lambda c: np.convolve(c, kx, mode="same"), 0, counts)
    smooth = np.apply_along_axis(lambda c: np.convolve(c, ky, mode="same"), 1, smooth)
    density = smooth / (n * dx * dy)
    return xs, ys, density


def density_at_points(points: np.ndarray, xs, ys, density) -> np.ndarray:
    """Nearest-cell lookup of the gridded density."""
    ix = np.clip(np.searchsorted(xs, points[:, 0]), 1, len(xs) - 1)
    ix -= (points[:, 0] - xs[ix - 1]) < (xs[ix] - points[:, 0])
    iy = np.clip(np.searchsorted(ys, points[:, 1]), 1, len(ys) - 1)
    iy -= (points[:, 1] - ys[iy - 1]) < (ys[iy] - points[:, 1])
    return density[ix, iy]


def _marching_segments(xs, ys, density, level):
    """Iso-level line segments per grid cell (standard 16-case table with
    linear interpolation along the edges)."""
    segs = []
    d = density
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            corners = (d[i, j], d[i + 1, j], d[i + 1, j + 1], d[i, j + 1])
            case = sum(1 << c for c, v in enumerate(corners) if v >= level)
            if case in (0, 15):
                continue
            pts = {}

            def edge(c0, c1, p0, p1):
                v0, v1 = corners[c0], corners[c1]
                t = 0.5 if v1 == v0 else (level - v0) / (v1 - v0)
                return (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))

            x0, x1 = xs[i], xs[i + 1]
            y0, y1 = ys[j], ys[j + 1]
            pts["b"] = edge(0, 1, (x0, y0), (x1, y0))
            pts["r"] = edge(1, 2, (x1, y0), (x1, y1))
            pts["t"] = edge(3, 2, (x0, y1), (x1, y1))
            pts["l"] = edge(0, 3, (x0, y0), (x0, y1))
            table = {
                1: [("l", "b")], 2: [("b", "r")], 3: [("l", "r")], 4: [("r", "t")],
                5: [("l", "t"), ("b", "r")], 6: [("b", "t")], 7: [("l", "t")],
                8: [("t", "l")], 9: [("b", "t")], 10: [("b", "l"), ("t", "r")],
                11: [("t", "r")], 12: [("r", "l")], 13: [("b", "r")], 14: [("b", "l")],
            }
            for a, b in table[case]:
                segs.append((pts[a], pts[b]))
    return segs


def _chain_segments(segs, decimals: int = 9):
    """Join shared endpoints into polylines (greedy walk)."""
    def key(p):
        return (round(p[0], decimals), round(p[1], decimals))

    remaining = {i: s for i, s in enumerate(segs)}
    by_end = {}
    for i, (a, b) in remaining.items():
        by_end.setdefault(key(a), []).append(i)
        by_end.setdefault(key(b), []).append(i)
    polylines = []
    while remaining:
        i, (a, b) = next(iter(remaining.items()))
        del remaining[i]
        line = [a, b]
        for _ in range(len(segs)):
            tail = key(line[-1])
            nxt = next((j for j in by_end.get(tail, []) if j in remaining), None)
            if nxt is None:
                break
            c, d = remaining.pop(nxt)
            line.append(d if key(c) == tail else c)
        polylines.append(np.array(line))
    return polylines


def contour_hdr(points: np.ndarray, grid: GridSpec | None = None,
                coverage: float = 0.97):
    """Highest-density-region contour containing `coverage` of the points.

    Returns (level, polylines, containment) where containment is the
    fraction of input points at or above the level.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < 100:
        raise ValueError("need at least 100 points for a stable contour")
    grid = grid or GridSpec.around(points)
    xs, ys, density = kde_grid(points, grid)
    at_pts = density_at_points(points, xs, ys, density)
    level = float(np.quantile(at_pts, 1.0 - coverage))
    polylines = _chain_segments(_marching_segments(xs, ys, density, level))
    containment = float((at_pts >= level).mean())
    return level, polylines, containment
