"""Thrown-object benchmark: launch state -> impact coordinate under drag.

A point mass leaves (x1, x2) at angle x3 with speed x4 and follows the
closed-form linear-drag trajectory. The observation is the horizontal
coordinate where it last crosses the ground axis; throws that never
reach the axis are rejected at data-generation time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEG = math.pi / 180.0

X_DIM = 4
Y_DIM = 1


class NoImpactError(RuntimeError):
    """Trajectory never crosses the ground axis (sample must be redrawn)."""


@dataclass(frozen=True)
class BallisticsConfig:
    g: float = 9.81
    m: float = 0.2
    k: float = 0.25
    x1_mean: float = 0.0
    x1_var: float = 0.25
    x2_mean: float = 1.5
    x2_var: float = 0.25
    angle_lo: float = 9.0 * DEG   # radians
    angle_hi: float = 72.0 * DEG
    speed_rate: float = 15.0      # Poisson rate for the launch-speed prior

    def __post_init__(self):
        if min(self.g, self.m, self.k) <= 0:
            raise ValueError("g, m, k must be positive")
        if not self.angle_lo < self.angle_hi:
            raise ValueError("angle bounds must be ordered")
        if min(self.x1_var, self.x2_var, self.speed_rate) <= 0:
            raise ValueError("prior parameters must be positive")


def sample_prior(n: int, rng: np.random.Generator, cfg: BallisticsConfig) -> np.ndarray:
    """Prior draws; the discrete speed is dequantized with U(0,1) noise so
    density models see a continuous coordinate."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.empty((n, X_DIM))
    x[:, 0] = cfg.x1_mean + math.sqrt(cfg.x1_var) * rng.standard_normal(n)
    x[:, 1] = cfg.x2_mean + math.sqrt(cfg.x2_var) * rng.standard_normal(n)
    x[:, 2] = rng.uniform(cfg.angle_lo, cfg.angle_hi, size=n)
    x[:, 3] = rng.poisson(cfg.speed_rate, size=n) + rng.uniform(0.0, 1.0, size=n)
    return x


def trajectory(x, t, cfg: BallisticsConfig):
    """Position(s) (T1, T2) at time(s) t for one parameter row."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    v1 = x[3] * math.cos(x[2])
    v2 = x[3] * math.sin(x[2])
    decay = np.exp(-cfg.k * t / cfg.m) - 1.0
    t1 = x[0] - v1 * cfg.m / cfg.k * decay
    t2 = x[1] - cfg.m / cfg.k ** 2 * ((cfg.g * cfg.m + v2 * cfg.k) * decay + cfg.g * t * cfg.k)
    return t1, t2


def _heights(x: np.ndarray, t: np.ndarray, cfg: BallisticsConfig) -> np.ndarray:
    """Vectorized T2 for rows of x against per-row times."""
    v2 = x[:, 3] * np.sin(x[:, 2])
    decay = np.exp(-cfg.k * t / cfg.m) - 1.0
    return x[:, 1] - cfg.m / cfg.k ** 2 * ((cfg.g * cfg.m + v2 * cfg.k) * decay + cfg.g * t * cfg.k)


def impact_times(x: np.ndarray, cfg: BallisticsConfig, tol: float = 1e-12):
    """Rightmost ground-crossing time per row.

    T2 rises until the apex time (m/k)*log(1 + v2 k / (g m)) and decreases
    strictly afterwards, so the rightmost root lives in [t_apex, inf) and
    exists iff the apex is at or above the axis. Bisection on a doubling
    bracket; returns (t_star, ok) with ok False where there is no crossing
    or the speed is non-positive.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    ok = x[:, 3] > 0.0
    # downward throws (v2 <= 0) fall monotonically, so their apex is t = 0
    v2_up = np.maximum(np.where(ok, x[:, 3] * np.sin(x[:, 2]), 0.0), 0.0)
    t_apex = cfg.m / cfg.k * np.log1p(v2_up * cfg.k / (cfg.g * cfg.m))
    h_apex = _heights(x, t_apex, cfg)
    ok &= h_apex >= 0.0

    lo = t_apex.copy()
    hi = t_apex + 1.0
    # grow the right edge until T2 < 0 everywhere (T2 -> -inf linearly)
    for _ in range(200):
        h_hi = _heights(x, hi, cfg)
        need = ok & (h_hi >= 0.0)
        if not need.any():
            break
        lo = np.where(need, hi, lo)
        hi = np.where(need, hi * 2.0, hi)
    else:
        raise NoImpactError("failed to bracket the impact time")

    for _ in range(100):
        mid = 0.5 * (lo + hi)
        h_mid = _heights(x, mid, cfg)
        go_right = h_mid >= 0.0
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
        if np.all(hi - lo < tol):
            break
    t_star = 0.5 * (lo + hi)
    return np.where(ok, t_star, np.nan), ok


def forward_masked(x: np.ndarray, cfg: BallisticsConfig):
    """Impact coordinates with a validity mask (False = no crossing)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    t_star, ok = impact_times(x, cfg)
    v1 = x[:, 3] * np.cos(x[:, 2])
    decay = np.exp(-cfg.k * np.where(ok, t_star, 0.0) / cfg.m) - 1.0
    y = x[:, 0] - v1 * cfg.m / cfg.k * decay
    y = np.where(ok, y, np.nan)
    return y[:, None], ok


def impact_location(x, cfg: BallisticsConfig) -> float:
    """Impact coordinate for a single parameter vector; raises NoImpactError."""
    y, ok = forward_masked(np.asarray(x, dtype=np.float64)[None, :], cfg)
    if not ok[0]:
        raise NoImpactError("trajectory never reaches the ground axis")
    return float(y[0, 0])
