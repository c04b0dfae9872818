"""Largest-singular-value estimation by power iteration."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def spectral_norm(w, iters: int = 20, rng: np.random.Generator | None = None,
                  u0: np.ndarray | None = None) -> float:
    """Power-iteration estimate of the top singular value of a matrix.

    Monotonically non-decreasing in `iters` in exact arithmetic. A zero
    matrix returns 0. `u0` lets callers persist the left vector across
    calls (warm start during training).
    """
    if isinstance(w, Tensor):
        w = w.data
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError("spectral_norm expects a matrix")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if not w.any():
        return 0.0
    if u0 is not None:
        u = u0
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        u = rng.standard_normal(w.shape[0])
    u = u / np.linalg.norm(u)
    sigma = 0.0
    for _ in range(iters):
        v = w.T @ u
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
        u = w @ v
        sigma = np.linalg.norm(u)
        if sigma == 0.0:
            return 0.0
        u /= sigma
    if u0 is not None:
        u0[:] = u
    return float(sigma)
