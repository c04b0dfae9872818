"""Articulated-arm benchmark: rail offset plus three joint angles -> end point.

The arm hangs from a vertical rail; x1 shifts the mount along the rail
(enters y1 only) and x2..x4 are the joint angles measured from vertical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Tensor, add, cols, concat, cos, sin


@dataclass(frozen=True)
class KinematicsConfig:
    l1: float = 0.5
    l2: float = 0.5
    l3: float = 1.0
    prior_sigma2: tuple = (1.0 / 16.0, 0.25, 0.25, 0.25)

    def __post_init__(self):
        if min(self.l1, self.l2, self.l3) <= 0:
            raise ValueError("segment lengths must be positive")
        if min(self.prior_sigma2) <= 0:
            raise ValueError("prior variances must be positive")


X_DIM = 4
Y_DIM = 2


def sample_prior(n: int, rng: np.random.Generator, cfg: KinematicsConfig) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    sigma = np.sqrt(np.asarray(cfg.prior_sigma2))
    return rng.standard_normal((n, X_DIM)) * sigma


def forward(x: np.ndarray, cfg: KinematicsConfig) -> np.ndarray:
    """End-point coordinates for rows of joint parameters."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    a1 = x[:, 1]
    a2 = a1 + x[:, 2]
    a3 = a2 + x[:, 3]
    y1 = cfg.l1 * np.sin(a1) + cfg.l2 * np.sin(a2) + cfg.l3 * np.sin(a3) + x[:, 0]
    y2 = cfg.l1 * np.cos(a1) + cfg.l2 * np.cos(a2) + cfg.l3 * np.cos(a3)
    return np.stack([y1, y2], axis=1)


def forward_tensor(x: Tensor, cfg: KinematicsConfig) -> Tensor:
    """Same map on the tape, for gradient checks and differentiable use."""
    a1 = cols(x, [1])
    a2 = add(a1, cols(x, [2]))
    a3 = add(a2, cols(x, [3]))
    y1 = cfg.l1 * sin(a1) + cfg.l2 * sin(a2) + cfg.l3 * sin(a3) + cols(x, [0])
    y2 = cfg.l1 * cos(a1) + cfg.l2 * cos(a2) + cfg.l3 * cos(a3)
    return concat([y1, y2], axis=1)


def joint_positions(x: np.ndarray, cfg: KinematicsConfig) -> np.ndarray:
    """(n, 4, 2) vertex chain per arm: mount, two joints, end point."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n = x.shape[0]
    pts = np.zeros((n, 4, 2))
    pts[:, 0, 0] = x[:, 0]
    angles = np.cumsum(x[:, 1:], axis=1)
    lengths = (cfg.l1, cfg.l2, cfg.l3)
    for i, l in enumerate(lengths):
        pts[:, i + 1, 0] = pts[:, i, 0] + l * np.sin(angles[:, i])
        pts[:, i + 1, 1] = pts[:, i, 1] + l * np.cos(angles[:, i])
    return pts
