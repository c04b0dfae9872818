"""Invertible autoencoder: shared weight matrices used forward, their
transposes backward, with an exactly invertible leaky nonlinearity.

The transposed path is only a true inverse when every weight matrix has
orthonormal rows/columns; the cycle loss drives the weights there, and
the per-layer Gram residual is tracked as a training metric."""

from __future__ import annotations

import numpy as np

from ..autodiff import Parameter, Tensor, cols, leaky_relu, matmul, transpose, xavier_uniform
from ..losses import loss_l2_mmd_cycle
from .base import Model

X_DIM = 4


def inverse_leaky_np(h: np.ndarray, slope: float) -> np.ndarray:
    return np.where(h >= 0.0, h, h / slope)


class InvAuto(Model):
    """Bias-free stack 4 -> width -> width -> 4 with a leaky nonlinearity;
    the decoder reuses the encoder weights transposed.

    The slope is a power of two so scaling the negative branch is exact in
    IEEE-754 and the nonlinearity round-trips bit for bit."""

    SLOPE = 0.125

    def __init__(self, kind, problem, y_dim, seed, width):
        super().__init__(kind, problem, y_dim, 4 - y_dim, seed, {"width": width})
        rng = np.random.default_rng(seed)
        sizes = [X_DIM, width, width, X_DIM]
        self.weights = [
            Parameter(xavier_uniform(a, b, rng), name=f"w{i}")
            for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))
        ]

    def layer_list(self):
        return list(self.weights)

    def forward_t(self, x: Tensor) -> Tensor:
        for w in self.weights:
            x = leaky_relu(matmul(x, w), self.SLOPE)
        return x

    def backward_t(self, u: Tensor) -> Tensor:
        inv_slope = 1.0 / self.SLOPE
        for w in reversed(self.weights):
            u = matmul(leaky_relu(u, inv_slope), transpose(w))
        return u

    def forward_np(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        for w in self.weights:
            h = x @ w.data
            x = np.where(h >= 0.0, h, self.SLOPE * h)
        return x

    def inverse_np(self, u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(u)
        for w in reversed(self.weights):
            u = inverse_leaky_np(u, self.SLOPE) @ w.data.T
        return u

    def gram_residual(self) -> float:
        """Mean Frobenius distance of each weight's smaller-side Gram matrix
        from the identity; shrinks as training orthogonalizes the stack."""
        total = 0.0
        for w in self.weights:
            a, b = w.data.shape
            gram = w.data @ w.data.T if a <= b else w.data.T @ w.data
            total += float(np.linalg.norm(gram - np.eye(min(a, b))))
        return total / len(self.weights)

    def loss(self, xb, yb, spec, rng, progress):
        x = Tensor(xb)
        u = self.forward_t(x)
        y = cols(u, list(range(self.y_dim)))
        z = cols(u, list(range(self.y_dim, X_DIM)))
        x_hat = self.backward_t(u)
        z_gt = rng.standard_normal((xb.shape[0], self.z_dim))
        return loss_l2_mmd_cycle(y, Tensor(yb), z, Tensor(z_gt), x, x_hat,
                                 alpha=spec.alpha, beta=spec.beta, kernel=spec.kernel)

    def _sample_std(self, y_row_std, n, rng):
        z = rng.standard_normal((n, self.z_dim))
        u = np.concatenate([np.tile(y_row_std, (n, 1)), z], axis=1)
        return self.inverse_np(u)

    def extra_metrics(self):
        return {"gram_residual": self.gram_residual()}
