"""Invertible residual network: x + r(x) blocks with Lipschitz-bounded
residual branches, inverted by per-block fixed-point iteration."""

from __future__ import annotations

import numpy as np

from ..autodiff import MLP, Tensor, cols
from ..autodiff.spectral import spectral_norm
from ..losses import loss_l2_mmd
from .base import Model

X_DIM = 4


class NonConvergenceError(RuntimeError):
    """Fixed-point inversion failed to reach tol (Lipschitz violation)."""


class IResNet(Model):
    """Residual blocks whose branches are spectrally projected to a shared
    Lipschitz budget c < 1 after every optimizer step, so each block is a
    strict contraction away from the identity and the inverse exists."""

    def __init__(self, kind, problem, y_dim, seed, width, n_blocks: int = 12,
                 lipschitz: float = 0.9, n_power_iter: int = 5,
                 inverse_tol: float = 1e-6, inverse_max_iter: int = 300):
        super().__init__(kind, problem, y_dim, 4 - y_dim, seed,
                         {"width": width, "n_blocks": n_blocks, "lipschitz": lipschitz,
                          "n_power_iter": n_power_iter, "inverse_tol": inverse_tol,
                          "inverse_max_iter": inverse_max_iter})
        self.lipschitz = lipschitz
        self.n_power_iter = n_power_iter
        self.inverse_tol = inverse_tol
        self.inverse_max_iter = inverse_max_iter
        rng = np.random.default_rng(seed)
        self.branches = [
            MLP([X_DIM, width, X_DIM], rng, name=f"res{b}") for b in range(n_blocks)
        ]
        # each branch has two weight matrices; bound each at c^(1/2)
        self._per_layer_cap = lipschitz ** 0.5
        self._power_u = [rng.standard_normal(layer.weight.data.shape[0])
                         for br in self.branches for layer in br.layers]
        self.post_step()

    def layer_list(self):
        return [layer for br in self.branches for layer in br.layers]

    def post_step(self):
        """Project every branch weight back inside the Lipschitz budget."""
        for u, layer in zip(self._power_u, self.layer_list()):
            sigma = spectral_norm(layer.weight.data, iters=self.n_power_iter, u0=u)
            if sigma > self._per_layer_cap:
                layer.weight.data = layer.weight.data * (self._per_layer_cap / sigma)

    def branch_lipschitz_bounds(self):
        """Post-projection product bound per branch (power-iteration based)."""
        bounds = []
        for br in self.branches:
            prod = 1.0
            for layer in br.layers:
                prod *= spectral_norm(layer.weight.data, iters=50)
            bounds.append(prod)
        return bounds

    def forward_t(self, x: Tensor) -> Tensor:
        for br in self.branches:
            x = x + br(x)
        return x

    def forward_np(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        for br in self.branches:
            x = x + br.run_np(x)
        return x

    def inverse_np(self, u: np.ndarray, tol: float | None = None,
                   max_iter: int | None = None):
        """Solve u = x + r(x) block by block, newest block first.

        Returns (x, total_iterations); raises NonConvergenceError when a
        block's iteration does not contract below tol.
        """
        tol = self.inverse_tol if tol is None else tol
        max_iter = self.inverse_max_iter if max_iter is None else max_iter
        u = np.atleast_2d(u)
        total_iters = 0
        for br in reversed(self.branches):
            x = u.copy()
            for _ in range(max_iter):
                x_next = u - br.run_np(x)
                total_iters += 1
                step = np.max(np.abs(x_next - x))
                x = x_next
                if step < tol:
                    break
            else:
                raise NonConvergenceError(
                    f"fixed-point inversion above tol={tol} after {max_iter} iterations")
            u = x
        return u, total_iters

    def loss(self, xb, yb, spec, rng, progress):
        out = self.forward_t(Tensor(xb))
        y = cols(out, list(range(self.y_dim)))
        z = cols(out, list(range(self.y_dim, X_DIM)))
        z_gt = rng.standard_normal((xb.shape[0], self.z_dim))
        return loss_l2_mmd(y, Tensor(yb), z, Tensor(z_gt), spec.alpha, spec.kernel)

    def _sample_std(self, y_row_std, n, rng):
        z = rng.standard_normal((n, self.z_dim))
        u = np.concatenate([np.tile(y_row_std, (n, 1)), z], axis=1)
        x, _ = self.inverse_np(u)
        return x

    def extra_arrays(self):
        return {f"power_u.{i}": u for i, u in enumerate(self._power_u)}

    def load_extra_arrays(self, blobs):
        for i in range(len(self._power_u)):
            key = f"power_u.{i}"
            if key in blobs:
                self._power_u[i] = blobs[key].copy()
