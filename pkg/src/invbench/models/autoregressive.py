"""Masked autoregressive transforms paired with a free-form decoder.

The masked direction maps x to [y, z] with a strictly triangular
dependency (row i of the Jacobian touches columns <= i only), so the
log-determinant is the sum of per-dimension log-scales. "maf" conditions
the scales/shifts on the inputs x; "iaf" conditions them on the outputs
already produced, which makes the training direction sequential but keeps
the same triangular structure. Sampling always goes through the decoder.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import MLP, Tensor, cols, concat, exp, tanh, tsum
from ..autodiff.nn import Linear
from ..losses import loss_ar_cycle
from .base import Model

X_DIM = 4


def made_masks(widths: list) -> list:
    """Binary masks for a MADE net over X_DIM inputs with 2 outputs per dim.

    Input degrees are 1..4 in natural order (observation dims first);
    hidden degrees cycle 1..3; an output for dim i keeps only paths from
    degrees < i, so dim 1 sees nothing but its bias.
    """
    degrees = [np.arange(1, X_DIM + 1)]
    for w in widths:
        degrees.append((np.arange(w) % (X_DIM - 1)) + 1)
    out_deg = np.tile(np.arange(1, X_DIM + 1), 2)
    masks = []
    for d_in, d_out in zip(degrees[:-1], degrees[1:]):
        masks.append((d_out[None, :] >= d_in[:, None]).astype(np.float64))
    masks.append((out_deg[None, :] > degrees[-1][:, None]).astype(np.float64))
    return masks


class MadeNet:
    """MLP whose weights are masked to enforce the autoregressive order."""

    def __init__(self, widths, rng, slope: float = 0.01, name: str = "made"):
        sizes = [X_DIM, *widths, 2 * X_DIM]
        masks = made_masks(list(widths))
        self.slope = slope
        self.layers = [
            Linear(a, b, rng, mask=m, name=f"{name}.l{i}")
            for i, (a, b, m) in enumerate(zip(sizes[:-1], sizes[1:], masks))
        ]
        # zero the output layer so the transform starts near identity
        self.layers[-1].weight.data[:] = 0.0

    def __call__(self, x: Tensor) -> Tensor:
        from ..autodiff import leaky_relu
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = leaky_relu(x, self.slope)
        return x

    def run_np(self, x: np.ndarray) -> np.ndarray:
        for i, layer in enumerate(self.layers):
            x = layer.run_np(x)
            if i < len(self.layers) - 1:
                x = np.where(x >= 0.0, x, self.slope * x)
        return x


class MaskedARModel(Model):
    """MAF or IAF direction x -> [y, z] plus an unconstrained decoder MLP."""

    def __init__(self, kind, problem, y_dim, seed, width, direction,
                 clamp: float = 2.0, n_hidden: int = 2):
        super().__init__(kind, problem, y_dim, 4 - y_dim, seed,
                         {"width": width, "clamp": clamp, "n_hidden": n_hidden})
        self.direction = direction
        self.clamp = clamp
        rng = np.random.default_rng(seed)
        self.made = MadeNet([width] * n_hidden, rng, name="made")
        self.decoder = MLP([X_DIM, width, width, X_DIM], rng, name="dec")

    def layer_list(self):
        return [*self.made.layers, *self.decoder.layers]

    def _clamped(self, raw):
        c = self.clamp
        if isinstance(raw, Tensor):
            return c * tanh(raw * (1.0 / c))
        return c * np.tanh(raw / c)

    def forward_t(self, x: Tensor):
        if self.direction == "maf":
            h = self.made(x)
            logs = self._clamped(cols(h, list(range(X_DIM))))
            t = cols(h, list(range(X_DIM, 2 * X_DIM)))
            u = x * exp(logs) + t
            return u, tsum(logs, axis=1)
        # iaf: condition on the outputs built so far; masks make the zero
        # padding for not-yet-computed dims exact, not an approximation
        n = x.shape[0]
        built = []
        log_det = None
        for i in range(X_DIM):
            pad = Tensor(np.zeros((n, X_DIM - i)))
            u_prefix = concat(built + [pad], axis=1) if built else pad
            h = self.made(u_prefix)
            logs_i = self._clamped(cols(h, [i]))
            t_i = cols(h, [X_DIM + i])
            u_i = cols(x, [i]) * exp(logs_i) + t_i
            built.append(u_i)
            ld = tsum(logs_i, axis=1)
            log_det = ld if log_det is None else log_det + ld
        return concat(built, axis=1), log_det

    def forward_np(self, x: np.ndarray):
        x = np.atleast_2d(x)
        if self.direction == "maf":
            h = self.made.run_np(x)
            logs = self._clamped(h[:, :X_DIM])
            u = x * np.exp(logs) + h[:, X_DIM:]
            return u, logs.sum(axis=1)
        n = x.shape[0]
        u = np.zeros((n, X_DIM))
        log_det = np.zeros(n)
        for i in range(X_DIM):
            h = self.made.run_np(u)
            logs_i = self._clamped(h[:, i])
            u[:, i] = x[:, i] * np.exp(logs_i) + h[:, X_DIM + i]
            log_det += logs_i
        return u, log_det

    def decode_np(self, u: np.ndarray) -> np.ndarray:
        return self.decoder.run_np(u)

    def loss(self, xb, yb, spec, rng, progress):
        x = Tensor(xb)
        u, log_det = self.forward_t(x)
        y = cols(u, list(range(self.y_dim)))
        z = cols(u, list(range(self.y_dim, X_DIM)))
        x_hat = self.decoder(u)
        return loss_ar_cycle(y, Tensor(yb), z, log_det, x, x_hat,
                             sigma=spec.sigma, alpha=spec.alpha)

    def _sample_std(self, y_row_std, n, rng):
        z = rng.standard_normal((n, self.z_dim))
        u = np.concatenate([np.tile(y_row_std, (n, 1)), z], axis=1)
        return self.decode_np(u)
