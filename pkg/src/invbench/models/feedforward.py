"""Bottleneck-free autoencoder and the conditional VAE."""

from __future__ import annotations

import numpy as np

from ..autodiff import MLP, Tensor, cols, concat, exp
from ..losses import loss_elbo_cycle, loss_l2_mmd_cycle
from .base import Model

X_DIM = 4


class Autoencoder(Model):
    """Encoder x -> [y, z] and decoder [y, z] -> x, both plain MLPs with the
    full 4-D code (no bottleneck)."""

    def __init__(self, kind, problem, y_dim, seed, width, n_hidden: int = 2):
        super().__init__(kind, problem, y_dim, 4 - y_dim, seed,
                         {"width": width, "n_hidden": n_hidden})
        rng = np.random.default_rng(seed)
        hidden = [width] * n_hidden
        self.encoder = MLP([X_DIM, *hidden, X_DIM], rng, name="enc")
        self.decoder = MLP([X_DIM, *hidden, X_DIM], rng, name="dec")

    def layer_list(self):
        return [*self.encoder.layers, *self.decoder.layers]

    def loss(self, xb, yb, spec, rng, progress):
        x = Tensor(xb)
        u = self.encoder(x)
        y = cols(u, list(range(self.y_dim)))
        z = cols(u, list(range(self.y_dim, X_DIM)))
        x_hat = self.decoder(u)
        z_gt = rng.standard_normal((xb.shape[0], self.z_dim))
        return loss_l2_mmd_cycle(y, Tensor(yb), z, Tensor(z_gt), x, x_hat,
                                 alpha=spec.alpha, beta=spec.beta, kernel=spec.kernel)

    def _sample_std(self, y_row_std, n, rng):
        z = rng.standard_normal((n, self.z_dim))
        u = np.concatenate([np.tile(y_row_std, (n, 1)), z], axis=1)
        return self.decoder.run_np(u)


class CVAE(Model):
    """Conditional VAE: encoder (x, y) -> (mu_z, log sigma_z), decoder
    (z, y) -> x. The KL weight ramps linearly over the first fifth of
    training to delay posterior collapse."""

    ANNEAL_FRACTION = 0.2

    def __init__(self, kind, problem, y_dim, seed, width, n_hidden: int = 2):
        z_dim = 4 - y_dim
        super().__init__(kind, problem, y_dim, z_dim, seed,
                         {"width": width, "n_hidden": n_hidden})
        rng = np.random.default_rng(seed)
        hidden = [width] * n_hidden
        self.encoder = MLP([X_DIM + y_dim, *hidden, 2 * z_dim], rng, name="enc")
        self.decoder = MLP([z_dim + y_dim, *hidden, X_DIM], rng, name="dec")

    def layer_list(self):
        return [*self.encoder.layers, *self.decoder.layers]

    def loss(self, xb, yb, spec, rng, progress):
        x, y = Tensor(xb), Tensor(yb)
        h = self.encoder(concat([x, y], axis=1))
        mu = cols(h, list(range(self.z_dim)))
        log_var = cols(h, list(range(self.z_dim, 2 * self.z_dim)))
        eps = Tensor(rng.standard_normal((xb.shape[0], self.z_dim)))
        z = mu + exp(0.5 * log_var) * eps
        x_hat = self.decoder(concat([z, y], axis=1))
        alpha = spec.alpha * min(1.0, progress / self.ANNEAL_FRACTION)
        return loss_elbo_cycle(x, x_hat, mu, exp(log_var), alpha)

    def _sample_std(self, y_row_std, n, rng):
        z = rng.standard_normal((n, self.z_dim))
        u = np.concatenate([z, np.tile(y_row_std, (n, 1))], axis=1)
        return self.decoder.run_np(u)
