"""Mixture density network: y -> full-precision Gaussian mixture over x.

The network emits, per component, a logit, a mean vector and the entries
of a lower-triangular Cholesky factor of the precision matrix (softplus
on the diagonal keeps it positive definite by construction). A diagonal
variant exists as an ablation of the covariance structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import MLP, Tensor, cols, exp, softplus, tsum
from ..losses import GmmHead, loss_mdn_nll
from .base import Model

X_DIM = 4
DIAG_FLOOR = 1e-9


@dataclass
class GMM:
    """Numpy mixture in raw x units: weights (K,), means (K, d),
    chol_prec (K, d, d) lower-triangular with positive diagonal."""

    weights: np.ndarray
    means: np.ndarray
    chol_prec: np.ndarray

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


class MDN(Model):
    """K-component mixture head on a plain MLP trunk."""

    def __init__(self, kind, problem, y_dim, seed, width, n_components: int = 10,
                 diagonal: bool = False, n_hidden: int = 2):
        # the mixture draws 4-D Gaussian noise per sample; report that as z
        super().__init__(kind, problem, y_dim, X_DIM, seed,
                         {"width": width, "n_components": n_components,
                          "n_hidden": n_hidden})
        self.n_components = n_components
        self.diagonal = diagonal
        self.tril_idx = [(i, j) for j in range(X_DIM) for i in range(j, X_DIM)
                         if (i == j or not diagonal)]
        per_comp = 1 + X_DIM + len(self.tril_idx)
        rng = np.random.default_rng(seed)
        hidden = [width] * n_hidden
        self.net = MLP([y_dim, *hidden, n_components * per_comp], rng, name="mdn")
        self._per_comp = per_comp

    def layer_list(self):
        return list(self.net.layers)

    def head_t(self, y: Tensor) -> GmmHead:
        """Mixture parameters on the tape (standardized x space)."""
        h = self.net(y)
        K, pc = self.n_components, self._per_comp
        logits = cols(h, [k * pc for k in range(K)])
        shift = Tensor(np.max(logits.data, axis=1, keepdims=True))  # constant
        log_norm = tsum(exp(logits - shift), axis=1, keepdims=True)
        from ..autodiff import log as tlog
        log_weights = logits - shift - tlog(log_norm)
        means, chols = [], []
        for k in range(K):
            base = k * pc
            means.append(cols(h, list(range(base + 1, base + 1 + X_DIM))))
            entries = {}
            for e, (i, j) in enumerate(self.tril_idx):
                raw = cols(h, [base + 1 + X_DIM + e])
                entries[(i, j)] = softplus(raw) + DIAG_FLOOR if i == j else raw
            chols.append(entries)
        return GmmHead(log_weights, means, chols)

    def loss(self, xb, yb, spec, rng, progress):
        return loss_mdn_nll(self.head_t(Tensor(yb)), Tensor(xb))

    def predict_std(self, y_row_std: np.ndarray) -> GMM:
        """Numpy mixture for one standardized condition row."""
        h = self.net.run_np(y_row_std[None, :])[0]
        K, pc = self.n_components, self._per_comp
        logits = h[[k * pc for k in range(K)]]
        w = np.exp(logits - logits.max())
        w /= w.sum()
        means = np.stack([h[k * pc + 1: k * pc + 1 + X_DIM] for k in range(K)])
        chol = np.zeros((K, X_DIM, X_DIM))
        for k in range(K):
            for e, (i, j) in enumerate(self.tril_idx):
                raw = h[k * pc + 1 + X_DIM + e]
                chol[k, i, j] = np.logaddexp(0.0, raw) + DIAG_FLOOR if i == j else raw
        return GMM(w, means, chol)

    def predict(self, y_star) -> GMM:
        """Mixture in raw x units for one raw condition."""
        y_row = np.atleast_1d(np.asarray(y_star, dtype=np.float64))
        gmm = self.predict_std(self.y_std.transform(y_row[None, :])[0])
        # x = mu + s * x_std maps precision L to diag(1/s) L
        s = self.x_std.std
        means = self.x_std.inverse(gmm.means)
        chol = gmm.chol_prec / s[None, :, None]
        return GMM(gmm.weights, means, chol)

    def _sample_std(self, y_row_std, n, rng):
        return gmm_sample(self.predict_std(y_row_std), n, rng)


def gmm_sample(gmm: GMM, n: int, rng) -> np.ndarray:
    """Categorical component choice, then a Gaussian draw per sample via a
    triangular solve against the precision Cholesky."""
    d = gmm.dim
    ks = rng.choice(gmm.n_components, size=n, p=gmm.weights)
    out = np.empty((n, d))
    for row, k in enumerate(ks):
        eps = rng.standard_normal(d)
        # Sigma = L^-T L^-1, so x = mu + L^-T eps
        out[row] = gmm.means[k] + np.linalg.solve(gmm.chol_prec[k].T, eps)
    return out


def gmm_log_prob(gmm: GMM, x) -> np.ndarray:
    """Log density of rows of x under the mixture."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d = gmm.dim
    comp = np.empty((x.shape[0], gmm.n_components))
    for k in range(gmm.n_components):
        diff = x - gmm.means[k]
        v = diff @ gmm.chol_prec[k]
        quad = (v * v).sum(axis=1)
        log_det_half = np.log(np.diag(gmm.chol_prec[k])).sum()
        comp[:, k] = (np.log(gmm.weights[k]) - 0.5 * quad + log_det_half
                      - 0.5 * d * np.log(2.0 * np.pi))
    mx = comp.max(axis=1, keepdims=True)
    return (mx + np.log(np.exp(comp - mx).sum(axis=1, keepdims=True)))[:, 0]
