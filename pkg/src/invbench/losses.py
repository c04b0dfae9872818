"""Training objectives: pure functions of model outputs and targets.

Everything is written on the tape so gradients flow to whichever inputs
require them. All losses return scalar Tensors; `mmd` returns a plain
float when called with plain arrays (the evaluation path).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    Tensor,
    cols,
    concat,
    div,
    exp,
    leaky_relu,
    log,
    matmul,
    square,
    tmean,
    transpose,
    tsum,
)

LOSS_KINDS = ("L2_MMD", "ML_YZ", "ML_Z", "AR_CYCLE", "L2_MMD_CYCLE", "ELBO_CYCLE", "MDN_NLL")


@dataclass(frozen=True)
class KernelSpec:
    """Characteristic kernel for latent/posterior matching.

    Default: a sum of inverse-multiquadric kernels s^2 / (s^2 + r^2) over a
    bandwidth ladder spanning the data scale; heavy tails keep gradients
    alive for far-apart samples. A Gaussian ladder is selectable.
    """

    kind: str = "imq"
    scales: tuple = (0.1, 0.5, 2.0)

    def __post_init__(self):
        if self.kind not in ("imq", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.scales or min(self.scales) <= 0:
            raise ValueError("kernel scales must be positive")


@dataclass(frozen=True)
class LossSpec:
    kind: str
    alpha: float = 1.0
    beta: float = 1.0
    sigma: float = 0.1
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be non-negative")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.atleast_2d(x))


def _sq_dists(a: Tensor, b: Tensor) -> Tensor:
    """Pairwise squared Euclidean distances between rows, floored at zero
    (exact-zero distances can round to tiny negatives)."""
    aa = tsum(square(a), axis=1, keepdims=True)
    bb = tsum(square(b), axis=1, keepdims=True)
    d2 = aa + transpose(bb) - 2.0 * matmul(a, transpose(b))
    return leaky_relu(d2, slope=0.0)


def kernel_matrix(a: Tensor, b: Tensor, spec: KernelSpec) -> Tensor:
    d2 = _sq_dists(a, b)
    total = None
    for s in spec.scales:
        s2 = float(s) ** 2
        if spec.kind == "imq":
            term = div(Tensor(s2), d2 + s2)
        else:
            term = exp(-1.0 * d2 * (1.0 / (2.0 * s2)))
        total = term if total is None else total + term
    return total


def mmd(samples_a, samples_b, kernel: KernelSpec | None = None):
    """Biased (V-statistic) squared maximum mean discrepancy.

    Diagonal terms are included, which keeps the estimate non-negative for
    positive-definite kernels and exactly zero on identical sets.
    """
    kernel = kernel or KernelSpec()
    tensor_in = isinstance(samples_a, Tensor) or isinstance(samples_b, Tensor)
    a, b = _as_tensor(samples_a), _as_tensor(samples_b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("mmd needs non-empty sample sets")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    k_aa = tmean(kernel_matrix(a, a, kernel))
    k_bb = tmean(kernel_matrix(b, b, kernel))
    k_ab = tmean(kernel_matrix(a, b, kernel))
    out = k_aa + k_bb - 2.0 * k_ab
    return out if tensor_in else float(out.data)


def _row_sq_norm(t: Tensor) -> Tensor:
    return tsum(square(t), axis=1)


def l2(y, y_gt) -> Tensor:
    """Batch mean of the squared Euclidean distance between observation rows."""
    return tmean(_row_sq_norm(_as_tensor(y) - _as_tensor(y_gt)))


def loss_l2_mmd(y, y_gt, z, z_gt, alpha: float = 1.0,
                kernel: KernelSpec | None = None) -> Tensor:
    """Supervised observation fit plus latent distribution matching."""
    return l2(y, y_gt) + alpha * mmd(_as_tensor(z), _as_tensor(z_gt), kernel)


def loss_ml_yz(y, y_gt, z, log_det, sigma: float = 0.1) -> Tensor:
    """Maximum likelihood for bijections x -> [y, z], with a narrow Gaussian
    observation model of width sigma around the ground truth."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    y, y_gt, z = _as_tensor(y), _as_tensor(y_gt), _as_tensor(z)
    log_det = log_det if isinstance(log_det, Tensor) else Tensor(np.atleast_1d(log_det))
    per_row = 0.5 * (_row_sq_norm(y - y_gt) * (1.0 / sigma ** 2) + _row_sq_norm(z)) - log_det
    return tmean(per_row)


def loss_ml_z(z, log_det) -> Tensor:
    """Maximum likelihood for conditional bijections x -> z."""
    z = _as_tensor(z)
    log_det = log_det if isinstance(log_det, Tensor) else Tensor(np.atleast_1d(log_det))
    return tmean(0.5 * _row_sq_norm(z) - log_det)


def loss_ar_cycle(y, y_gt, z, log_det, x, x_hat, sigma: float = 0.1,
                  alpha: float = 1.0) -> Tensor:
    """Autoregressive-direction likelihood plus decoder reconstruction."""
    cyc = tmean(_row_sq_norm(_as_tensor(x) - _as_tensor(x_hat)))
    return loss_ml_yz(y, y_gt, z, log_det, sigma) + alpha * cyc


def loss_l2_mmd_cycle(y, y_gt, z, z_gt, x, x_hat, alpha: float = 1.0, beta: float = 1.0,
                      kernel: KernelSpec | None = None) -> Tensor:
    """Observation fit, latent matching and reconstruction, all weighted."""
    cyc = tmean(_row_sq_norm(_as_tensor(x) - _as_tensor(x_hat)))
    return loss_l2_mmd(y, y_gt, z, z_gt, alpha, kernel) + beta * cyc


def loss_elbo_cycle(x, x_hat, mu_z, sigma_z, alpha: float = 1.0) -> Tensor:
    """Reconstruction plus weighted KL(N(mu, sigma) || N(0, 1)); sigma_z
    plays the variance role (networks emit log sigma_z)."""
    x, x_hat, mu_z = _as_tensor(x), _as_tensor(x_hat), _as_tensor(mu_z)
    sigma_z = _as_tensor(sigma_z)
    if np.min(sigma_z.data) <= 0:
        raise ValueError("sigma_z must be positive elementwise")
    rec = _row_sq_norm(x - x_hat)
    kl_terms = 1.0 + log(sigma_z) - square(mu_z) - sigma_z
    return tmean(rec - 0.5 * alpha * tsum(kl_terms, axis=1))


@dataclass
class GmmHead:
    """Mixture parameters as tape tensors (one batch).

    log_weights: (n, K) normalized log mixture weights.
    means: list of K (n, d) component means.
    chol_cols: list of K dicts {(i, j): (n, 1)}, lower-triangular precision
        Cholesky entries with positive diagonal (SPD by construction).
    """

    log_weights: Tensor
    means: list
    chol_cols: list

    @property
    def n_components(self) -> int:
        return len(self.means)


def loss_mdn_nll(gmm: GmmHead, x) -> Tensor:
    """Negative log likelihood of x under the predicted mixtures.

    Per component: half the quadratic form through the precision Cholesky
    minus the Cholesky log-determinant, plus the Gaussian (2 pi)^(-d/2)
    constant so density values are comparable across models; mixed by
    log-sum-exp over components.
    """
    x = _as_tensor(x)
    d = x.shape[1]
    comp_logs = []
    for k in range(gmm.n_components):
        diff = x - gmm.means[k]
        chol = gmm.chol_cols[k]
        quad = None
        log_diag = None
        for j in range(d):
            vj = None  # j-th entry of L^T (x - mu), per row
            for i in range(j, d):
                term = cols(diff, [i]) * chol[(i, j)]
                vj = term if vj is None else vj + term
            q = square(vj)
            quad = q if quad is None else quad + q
            ld = log(chol[(j, j)])
            log_diag = ld if log_diag is None else log_diag + ld
        lw = cols(gmm.log_weights, [k])
        comp_logs.append(lw - 0.5 * quad + log_diag - 0.5 * d * np.log(2.0 * np.pi))
    stacked = concat(comp_logs, axis=1)
    shift = Tensor(np.max(stacked.data, axis=1, keepdims=True))  # constant shift
    lse = log(tsum(exp(stacked - shift), axis=1, keepdims=True)) + shift
    return -1.0 * tmean(lse)
