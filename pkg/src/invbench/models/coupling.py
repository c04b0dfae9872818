"""Affine coupling flows: unconditional (x -> [y, z]) and conditional
(x -> z given y) variants sharing the same block structure.

Each block applies two coupling halves with alternating active sets, then
a fixed random permutation. Scales are soft-clamped via
exp(c * tanh(raw / c)) so no batch can blow the map up; subnet output
layers start at zero, making the whole flow an identity (up to the
permutations) at initialization.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import MLP, Tensor, cols, concat, exp, tanh, tsum
from ..losses import loss_l2_mmd, loss_ml_yz, loss_ml_z
from .base import Model


class ConditionError(ValueError):
    """Condition input is missing or superfluous for the flow's mode."""


class CouplingHalf:
    """Scale/shift the active columns as a function of the passive ones."""

    def __init__(self, passive, active, cond_dim, width, clamp, rng, name):
        self.passive = list(passive)
        self.active = list(active)
        self.clamp = clamp
        n_in = len(self.passive) + cond_dim
        n_out = len(self.active)
        self.s_net = MLP([n_in, width, n_out], rng, zero_last=True, name=f"{name}.s")
        self.t_net = MLP([n_in, width, n_out], rng, zero_last=True, name=f"{name}.t")
        order = self.active + self.passive
        self.restore = list(np.argsort(order))

    def _log_scale_t(self, net_in: Tensor) -> Tensor:
        c = self.clamp
        return c * tanh(self.s_net(net_in) * (1.0 / c))

    def forward_t(self, x: Tensor, cond: Tensor | None):
        passive = cols(x, self.passive)
        active = cols(x, self.active)
        net_in = passive if cond is None else concat([passive, cond], axis=1)
        logs = self._log_scale_t(net_in)
        out_active = active * exp(logs) + self.t_net(net_in)
        out = cols(concat([out_active, passive], axis=1), self.restore)
        return out, tsum(logs, axis=1)

    def _log_scale_np(self, net_in: np.ndarray) -> np.ndarray:
        c = self.clamp
        return c * np.tanh(self.s_net.run_np(net_in) / c)

    def forward_np(self, x: np.ndarray, cond: np.ndarray | None):
        passive = x[:, self.passive]
        active = x[:, self.active]
        net_in = passive if cond is None else np.concatenate([passive, cond], axis=1)
        logs = self._log_scale_np(net_in)
        out_active = active * np.exp(logs) + self.t_net.run_np(net_in)
        out = np.concatenate([out_active, passive], axis=1)[:, self.restore]
        return out, logs.sum(axis=1)

    def inverse_np(self, u: np.ndarray, cond: np.ndarray | None) -> np.ndarray:
        passive = u[:, self.passive]
        active = u[:, self.active]
        net_in = passive if cond is None else np.concatenate([passive, cond], axis=1)
        logs = self._log_scale_np(net_in)
        in_active = (active - self.t_net.run_np(net_in)) * np.exp(-logs)
        return np.concatenate([in_active, passive], axis=1)[:, self.restore]

    def mlps(self):
        return [self.s_net, self.t_net]


class FlowModel(Model):
    """RealNVP-style bijection on the 4-D parameter space.

    mode "inn": x <-> [y, z] with dim(y) + dim(z) = 4, trained either by
    maximum likelihood or by L2 + latent MMD. mode "cinn": x <-> z (4-D)
    with the observation fed to every subnet.
    """

    def __init__(self, kind, problem, y_dim, seed, width, mode,
                 n_blocks: int = 8, clamp: float = 2.0):
        z_dim = 4 if mode == "cinn" else 4 - y_dim
        super().__init__(kind, problem, y_dim, z_dim, seed,
                         {"width": width, "n_blocks": n_blocks, "clamp": clamp})
        self.mode = mode
        rng = np.random.default_rng(seed)
        cond_dim = y_dim if mode == "cinn" else 0
        self.blocks = []
        for b in range(n_blocks):
            half_a = CouplingHalf([0, 1], [2, 3], cond_dim, width, clamp, rng, f"b{b}.a")
            half_b = CouplingHalf([2, 3], [0, 1], cond_dim, width, clamp, rng, f"b{b}.b")
            perm = rng.permutation(4)
            self.blocks.append((half_a, half_b, perm))

    def layer_list(self):
        out = []
        for half_a, half_b, _ in self.blocks:
            for mlp in half_a.mlps() + half_b.mlps():
                out.extend(mlp.layers)
        return out

    def total_permutation(self) -> np.ndarray:
        idx = np.arange(4)
        for _, _, perm in self.blocks:
            idx = idx[perm]
        return idx

    def _check_cond(self, cond) -> None:
        if self.mode == "cinn" and cond is None:
            raise ConditionError("cinn flow needs a condition input")
        if self.mode == "inn" and cond is not None:
            raise ConditionError("inn flow takes no condition input")

    def forward_t(self, x: Tensor, cond: Tensor | None = None):
        self._check_cond(cond)
        log_det = None
        for half_a, half_b, perm in self.blocks:
            x, ld_a = half_a.forward_t(x, cond)
            x, ld_b = half_b.forward_t(x, cond)
            x = cols(x, perm)
            ld = ld_a + ld_b
            log_det = ld if log_det is None else log_det + ld
        return x, log_det

    def forward_np(self, x: np.ndarray, cond: np.ndarray | None = None):
        self._check_cond(cond)
        x = np.atleast_2d(x)
        log_det = np.zeros(x.shape[0])
        for half_a, half_b, perm in self.blocks:
            x, ld_a = half_a.forward_np(x, cond)
            x, ld_b = half_b.forward_np(x, cond)
            x = x[:, perm]
            log_det += ld_a + ld_b
        return x, log_det

    def inverse_np(self, u: np.ndarray, cond: np.ndarray | None = None) -> np.ndarray:
        self._check_cond(cond)
        u = np.atleast_2d(u)
        for half_a, half_b, perm in reversed(self.blocks):
            u = u[:, np.argsort(perm)]
            u = half_b.inverse_np(u, cond)
            u = half_a.inverse_np(u, cond)
        return u

    def loss(self, xb, yb, spec, rng, progress):
        x = Tensor(xb)
        if self.mode == "cinn":
            z, log_det = self.forward_t(x, Tensor(yb))
            return loss_ml_z(z, log_det)
        out, log_det = self.forward_t(x)
        y = cols(out, list(range(self.y_dim)))
        z = cols(out, list(range(self.y_dim, 4)))
        if spec.kind == "ML_YZ":
            return loss_ml_yz(y, Tensor(yb), z, log_det, spec.sigma)
        if spec.kind == "L2_MMD":
            z_gt = rng.standard_normal((xb.shape[0], self.z_dim))
            return loss_l2_mmd(y, Tensor(yb), z, Tensor(z_gt), spec.alpha, spec.kernel)
        raise ValueError(f"loss {spec.kind} not valid for {self.kind}")

    def _sample_std(self, y_row_std, n, rng):
        z = rng.standard_normal((n, self.z_dim))
        if self.mode == "cinn":
            cond = np.tile(y_row_std, (n, 1))
            return self.inverse_np(z, cond)
        u = np.concatenate([np.tile(y_row_std, (n, 1)), z], axis=1)
        return self.inverse_np(u)
