"""Bias-corrected Adam over Parameter lists."""

from __future__ import annotations

import numpy as np

from .nn import Linear
from .tensor import ShapeError


class Adam:
    """Standard Adam. State (step, first/second moments) is exportable so
    training can resume bitwise from a checkpoint."""

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, masks=None):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.masks = masks if masks is not None else [None] * len(self.params)

    @classmethod
    def for_layers(cls, layers, **kw):
        """Build from Linear layers so MADE masks keep frozen weights at zero."""
        params, masks = [], []
        for layer in layers:
            if isinstance(layer, Linear):
                params += [layer.weight, layer.bias]
                masks += [layer.mask, None]
            else:
                params.append(layer)
                masks.append(None)
        return cls(params, masks=masks, **kw)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if g.shape != p.data.shape:
                raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.data.shape}")
            if self.masks[i] is not None:
                g = g * self.masks[i]
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_arrays(self) -> dict:
        out = {"adam.step": np.array([float(self.step_count)])}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"adam.m.{i}"] = m
            out[f"adam.v.{i}"] = v
        return out

    def load_state_arrays(self, blobs: dict):
        self.step_count = int(blobs["adam.step"][0])
        for i in range(len(self.params)):
            self.m[i] = blobs[f"adam.m.{i}"].reshape(self.m[i].shape).copy()
            self.v[i] = blobs[f"adam.v.{i}"].reshape(self.v[i].shape).copy()
