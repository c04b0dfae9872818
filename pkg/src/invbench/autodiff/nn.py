"""MLP building blocks on top of the tape: parameters, linear layers, masks."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, ShapeError, affine, leaky_relu, tanh


class Parameter(Tensor):
    """A named trainable leaf."""

    __slots__ = ("name",)

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.name = name


def xavier_uniform(n_in: int, n_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_in, n_out))


class Linear:
    """y = x @ W + b, with optional MADE-style binary mask on W.

    Masked entries are zeroed at init and their gradients are re-masked by
    the optimizer, so they never count as trainable parameters.
    """

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 zero_init: bool = False, mask: np.ndarray | None = None, name: str = ""):
        w = np.zeros((n_in, n_out)) if zero_init else xavier_uniform(n_in, n_out, rng)
        if mask is not None:
            if mask.shape != (n_in, n_out):
                raise ShapeError("mask shape must match weight shape")
            w = w * mask
        self.weight = Parameter(w, name=f"{name}.weight")
        self.bias = Parameter(np.zeros(n_out), name=f"{name}.bias")
        self.mask = None if mask is None else mask.astype(np.float64)
        self.n_in, self.n_out = n_in, n_out

    def __call__(self, x: Tensor) -> Tensor:
        return affine(x, self.weight, self.bias)

    def run_np(self, x: np.ndarray) -> np.ndarray:
        """Tape-free forward for sampling/inference."""
        return x @ self.weight.data + self.bias.data

    def parameters(self):
        return [self.weight, self.bias]

    def parameter_count(self) -> int:
        n_w = int(self.mask.sum()) if self.mask is not None else self.weight.data.size
        return n_w + self.bias.data.size


_ACTIVATIONS = {
    "leaky_relu": (leaky_relu, lambda x, slope: np.where(x >= 0.0, x, slope * x)),
    "tanh": (lambda t, _slope: tanh(t), lambda x, _slope: np.tanh(x)),
}


class MLP:
    """Fully connected stack with a fixed activation between layers.

    `zero_last` zero-initializes the final layer so the network starts as
    the constant-zero function (coupling subnets start flows at identity).
    """

    def __init__(self, sizes, rng: np.random.Generator, activation: str = "leaky_relu",
                 slope: float = 0.01, zero_last: bool = False, name: str = ""):
        self.layers = []
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            last = i == len(sizes) - 2
            self.layers.append(Linear(a, b, rng, zero_init=zero_last and last,
                                      name=f"{name}.l{i}"))
        self.activation = activation
        self.slope = slope

    def __call__(self, x: Tensor) -> Tensor:
        act, _ = _ACTIVATIONS[self.activation]
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = act(x, self.slope)
        return x

    def run_np(self, x: np.ndarray) -> np.ndarray:
        _, act_np = _ACTIVATIONS[self.activation]
        for i, layer in enumerate(self.layers):
            x = layer.run_np(x)
            if i < len(self.layers) - 1:
                x = act_np(x, self.slope)
        return x

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def parameter_count(self) -> int:
        return sum(layer.parameter_count() for layer in self.layers)
