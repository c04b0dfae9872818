from .tensor import (
    NonFiniteError,
    ShapeError,
    Tensor,
    add,
    backward,
    cols,
    concat,
    cos,
    div,
    exp,
    leaky_relu,
    log,
    matmul,
    mul,
    neg,
    sin,
    softplus,
    square,
    sub,
    tanh,
    tmean,
    transpose,
    tsum,
)
from .nn import MLP, Linear, Parameter, xavier_uniform
from .optim import Adam
from .spectral import spectral_norm

__all__ = [
    "NonFiniteError", "ShapeError", "Tensor",
    "add", "backward", "cols", "concat", "cos", "div", "exp", "leaky_relu",
    "log", "matmul", "mul", "neg", "sin", "softplus", "square", "sub",
    "tanh", "tmean", "transpose", "tsum",
    "MLP", "Linear", "Parameter", "xavier_uniform", "Adam", "spectral_norm",
]
