"""Model zoo registry: builders, published loss pairings and the
equal-parameter-budget sizing rule."""

from __future__ import annotations

import numpy as np

from ..losses import KernelSpec, LossSpec
from .autoregressive import MaskedARModel
from .coupling import FlowModel
from .feedforward import CVAE, Autoencoder
from .invauto import InvAuto
from .iresnet import IResNet
from .mdn import MDN

MODEL_KINDS = (
    "inn", "inn_mmd", "cinn", "maf", "iaf",
    "iresnet", "invauto", "autoencoder", "cvae", "mdn", "mdn_diag",
)

# benchmark-table traits per kind: (uses max-likelihood loss, supervises y)
MODEL_TRAITS = {
    "inn": (True, True),
    "inn_mmd": (False, True),
    "cinn": (True, False),
    "iaf": (True, True),
    "maf": (True, True),
    "iresnet": (False, True),
    "invauto": (False, True),
    "autoencoder": (False, True),
    "cvae": (False, False),
    "mdn": (True, False),
    "mdn_diag": (True, False),
}

_Y_DIM = {"kinematics": 2, "ballistics": 1}


def loss_spec_for(kind: str, alpha: float = 1.0, beta: float = 1.0,
                  sigma: float = 0.1, cvae_alpha: float = 0.1,
                  kernel: KernelSpec | None = None) -> LossSpec:
    """The published objective for each architecture."""
    kernel = kernel or KernelSpec()
    table = {
        "inn": LossSpec("ML_YZ", sigma=sigma),
        "inn_mmd": LossSpec("L2_MMD", alpha=alpha, kernel=kernel),
        "cinn": LossSpec("ML_Z"),
        "maf": LossSpec("AR_CYCLE", alpha=alpha, sigma=sigma),
        "iaf": LossSpec("AR_CYCLE", alpha=alpha, sigma=sigma),
        "iresnet": LossSpec("L2_MMD", alpha=alpha, kernel=kernel),
        "invauto": LossSpec("L2_MMD_CYCLE", alpha=alpha, beta=beta, kernel=kernel),
        "autoencoder": LossSpec("L2_MMD_CYCLE", alpha=alpha, beta=beta, kernel=kernel),
        "cvae": LossSpec("ELBO_CYCLE", alpha=cvae_alpha),
        "mdn": LossSpec("MDN_NLL"),
        "mdn_diag": LossSpec("MDN_NLL"),
    }
    return table[kind]


def _construct(kind: str, problem: str, seed: int, width: int, **hyper):
    y_dim = _Y_DIM[problem]
    if kind in ("inn", "inn_mmd"):
        return FlowModel(kind, problem, y_dim, seed, width, mode="inn", **hyper)
    if kind == "cinn":
        return FlowModel(kind, problem, y_dim, seed, width, mode="cinn", **hyper)
    if kind in ("maf", "iaf"):
        return MaskedARModel(kind, problem, y_dim, seed, width, direction=kind, **hyper)
    if kind == "iresnet":
        return IResNet(kind, problem, y_dim, seed, width, **hyper)
    if kind == "invauto":
        return InvAuto(kind, problem, y_dim, seed, width, **hyper)
    if kind == "autoencoder":
        return Autoencoder(kind, problem, y_dim, seed, width, **hyper)
    if kind == "cvae":
        return CVAE(kind, problem, y_dim, seed, width, **hyper)
    if kind == "mdn":
        return MDN(kind, problem, y_dim, seed, width, diagonal=False, **hyper)
    if kind == "mdn_diag":
        return MDN(kind, problem, y_dim, seed, width, diagonal=True, **hyper)
    raise ValueError(f"unknown model kind {kind!r} (expected one of {MODEL_KINDS})")


def width_for_budget(kind: str, problem: str, budget: int) -> int:
    """Hidden width whose trainable-parameter count lands closest to the
    budget (counts are monotone in width, so bisect then scan)."""

    def count(w: int) -> int:
        return _construct(kind, problem, seed=0, width=w).parameter_count()

    lo, hi = 2, 8
    while count(hi) < budget:
        lo, hi = hi, hi * 2
        if hi > 65536:
            raise ValueError("budget out of range")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if count(mid) < budget:
            lo = mid
        else:
            hi = mid
    return min((lo, hi), key=lambda w: abs(count(w) - budget))


def build_model(kind: str, problem: str, seed: int, budget: int | None = 100_000,
                width: int | None = None, **hyper):
    """Construct a model sized to the parameter budget (or a given width)."""
    if width is None:
        if budget is None:
            raise ValueError("need a budget or an explicit width")
        width = width_for_budget(kind, problem, budget)
    return _construct(kind, problem, seed, width, **hyper)
