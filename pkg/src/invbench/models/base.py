"""Shared model machinery: the common train/sample interface, input and
output standardization, and the bitwise checkpoint format."""

from __future__ import annotations

import numpy as np

from .. import storage
from ..autodiff import Parameter
from ..autodiff.nn import Linear


class NotTrainedError(RuntimeError):
    pass


class Standardizer:
    """Per-column affine map fitted on the training set.

    Models see standardized coordinates; metrics and the forward simulators
    always work in raw units. Stored in checkpoints.
    """

    def __init__(self, mean=None, std=None):
        self.mean = None if mean is None else np.asarray(mean, dtype=np.float64)
        self.std = None if std is None else np.asarray(std, dtype=np.float64)

    def fit(self, mat: np.ndarray) -> "Standardizer":
        self.mean = mat.mean(axis=0)
        self.std = np.maximum(mat.std(axis=0), 1e-8)
        return self

    def transform(self, mat: np.ndarray) -> np.ndarray:
        return (mat - self.mean) / self.std

    def inverse(self, mat: np.ndarray) -> np.ndarray:
        return mat * self.std + self.mean


class Model:
    """Base for the zoo: train on (x, y) pairs, then sample p(x | y*).

    Subclasses set `kind`, `hyper` (enough to rebuild the architecture
    given the same seed) and implement `layer_list`, `loss` and
    `_sample_std`; extra trainable/persistent arrays go through
    `extra_arrays`.
    """

    X_DIM = 4

    def __init__(self, kind: str, problem: str, y_dim: int, z_dim: int, seed: int, hyper: dict):
        self.kind = kind
        self.problem = problem
        self.y_dim = y_dim
        self.z_dim = z_dim
        self.seed = seed
        self.hyper = dict(hyper)
        self.trained = False
        self.epochs_done = 0
        self.x_std = Standardizer()
        self.y_std = Standardizer()

    # -- architecture hooks -------------------------------------------------
    def layer_list(self):
        raise NotImplementedError

    def loss(self, xb, yb, spec, rng, progress: float):
        raise NotImplementedError

    def _sample_std(self, y_row_std: np.ndarray, n: int, rng) -> np.ndarray:
        raise NotImplementedError

    def post_step(self) -> None:
        """Constraint projection hook, run after each optimizer step."""

    def extra_metrics(self) -> dict:
        return {}

    def extra_arrays(self) -> dict:
        return {}

    def load_extra_arrays(self, blobs: dict) -> None:
        pass

    # -- common implementation ----------------------------------------------
    def parameters(self):
        out = []
        for layer in self.layer_list():
            if isinstance(layer, Linear):
                out.extend(layer.parameters())
            else:
                out.append(layer)
        return out

    def parameter_count(self) -> int:
        total = 0
        for layer in self.layer_list():
            if isinstance(layer, Linear):
                total += layer.parameter_count()
            else:
                total += layer.data.size
        return total

    def fit_standardizers(self, xs: np.ndarray, ys: np.ndarray) -> None:
        self.x_std.fit(xs)
        self.y_std.fit(ys)

    def sample_posterior(self, y_star, n: int, rng) -> np.ndarray:
        """Draw n posterior samples (raw units) for one condition."""
        if not self.trained:
            raise NotTrainedError(f"{self.kind} has not been trained")
        if n == 0:
            return np.empty((0, self.X_DIM))
        y_row = np.atleast_1d(np.asarray(y_star, dtype=np.float64))
        y_row_std = self.y_std.transform(y_row[None, :])[0]
        x_std = self._sample_std(y_row_std, n, rng)
        return self.x_std.inverse(x_std)

    def state_arrays(self) -> dict:
        blobs = {}
        for i, p in enumerate(self.parameters()):
            blobs[f"p{i:04d}.{p.name or 'param'}"] = p.data
        if self.x_std.mean is not None:
            blobs["std.x.mean"] = self.x_std.mean
            blobs["std.x.std"] = self.x_std.std
            blobs["std.y.mean"] = self.y_std.mean
            blobs["std.y.std"] = self.y_std.std
        blobs.update(self.extra_arrays())
        return blobs

    def load_state_arrays(self, blobs: dict) -> None:
        params = self.parameters()
        for key, arr in blobs.items():
            if key.startswith("p") and "." in key and key[1:5].isdigit():
                params[int(key[1:5])].data = arr.reshape(params[int(key[1:5])].data.shape).copy()
        if "std.x.mean" in blobs:
            self.x_std = Standardizer(blobs["std.x.mean"], blobs["std.x.std"])
            self.y_std = Standardizer(blobs["std.y.mean"], blobs["std.y.std"])
        self.load_extra_arrays(blobs)


def save_checkpoint(path, model: Model, optimizer=None) -> None:
    """Manifest plus named float64 tensors; round-trips bitwise."""
    manifest = {
        "kind": model.kind,
        "problem": model.problem,
        "y_dim": model.y_dim,
        "z_dim": model.z_dim,
        "seed": model.seed,
        "hyper": model.hyper,
        "trained": model.trained,
        "epochs_done": model.epochs_done,
        "parameter_count": model.parameter_count(),
    }
    blobs = model.state_arrays()
    if optimizer is not None:
        blobs.update(optimizer.state_arrays())
    storage.write_blocks(path, "checkpoint", manifest, blobs)


def load_checkpoint(path):
    """Return (rebuilt model, manifest, optimizer blobs)."""
    from .registry import build_model

    manifest, blobs = storage.read_blocks(path, expect_kind="checkpoint")
    model = build_model(manifest["kind"], manifest["problem"], manifest["seed"],
                        **manifest["hyper"])
    model.load_state_arrays(blobs)
    model.trained = bool(manifest["trained"])
    model.epochs_done = int(manifest["epochs_done"])
    adam_blobs = {k: v for k, v in blobs.items() if k.startswith("adam.")}
    return model, manifest, adam_blobs
