"""Training loop: epoch-scoped RNG streams, Adam, divergence diagnostics.

Each epoch draws its shuffle and loss noise from a stream keyed by
(seed, model, problem, epoch), so resuming from an epoch checkpoint
reproduces the uninterrupted run bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Adam, NonFiniteError, backward
from ..problems import Dataset
from ..seeding import stream
from .base import Model


class TrainingDivergedError(RuntimeError):
    """Loss went non-finite; carries the epoch/batch and producing op."""

    def __init__(self, epoch: int, batch: int, op: str):
        self.epoch = epoch
        self.batch = batch
        self.op = op
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch} (op '{op}')")


@dataclass(frozen=True)
class TrainSchedule:
    epochs: int = 60
    batch_size: int = 256
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8


@dataclass
class TrainResult:
    model: Model
    curve: list = field(default_factory=list)
    parameter_count: int = 0


def make_optimizer(model: Model, schedule: TrainSchedule) -> Adam:
    return Adam.for_layers(model.layer_list(), lr=schedule.lr, beta1=schedule.beta1,
                           beta2=schedule.beta2, eps=schedule.adam_eps)


def train(model: Model, dataset: Dataset, loss_spec, schedule: TrainSchedule,
          master_seed: int, optimizer: Adam | None = None, start_epoch: int = 0,
          log_fn=None) -> TrainResult:
    """Fit `model` on the dataset; returns the loss curve alongside it.

    `start_epoch`/`optimizer` support deterministic resume: pass the Adam
    state restored from a checkpoint and the number of epochs already done.
    """
    if start_epoch == 0:
        model.fit_standardizers(dataset.xs, dataset.ys)
    xs = model.x_std.transform(dataset.xs)
    ys = model.y_std.transform(dataset.ys)
    n = xs.shape[0]
    opt = optimizer or make_optimizer(model, schedule)
    n_batches = max(1, (n + schedule.batch_size - 1) // schedule.batch_size)
    total_steps = schedule.epochs * n_batches
    curve = []
    for epoch in range(start_epoch, schedule.epochs):
        rng = stream(master_seed, "train", model.kind, dataset.problem, epoch)
        order = rng.permutation(n)
        epoch_loss = 0.0
        for bi in range(n_batches):
            rows = order[bi * schedule.batch_size:(bi + 1) * schedule.batch_size]
            if rows.size == 0:
                continue
            progress = (epoch * n_batches + bi) / total_steps
            try:
                loss = model.loss(xs[rows], ys[rows], loss_spec, rng, progress)
                opt.zero_grad()
                backward(loss)
                opt.step()
                model.post_step()
            except NonFiniteError as err:
                raise TrainingDivergedError(epoch, bi, err.op) from err
            epoch_loss += float(loss.data) * rows.size
        row = {"epoch": epoch, "loss": epoch_loss / n}
        row.update(model.extra_metrics())
        curve.append(row)
        model.epochs_done = epoch + 1
        if log_fn is not None:
            log_fn(row)
    model.trained = True
    return TrainResult(model, curve, model.parameter_count())
