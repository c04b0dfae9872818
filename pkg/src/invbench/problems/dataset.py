"""Problem registry, paired-dataset generation and persistence."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import storage
from . import ballistics, kinematics

PROBLEM_NAMES = ("kinematics", "ballistics")


class GenerationBudgetError(RuntimeError):
    """Prior rejection rate is pathologically high (misconfiguration)."""


@dataclass(frozen=True)
class Problem:
    """One benchmark forward process with its prior."""

    name: str
    config: object

    @property
    def x_dim(self) -> int:
        return 4

    @property
    def y_dim(self) -> int:
        return kinematics.Y_DIM if self.name == "kinematics" else ballistics.Y_DIM

    def sample_prior(self, n: int, rng: np.random.Generator) -> np.ndarray:
        mod = kinematics if self.name == "kinematics" else ballistics
        return mod.sample_prior(n, rng, self.config)

    def forward_masked(self, x: np.ndarray):
        """(y, ok) rows; kinematics is total so ok is all-True there."""
        if self.name == "kinematics":
            y = kinematics.forward(x, self.config)
            return y, np.ones(y.shape[0], dtype=bool)
        return ballistics.forward_masked(x, self.config)

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, ok = self.forward_masked(x)
        if not ok.all():
            raise ballistics.NoImpactError("forward undefined for some rows")
        return y

    def config_echo(self) -> dict:
        d = asdict(self.config)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def get_problem(name: str, **overrides) -> Problem:
    if name == "kinematics":
        return Problem(name, kinematics.KinematicsConfig(**overrides))
    if name == "ballistics":
        return Problem(name, ballistics.BallisticsConfig(**overrides))
    raise ValueError(f"unknown problem {name!r} (expected one of {PROBLEM_NAMES})")


@dataclass
class Dataset:
    problem: str
    xs: np.ndarray
    ys: np.ndarray
    seed: int
    config_echo: dict = field(default_factory=dict)
    redraw_rate: float = 0.0

    @property
    def n(self) -> int:
        return self.xs.shape[0]


def generate_dataset(problem: Problem, n: int, rng: np.random.Generator,
                     seed: int = 0) -> Dataset:
    """Draw n prior samples with their observations; rows whose forward map
    is undefined are redrawn. Aborts if the rejection rate exceeds 99%."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.empty((n, problem.x_dim))
    ys = np.empty((n, problem.y_dim))
    filled = 0
    drawn = 0
    while filled < n:
        want = n - filled
        x = problem.sample_prior(want, rng)
        y, ok = problem.forward_masked(x)
        drawn += want
        if drawn > 100 * n and filled < drawn / 100:
            raise GenerationBudgetError(
                f"rejection rate above 99% after {drawn} draws")
        kept = int(ok.sum())
        xs[filled:filled + kept] = x[ok]
        ys[filled:filled + kept] = y[ok]
        filled += kept
    redraws = drawn - n
    return Dataset(problem.name, xs, ys, seed, problem.config_echo(),
                   redraw_rate=redraws / drawn)


def save_dataset(path, ds: Dataset) -> None:
    manifest = {
        "problem": ds.problem,
        "seed": ds.seed,
        "n": ds.n,
        "x_dim": ds.xs.shape[1],
        "y_dim": ds.ys.shape[1],
        "config": ds.config_echo,
        "redraw_rate": ds.redraw_rate,
    }
    storage.write_blocks(path, "dataset", manifest, {"xs": ds.xs, "ys": ds.ys})


def load_dataset(path) -> Dataset:
    manifest, blobs = storage.read_blocks(path, expect_kind="dataset")
    return Dataset(manifest["problem"], blobs["xs"], blobs["ys"], manifest["seed"],
                   manifest.get("config", {}), manifest.get("redraw_rate", 0.0))


def export_dataset_csv(path, ds: Dataset) -> None:
    """Named-column CSV twin of the binary file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    y_cols = [f"y{i + 1}" for i in range(ds.ys.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "x3", "x4", *y_cols])
        for xrow, yrow in zip(ds.xs, ds.ys):
            writer.writerow([format(v, ".17g") for v in (*xrow, *yrow)])
