"""Ground-truth posteriors by rejection sampling against the forward map."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Problem

DEFAULT_EPS = {"kinematics": 0.03, "ballistics": 0.1}


class BudgetExceededError(RuntimeError):
    """Draw budget ran out; carries the partial sample set."""

    def __init__(self, needed: int, got: int, partial: "SampleSet"):
        self.needed = needed
        self.got = got
        self.partial = partial
        super().__init__(f"oracle budget exhausted: {got}/{needed} accepted")


@dataclass
class SampleSet:
    """Posterior samples for one condition, from a model or the oracle."""

    y_star: np.ndarray
    samples: np.ndarray
    source: str
    eps: float | None = None
    acceptance_rate: float | None = None

    @property
    def n(self) -> int:
        return self.samples.shape[0]


def rejection_sample_posterior(problem: Problem, y_star, eps: float, n: int,
                               rng: np.random.Generator,
                               max_draws: int = 20_000_000,
                               chunk: int = 100_000) -> SampleSet:
    """Accept prior draws whose simulated observation lands within `eps`
    (Euclidean) of `y_star`. Draws that have no defined observation count
    against the budget but are never accepted."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    y_star = np.atleast_1d(np.asarray(y_star, dtype=np.float64))
    accepted = []
    got = 0
    drawn = 0
    while got < n and drawn < max_draws:
        m = min(chunk, max_draws - drawn)
        x = problem.sample_prior(m, rng)
        y, ok = problem.forward_masked(x)
        drawn += m
        dist = np.full(m, np.inf)
        dist[ok] = np.linalg.norm(y[ok] - y_star[None, :], axis=1)
        hit = dist <= eps
        if hit.any():
            accepted.append(x[hit])
            got += int(hit.sum())
    samples = np.concatenate(accepted, axis=0)[:n] if accepted else np.empty((0, problem.x_dim))
    rate = got / drawn if drawn else 0.0
    result = SampleSet(y_star, samples, "oracle", eps=eps, acceptance_rate=rate)
    if got < n:
        raise BudgetExceededError(n, got, result)
    return result


def eps_stability(problem: Problem, y_star, eps: float, n: int,
                  rng: np.random.Generator, max_draws: int = 50_000_000):
    """Shift of the oracle's per-dimension means when eps is halved.

    Both sample sets come from one shared draw stream (the eps/2 acceptances
    are a subset of the eps ones), isolating the eps effect from draw noise.
    Returns (delta, se): |mean_eps - mean_half| and the two-sample
    Monte-Carlo standard error, per dimension.
    """
    y_star = np.atleast_1d(np.asarray(y_star, dtype=np.float64))
    full, half = [], []
    n_full = n_half = 0
    drawn = 0
    while n_half < n and drawn < max_draws:
        x = problem.sample_prior(100_000, rng)
        y, ok = problem.forward_masked(x)
        drawn += x.shape[0]
        dist = np.full(x.shape[0], np.inf)
        dist[ok] = np.linalg.norm(y[ok] - y_star[None, :], axis=1)
        if n_full < n:
            sel = x[dist <= eps]
            full.append(sel)
            n_full += sel.shape[0]
        sel2 = x[dist <= eps / 2.0]
        half.append(sel2)
        n_half += sel2.shape[0]
    if n_half < n:
        raise BudgetExceededError(n, n_half, SampleSet(y_star, np.concatenate(half), "oracle", eps / 2))
    a = np.concatenate(full, axis=0)[:n]
    b = np.concatenate(half, axis=0)[:n]
    delta = np.abs(a.mean(axis=0) - b.mean(axis=0))
    se = np.sqrt(a.var(axis=0, ddof=1) / n + b.var(axis=0, ddof=1) / n)
    return delta, se
