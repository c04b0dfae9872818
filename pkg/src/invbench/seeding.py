"""Deterministic RNG streams derived from one master seed.

Every task gets its own generator keyed by (master seed, scope labels),
so tasks can run in any order or in parallel without sharing state and a
run is reproducible from the single seed recorded in its config.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream(master_seed: int, *scope) -> np.random.Generator:
    """Generator for a task identified by hashable scope labels."""
    tag = f"{int(master_seed)}|" + "/".join(str(s) for s in scope)
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "little"))
