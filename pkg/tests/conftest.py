"""Shared numerical oracles for the suite: central finite differences for
gradients and Jacobians, independent of the tape they check."""

import numpy as np
import pytest


def finite_diff_grads(f, arrays, h=1e-5):
    """Central-difference gradient of the scalar f() w.r.t. each array,
    perturbing entries in place."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f()
            flat[i] = orig - h
            fm = f()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads


def finite_diff_jacobian(f, x_row, h=1e-6):
    """Dense Jacobian of a vector map at one point."""
    x_row = np.asarray(x_row, dtype=np.float64)
    d_in = x_row.size
    cols = []
    for j in range(d_in):
        xp = x_row.copy()
        xm = x_row.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((f(xp) - f(xm)) / (2.0 * h))
    return np.stack(cols, axis=1)


def max_rel_err(a, b, floor=1e-8):
    """Largest elementwise relative error, ignoring entries where both
    sides are below the floor (absolute agreement suffices there)."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    scale = np.maximum(np.abs(a), np.abs(b))
    mask = scale > floor
    if not mask.any():
        return 0.0
    return float((np.abs(a - b)[mask] / scale[mask]).max())


def assert_grads_close(analytic, numeric, rtol=1e-5, atol=1e-8):
    for ga, gn in zip(analytic, numeric):
        np.testing.assert_allclose(ga, gn, rtol=rtol, atol=atol)
        assert max_rel_err(ga, gn, floor=atol) < rtol


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
