"""Engine-level checks: op semantics, gradients vs central differences,
Adam against a hand-executed recurrence, spectral norm against dense SVD."""

import numpy as np
import pytest

from invbench.autodiff import (
    Adam,
    MLP,
    NonFiniteError,
    Parameter,
    ShapeError,
    Tensor,
    backward,
    cols,
    concat,
    cos,
    div,
    exp,
    leaky_relu,
    log,
    matmul,
    sin,
    softplus,
    spectral_norm,
    square,
    sub,
    tanh,
    tmean,
    transpose,
    tsum,
)
from conftest import assert_grads_close, finite_diff_grads, max_rel_err


# ---------------------------------------------------------------------------
# op semantics


def test_matmul_identity_preserves_vector(rng):
    v = rng.standard_normal((3, 1))
    out = matmul(Tensor(np.eye(3)), Tensor(v))
    np.testing.assert_array_equal(out.data, v)


def test_sum_of_squares_hand_value():
    assert float(tsum(square(Tensor([3.0, 4.0]))).data) == 25.0


def test_leaky_relu_negative_branch():
    out = leaky_relu(Tensor([-2.0]), slope=0.1)
    np.testing.assert_allclose(out.data, [-0.2])


def test_matmul_shape_mismatch_raises(rng):
    with pytest.raises(ShapeError):
        matmul(Tensor(rng.standard_normal((2, 3))), Tensor(rng.standard_normal((2, 3))))


def test_log_domain_violation_names_op():
    with pytest.raises(NonFiniteError) as exc:
        log(Tensor([-1.0]))
    assert exc.value.op == "log"


def test_div_by_zero_names_op():
    with pytest.raises(NonFiniteError) as exc:
        div(Tensor([1.0]), Tensor([0.0]))
    assert exc.value.op == "div"


def test_exp_overflow_names_op():
    with pytest.raises(NonFiniteError) as exc:
        exp(Tensor([1e4]))
    assert exc.value.op == "exp"


# ---------------------------------------------------------------------------
# backward


def test_backward_sum_of_squares():
    w = Parameter([1.0, 2.0])
    backward(tsum(square(w)))
    np.testing.assert_array_equal(w.grad, [2.0, 4.0])


def test_backward_sin_at_zero():
    w = Parameter(0.0)
    backward(sin(w))
    np.testing.assert_allclose(w.grad, 1.0)


def test_backward_rejects_non_scalar():
    w = Parameter([1.0, 2.0])
    with pytest.raises(ShapeError):
        backward(square(w))


def test_backward_leaves_constants_alone():
    w = Parameter([2.0])
    c = Tensor([3.0])
    backward(tsum(w * c))
    assert c.grad is None
    np.testing.assert_array_equal(w.grad, [3.0])


def test_backward_accumulates_shared_nodes():
    w = Parameter([2.0])
    y = w * w * w  # dy/dw = 3 w^2
    backward(tsum(y))
    np.testing.assert_allclose(w.grad, [12.0])


def test_mlp_gradient_matches_central_differences(rng):
    mlp = MLP([3, 8, 8, 1], rng)
    x = rng.standard_normal((5, 3))

    def run():
        return float(tsum(square(mlp(Tensor(x)))).data)

    params = mlp.parameters()
    for p in params:
        p.grad = None
    backward(tsum(square(mlp(Tensor(x)))))
    fd = finite_diff_grads(run, [p.data for p in params], h=1e-5)
    assert_grads_close([p.grad for p in params], fd, rtol=1e-5)


def _primitive_cases(rng):
    a2 = rng.standard_normal((3, 4))
    b2 = rng.standard_normal((3, 4))
    m = rng.standard_normal((4, 2))
    pos = np.abs(rng.standard_normal((3, 4))) + 0.5
    # keep leaky inputs away from the kink where FD is invalid
    kinked = np.where(np.abs(a2) < 0.2, a2 + 0.5, a2)
    return {
        "add": ([a2, b2], lambda t: t[0] + t[1]),
        "sub": ([a2, b2], lambda t: sub(t[0], t[1])),
        "mul": ([a2, b2], lambda t: t[0] * t[1]),
        "div": ([a2, pos], lambda t: div(t[0], t[1])),
        "matmul": ([a2, m], lambda t: matmul(t[0], t[1])),
        "transpose": ([a2], lambda t: transpose(t[0])),
        "concat": ([a2, b2], lambda t: concat(t, axis=1)),
        "cols": ([a2], lambda t: cols(t[0], [2, 0, 3])),
        "sum_axis": ([a2], lambda t: tsum(t[0], axis=1)),
        "mean": ([a2], lambda t: tmean(t[0], axis=0)),
        "exp": ([a2], lambda t: exp(t[0])),
        "log": ([pos], lambda t: log(t[0])),
        "tanh": ([a2], lambda t: tanh(t[0])),
        "sin": ([a2], lambda t: sin(t[0])),
        "cos": ([a2], lambda t: cos(t[0])),
        "square": ([a2], lambda t: square(t[0])),
        "softplus": ([a2], lambda t: softplus(t[0])),
        "leaky_relu": ([kinked], lambda t: leaky_relu(t[0], slope=0.1)),
        "broadcast_add": ([a2, b2[0]], lambda t: t[0] + t[1]),
    }


def test_every_primitive_gradient_over_100_seeds():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        mix = None
        for name, (arrays, build) in _primitive_cases(rng).items():
            params = [Parameter(arr.copy()) for arr in arrays]
            weights = rng.standard_normal(build(params).shape)

            def run():
                return float(tsum(build(params) * Tensor(weights)).data)

            loss = tsum(build(params) * Tensor(weights))
            for p in params:
                p.grad = None
            backward(loss)
            fd = finite_diff_grads(run, [p.data for p in params], h=1e-5)
            analytic = [p.grad for p in params]
            for ga, gn in zip(analytic, fd):
                err = max_rel_err(ga, gn, floor=1e-6)
                assert err < 1e-5, f"{name} (seed {seed}): rel err {err:.2e}"
            mix = name
        assert mix is not None


# ---------------------------------------------------------------------------
# Adam


def test_adam_zero_gradient_leaves_parameters():
    p = Parameter([1.0, -2.0])
    opt = Adam([p], lr=0.1)
    p.grad = np.zeros(2)
    opt.step()
    np.testing.assert_array_equal(p.data, [1.0, -2.0])


def test_adam_single_step_matches_hand_recurrence():
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    # reference recurrence, executed by hand for g = 1, t = 1
    g = 1.0
    m = (1 - b1) * g
    v = (1 - b2) * g * g
    m_hat = m / (1 - b1)
    v_hat = v / (1 - b2)
    expected_delta = lr * m_hat / (np.sqrt(v_hat) + eps)

    p = Parameter([0.0])
    opt = Adam([p], lr=lr, beta1=b1, beta2=b2, eps=eps)
    p.grad = np.array([1.0])
    opt.step()
    np.testing.assert_allclose(p.data, [-expected_delta], rtol=0, atol=0)


def test_adam_runs_bitwise_identical_with_equal_seeds():
    def run():
        rng = np.random.default_rng(99)
        mlp = MLP([2, 6, 1], rng)
        opt = Adam(mlp.parameters(), lr=1e-2)
        data = np.random.default_rng(7).standard_normal((16, 2))
        for _ in range(20):
            loss = tmean(square(mlp(Tensor(data))))
            opt.zero_grad()
            backward(loss)
            opt.step()
        return [p.data.copy() for p in mlp.parameters()]

    a, b = run(), run()
    for pa, pb in zip(a, b):
        assert np.array_equal(pa, pb)


def test_adam_rejects_shape_mismatch():
    p = Parameter(np.zeros((2, 2)))
    opt = Adam([p])
    p.grad = np.zeros(3)
    with pytest.raises(ShapeError):
        opt.step()


# ---------------------------------------------------------------------------
# spectral norm


def test_spectral_norm_diagonal_case():
    assert spectral_norm(np.diag([3.0, 1.0]), iters=50) == pytest.approx(3.0, abs=1e-6)


def test_spectral_norm_identity():
    assert spectral_norm(np.eye(5), iters=5) == pytest.approx(1.0)


def test_spectral_norm_zero_matrix():
    assert spectral_norm(np.zeros((4, 4)), iters=10) == 0.0


def test_spectral_norm_matches_svd_oracle(rng):
    w = rng.standard_normal((32, 32))
    est = spectral_norm(w, iters=200, rng=rng)
    ref = np.linalg.svd(w, compute_uv=False)[0]
    assert abs(est - ref) / ref < 1e-4


def test_spectral_norm_monotone_in_iterations(rng):
    w = rng.standard_normal((16, 16))
    prev = 0.0
    for iters in (1, 2, 5, 10, 25, 50):
        est = spectral_norm(w, iters=iters, rng=np.random.default_rng(5))
        assert est >= prev - 1e-12
        prev = est


def test_tensor_rejects_non_finite_input():
    with pytest.raises(NonFiniteError):
        Tensor([np.nan])
