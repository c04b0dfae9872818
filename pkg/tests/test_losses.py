"""Objective functions against hand values, closed forms and a
permutation-test oracle for the kernel discrepancy."""

import numpy as np
import pytest

from invbench.autodiff import Parameter, Tensor, backward, tsum
from invbench.losses import (
    GmmHead,
    KernelSpec,
    LossSpec,
    l2,
    loss_ar_cycle,
    loss_elbo_cycle,
    loss_l2_mmd,
    loss_l2_mmd_cycle,
    loss_mdn_nll,
    loss_ml_yz,
    loss_ml_z,
    mmd,
)
from conftest import assert_grads_close, finite_diff_grads


def _np_kernel(a, b, spec: KernelSpec):
    # independent reimplementation for cross-checking
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    out = np.zeros_like(d2)
    for s in spec.scales:
        if spec.kind == "imq":
            out += s ** 2 / (s ** 2 + d2)
        else:
            out += np.exp(-d2 / (2 * s ** 2))
    return out


def _np_mmd(a, b, spec: KernelSpec):
    return (_np_kernel(a, a, spec).mean() + _np_kernel(b, b, spec).mean()
            - 2 * _np_kernel(a, b, spec).mean())


# ---------------------------------------------------------------------------
# l2


def test_l2_zero_on_identical_inputs(rng):
    y = rng.standard_normal((10, 2))
    assert float(l2(y, y.copy()).data) == 0.0


def test_l2_hand_value():
    assert float(l2(np.array([[3.0, 4.0]]), np.zeros((1, 2))).data) == 25.0


def test_l2_is_batch_mean_of_row_values(rng):
    y = rng.standard_normal((7, 2))
    y_gt = rng.standard_normal((7, 2))
    rows = ((y - y_gt) ** 2).sum(axis=1)
    assert float(l2(y, y_gt).data) == pytest.approx(rows.mean(), rel=1e-15)


def test_l2_translation_consistency():
    # dyadic inputs so the shifted subtraction is exact in binary
    rng = np.random.default_rng(0)
    y = np.round(rng.standard_normal((8, 2)) * 1024) / 1024
    y_gt = np.round(rng.standard_normal((8, 2)) * 1024) / 1024
    for c in (0.5, 1.0, 4.0):
        assert float(l2(y + c, y_gt + c).data) == float(l2(y, y_gt).data)


# ---------------------------------------------------------------------------
# mmd


def test_mmd_exactly_zero_on_equal_sets(rng):
    for kind in ("imq", "gaussian"):
        a = rng.standard_normal((50, 4))
        assert mmd(a, a, KernelSpec(kind)) == 0.0


def test_mmd_singleton_expansion(rng):
    spec = KernelSpec()
    a = rng.standard_normal((1, 4))
    b = rng.standard_normal((1, 4))
    k = _np_kernel
    expected = k(a, a, spec)[0, 0] - 2 * k(a, b, spec)[0, 0] + k(b, b, spec)[0, 0]
    assert mmd(a, b, spec) == pytest.approx(expected, rel=1e-12)


def test_mmd_non_negative_for_every_configured_kernel(rng):
    for kind in ("imq", "gaussian"):
        spec = KernelSpec(kind)
        for _ in range(20):
            a = rng.standard_normal((30, 3)) * rng.uniform(0.5, 2)
            b = rng.standard_normal((40, 3)) + rng.uniform(-1, 1)
            assert mmd(a, b, spec) >= 0.0


def test_mmd_matches_independent_reimplementation(rng):
    a = rng.standard_normal((60, 4))
    b = rng.standard_normal((45, 4)) + 0.3
    for kind in ("imq", "gaussian"):
        spec = KernelSpec(kind)
        assert mmd(a, b, spec) == pytest.approx(_np_mmd(a, b, spec), rel=1e-10)


def test_mmd_dimension_mismatch_raises(rng):
    with pytest.raises(ValueError):
        mmd(rng.standard_normal((5, 3)), rng.standard_normal((5, 4)))


def test_mmd_same_distribution_below_permutation_null(rng):
    # oracle: 99th percentile of the label-permutation null distribution
    spec = KernelSpec()
    a = rng.standard_normal((2000, 4))
    b = rng.standard_normal((2000, 4))
    observed = mmd(a, b, spec)

    pooled = np.concatenate([a, b], axis=0)
    gram = _np_kernel(pooled, pooled, spec)
    n = a.shape[0]
    null = []
    perm_rng = np.random.default_rng(7)
    for _ in range(200):
        idx = perm_rng.permutation(2 * n)
        ia, ib = idx[:n], idx[n:]
        null.append(gram[np.ix_(ia, ia)].mean() + gram[np.ix_(ib, ib)].mean()
                    - 2 * gram[np.ix_(ia, ib)].mean())
    threshold = np.quantile(null, 0.99)
    assert observed < threshold


# ---------------------------------------------------------------------------
# composite losses


def test_l2_mmd_reduces_to_l2_at_alpha_zero(rng):
    y, y_gt = rng.standard_normal((16, 2)), rng.standard_normal((16, 2))
    z, z_gt = rng.standard_normal((16, 2)), rng.standard_normal((16, 2))
    assert float(loss_l2_mmd(y, y_gt, z, z_gt, alpha=0.0).data) == float(l2(y, y_gt).data)


def test_l2_mmd_default_weight_is_exact_sum(rng):
    y, y_gt = rng.standard_normal((16, 2)), rng.standard_normal((16, 2))
    z, z_gt = rng.standard_normal((16, 2)), rng.standard_normal((16, 2))
    total = float(loss_l2_mmd(y, y_gt, z, z_gt, alpha=1.0).data)
    assert total == float(l2(y, y_gt).data) + mmd(z, z_gt)


def test_l2_mmd_perfect_inputs_sit_at_null_level(rng):
    y = rng.standard_normal((512, 2))
    z = rng.standard_normal((512, 2))
    z_gt = rng.standard_normal((512, 2))
    val = float(loss_l2_mmd(y, y.copy(), z, z_gt).data)
    null = [_np_mmd(rng.standard_normal((512, 2)), rng.standard_normal((512, 2)),
                    KernelSpec()) for _ in range(50)]
    assert val < np.quantile(null, 0.99) * 2


def test_ml_yz_zero_at_perfect_fit():
    n = 8
    val = loss_ml_yz(np.zeros((n, 2)), np.zeros((n, 2)), np.zeros((n, 2)), np.zeros(n))
    assert float(val.data) == 0.0


def test_ml_yz_sharper_sigma_costs_more(rng):
    y, y_gt = rng.standard_normal((8, 2)), rng.standard_normal((8, 2))
    z = rng.standard_normal((8, 2))
    ld = rng.standard_normal(8)
    vals = [float(loss_ml_yz(y, y_gt, z, ld, sigma=s).data) for s in (0.5, 0.2, 0.1, 0.05)]
    assert vals == sorted(vals)


def test_ml_yz_rejects_bad_sigma(rng):
    with pytest.raises(ValueError):
        loss_ml_yz(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(2),
                   sigma=0.0)


def test_ml_yz_gradient_matches_finite_differences(rng):
    y = Parameter(rng.standard_normal((6, 2)))
    z = Parameter(rng.standard_normal((6, 2)))
    ld = Parameter(rng.standard_normal(6))
    y_gt = rng.standard_normal((6, 2))

    def run():
        return float(loss_ml_yz(y, Tensor(y_gt), z, ld, sigma=0.3).data)

    backward(loss_ml_yz(y, Tensor(y_gt), z, ld, sigma=0.3))
    fd = finite_diff_grads(run, [y.data, z.data, ld.data])
    assert_grads_close([y.grad, z.grad, ld.grad], fd)


def test_ml_z_zero_at_standard_normal_fit():
    assert float(loss_ml_z(np.zeros((4, 4)), np.zeros(4)).data) == 0.0


def test_ml_z_matches_gaussian_nll_for_linear_whitening(rng):
    # z = A (x - mu) with A = Sigma^(-1/2): the converged flow loss equals
    # the exact Gaussian NLL minus the constant the objective omits
    d = 4
    raw = rng.standard_normal((d, d))
    sigma = raw @ raw.T + d * np.eye(d)
    mu = rng.standard_normal(d)
    evals, evecs = np.linalg.eigh(sigma)
    a = evecs @ np.diag(evals ** -0.5) @ evecs.T
    x = rng.multivariate_normal(mu, sigma, size=3000)
    z = (x - mu) @ a.T
    log_det = np.full(x.shape[0], np.log(np.abs(np.linalg.det(a))))
    loss = float(loss_ml_z(z, log_det).data)

    inv = np.linalg.inv(sigma)
    quad = np.einsum("ni,ij,nj->n", x - mu, inv, x - mu)
    nll = 0.5 * quad.mean() + 0.5 * np.log(np.linalg.det(sigma)) \
        + 0.5 * d * np.log(2 * np.pi)
    assert loss == pytest.approx(nll - 0.5 * d * np.log(2 * np.pi), rel=1e-10)


def test_ar_cycle_reduces_to_ml_yz_at_alpha_zero(rng):
    y, y_gt = rng.standard_normal((8, 2)), rng.standard_normal((8, 2))
    z, ld = rng.standard_normal((8, 2)), rng.standard_normal(8)
    x, x_hat = rng.standard_normal((8, 4)), rng.standard_normal((8, 4))
    a = float(loss_ar_cycle(y, y_gt, z, ld, x, x_hat, sigma=0.2, alpha=0.0).data)
    b = float(loss_ml_yz(y, y_gt, z, ld, sigma=0.2).data)
    assert a == b


def test_ar_cycle_perfect_reconstruction_zeroes_cycle_term(rng):
    y, y_gt = rng.standard_normal((8, 2)), rng.standard_normal((8, 2))
    z, ld = rng.standard_normal((8, 2)), rng.standard_normal(8)
    x = rng.standard_normal((8, 4))
    a = float(loss_ar_cycle(y, y_gt, z, ld, x, x.copy(), sigma=0.2, alpha=5.0).data)
    b = float(loss_ml_yz(y, y_gt, z, ld, sigma=0.2).data)
    assert a == b


def test_l2_mmd_cycle_reduces_at_beta_zero(rng):
    y, y_gt = rng.standard_normal((8, 2)), rng.standard_normal((8, 2))
    z, z_gt = rng.standard_normal((8, 2)), rng.standard_normal((8, 2))
    x, x_hat = rng.standard_normal((8, 4)), rng.standard_normal((8, 4))
    a = float(loss_l2_mmd_cycle(y, y_gt, z, z_gt, x, x_hat, alpha=0.7, beta=0.0).data)
    b = float(loss_l2_mmd(y, y_gt, z, z_gt, alpha=0.7).data)
    assert a == b


def test_l2_mmd_cycle_weights_enter_linearly(rng):
    y, y_gt = rng.standard_normal((8, 2)), rng.standard_normal((8, 2))
    z, z_gt = rng.standard_normal((8, 2)), rng.standard_normal((8, 2))
    x, x_hat = rng.standard_normal((8, 4)), rng.standard_normal((8, 4))

    def val(alpha, beta):
        return float(loss_l2_mmd_cycle(y, y_gt, z, z_gt, x, x_hat,
                                       alpha=alpha, beta=beta).data)

    base = val(0.0, 0.0)
    da = val(1.0, 0.0) - base
    db = val(0.0, 1.0) - base
    assert val(2.0, 3.0) == pytest.approx(base + 2 * da + 3 * db, rel=1e-12)


def test_elbo_cycle_zero_at_prior_posterior_and_perfect_reconstruction(rng):
    x = rng.standard_normal((6, 4))
    mu = np.zeros((6, 2))
    sig = np.ones((6, 2))
    assert float(loss_elbo_cycle(x, x.copy(), mu, sig, alpha=0.7).data) == 0.0


def test_elbo_cycle_kl_term_non_negative():
    # -(1 + log s - m^2 - s) >= 0 with equality only at (m, s) = (0, 1)
    for m in np.linspace(-2, 2, 9):
        for s in np.geomspace(0.05, 5, 9):
            kl = -0.5 * (1 + np.log(s) - m ** 2 - s)
            assert kl >= -1e-15
            if abs(m) > 1e-8 or abs(s - 1) > 1e-8:
                assert kl > 0.0


def test_elbo_cycle_rejects_non_positive_sigma(rng):
    x = rng.standard_normal((3, 4))
    with pytest.raises(ValueError):
        loss_elbo_cycle(x, x, np.zeros((3, 2)), np.zeros((3, 2)), alpha=1.0)


def test_elbo_cycle_gradient_matches_finite_differences(rng):
    x = rng.standard_normal((5, 4))
    x_hat = Parameter(rng.standard_normal((5, 4)))
    mu = Parameter(rng.standard_normal((5, 2)))
    sig = Parameter(np.abs(rng.standard_normal((5, 2))) + 0.5)

    def run():
        return float(loss_elbo_cycle(Tensor(x), x_hat, mu, sig, alpha=0.4).data)

    backward(loss_elbo_cycle(Tensor(x), x_hat, mu, sig, alpha=0.4))
    fd = finite_diff_grads(run, [x_hat.data, mu.data, sig.data])
    assert_grads_close([x_hat.grad, mu.grad, sig.grad], fd)


# ---------------------------------------------------------------------------
# mdn nll


def _single_gaussian_head(n, mu_val=0.0):
    log_w = Tensor(np.zeros((n, 1)))
    means = [Tensor(np.full((n, 4), mu_val))]
    chol = {(i, j): Tensor(np.full((n, 1), 1.0 if i == j else 0.0))
            for j in range(4) for i in range(j, 4)}
    return GmmHead(log_w, means, [chol])


def test_mdn_nll_standard_normal_at_mean():
    head = _single_gaussian_head(3)
    val = float(loss_mdn_nll(head, np.zeros((3, 4))).data)
    assert val == pytest.approx(2.0 * np.log(2 * np.pi), rel=1e-12)


def test_mdn_nll_decreases_with_sharper_precision_at_mean():
    # larger precision determinant -> higher density at the mean
    vals = []
    for scale in (0.5, 1.0, 2.0, 4.0):
        head = _single_gaussian_head(2)
        for j in range(4):
            head.chol_cols[0][(j, j)] = Tensor(np.full((2, 1), scale))
        vals.append(float(loss_mdn_nll(head, np.zeros((2, 4))).data))
    assert vals == sorted(vals, reverse=True)


def test_mdn_nll_density_normalizes_on_marginal_grid(rng):
    # two-component mixture, block structure: dims 3,4 are standard normal
    # in both components, so the (x1, x2) marginal is a 2-D mixture whose
    # grid integral must be 1
    from invbench.models import GMM, gmm_log_prob

    w = np.array([0.35, 0.65])
    means = np.zeros((2, 4))
    means[0, :2] = (-0.5, 0.2)
    means[1, :2] = (0.8, -0.4)
    chol = np.zeros((2, 4, 4))
    for k in range(2):
        a = rng.standard_normal((2, 2)) * 0.4
        prec2 = a @ a.T + np.eye(2) * (1.2 + k)
        chol[k, :2, :2] = np.linalg.cholesky(prec2)
        chol[k, 2, 2] = chol[k, 3, 3] = 1.0
    gmm = GMM(w, means, chol)

    grid = np.linspace(-6, 6, 401)
    dx = grid[1] - grid[0]
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), np.zeros(gx.size), np.zeros(gx.size)], axis=1)
    dens4 = np.exp(gmm_log_prob(gmm, pts))
    marginal = dens4 / (1.0 / (2 * np.pi))  # divide out the two standard normals at 0
    integral = marginal.sum() * dx * dx
    assert abs(integral - 1.0) < 1e-3


def test_mdn_nll_matches_numpy_log_prob(rng):
    # tape vs numpy evaluation of the same mixture
    from invbench.models import GMM, gmm_log_prob

    n, k = 6, 3
    logits = rng.standard_normal(k)
    w = np.exp(logits - logits.max())
    w /= w.sum()
    means = rng.standard_normal((k, 4))
    chol = np.zeros((k, 4, 4))
    for kk in range(k):
        a = rng.standard_normal((4, 4)) * 0.3
        chol[kk] = np.linalg.cholesky(a @ a.T + np.eye(4))
    x = rng.standard_normal((n, 4))

    log_w = Tensor(np.tile(np.log(w), (n, 1)))
    means_t = [Tensor(np.tile(means[kk], (n, 1))) for kk in range(k)]
    chol_t = [{(i, j): Tensor(np.full((n, 1), chol[kk, i, j]))
               for j in range(4) for i in range(j, 4)} for kk in range(k)]
    head = GmmHead(log_w, means_t, chol_t)
    tape_val = float(loss_mdn_nll(head, x).data)
    np_val = -gmm_log_prob(GMM(w, means, chol), x).mean()
    assert tape_val == pytest.approx(np_val, rel=1e-12)


def test_loss_spec_validation():
    with pytest.raises(ValueError):
        LossSpec("NOPE")
    with pytest.raises(ValueError):
        LossSpec("ML_YZ", sigma=-1.0)
    with pytest.raises(ValueError):
        KernelSpec("triangle")
