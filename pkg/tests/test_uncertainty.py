import math

import numpy as np
import pytest

from conftest import random_orthonormal
from uktl.subspace import truncated_subspace
from uktl.uncertainty import (MsnParams, feature_dim, logistic, msn_features, msn_forward, penalty_grad,
                              uncertainty_penalty, weight_subspace)


def _zero_params(dims=(4, 5), orders=(2, 3)):
    return MsnParams.init(dims, orders, identity=False)


def test_zero_params_give_midpoint(rng):
    params = _zero_params()
    s = truncated_subspace(rng.standard_normal((4, 9)), 2)
    np.testing.assert_allclose(msn_forward(params, s, 0), 5.05, atol=1e-15)


def test_saturation_reaches_upper_bound(rng):
    params = _zero_params()
    params.biases[1][:] = 20.0
    s = truncated_subspace(rng.standard_normal((5, 9)), 3)
    sig = msn_forward(params, s, 1)
    assert np.all(np.abs(sig - 10.0) <= 1e-6)


def test_identity_init_gives_unit_sigma(rng):
    params = MsnParams.init((4, 5), (2, 3))
    s = truncated_subspace(rng.standard_normal((5, 9)), 3)
    np.testing.assert_allclose(msn_forward(params, s, 1), 1.0, atol=1e-14)


@pytest.mark.parametrize("input_mode", ["singular_values", "projection_flat"])
def test_forward_matches_scalar_loop(rng, input_mode):
    params = MsnParams.init((6,), (3,), input_mode=input_mode, scale=0.5, seed=4, identity=False)
    s = truncated_subspace(rng.standard_normal((6, 10)), 3)
    f = msn_features(s, input_mode)
    assert f.size == feature_dim(6, 3, input_mode)
    W, b = params.weights[0], params.biases[0]
    expected = []
    for k in range(3):
        z = b[k] + sum(W[k, j] * f[j] for j in range(f.size))
        expected.append(0.1 + 9.9 / (1.0 + math.exp(-z)))
    np.testing.assert_allclose(msn_forward(params, s, 0), expected, atol=1e-12, rtol=0)


def test_singular_value_features_are_scale_free(rng):
    x = rng.standard_normal((5, 8))
    a = msn_features(truncated_subspace(x, 3), "singular_values")
    b = msn_features(truncated_subspace(7.0 * x, 3), "singular_values")
    np.testing.assert_allclose(a, b, rtol=1e-12)
    assert np.linalg.norm(a) == pytest.approx(1.0)


def test_batched_forward_and_gradient():
    params = MsnParams.init((5,), (2,), scale=1.0, seed=0, identity=False)
    feats = np.random.default_rng(0).standard_normal((3, 2))
    sig, dsig = msn_forward(params, feats, 0, return_grad=True)
    assert sig.shape == (3, 2)
    h = 1e-6
    z = feats @ params.weights[0].T + params.biases[0]
    num = (0.1 + 9.9 * logistic(z + h) - (0.1 + 9.9 * logistic(z - h))) / (2 * h)
    np.testing.assert_allclose(dsig, num, rtol=1e-7)


def test_feature_dim_mismatch():
    params = _zero_params()
    with pytest.raises(ValueError):
        msn_forward(params, np.zeros(5), 0)


@pytest.mark.parametrize("bounds", [(0.0, 1.0), (2.0, 1.0)])
def test_bad_bounds(bounds):
    with pytest.raises(ValueError):
        MsnParams.init((3,), (1,), sigma_min=bounds[0], sigma_max=bounds[1])


def test_logistic_is_stable():
    out = logistic(np.array([-1000.0, 0.0, 1000.0]))
    np.testing.assert_array_equal(out, [0.0, 0.5, 1.0])


def test_weight_subspace_examples(rng):
    U = random_orthonormal(rng, 6, 2)
    np.testing.assert_array_equal(weight_subspace(U, [1.0, 1.0]), U)
    np.testing.assert_allclose(np.linalg.norm(weight_subspace(U, [4.0, 4.0]), axis=0), [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(weight_subspace(U, [4.0, 4.0]), U / 2, atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(weight_subspace(U, [1.0, 4.0]), axis=0), [1.0, 0.5], atol=1e-15)


def test_weight_subspace_rejects_nonpositive(rng):
    with pytest.raises(ValueError):
        weight_subspace(random_orthonormal(rng, 4, 2), [1.0, 0.0])


def test_penalty_identical_sigmas():
    n, M, p, beta = 5, 3, 2, 0.01
    sig = np.full((n, M, p), 2.5)
    assert uncertainty_penalty(sig, beta) == pytest.approx(beta * n * M * p * math.log(1 / n), abs=1e-12)


def test_penalty_single_sample_is_zero(rng):
    assert uncertainty_penalty(rng.uniform(0.1, 10, size=(1, 3, 4)), 0.5) == 0.0


def test_penalty_matches_scalar_loop(rng):
    sigmas = [rng.uniform(0.1, 10, size=(6, p)) for p in (2, 3, 4)]
    beta = 0.3
    total = 0.0
    for s in sigmas:
        n, p = s.shape
        for k in range(p):
            denom = sum(s[j, k] + 1.0 for j in range(n))
            for i in range(n):
                total += math.log((s[i, k] + 1.0) / denom)
    assert uncertainty_penalty(sigmas, beta) == pytest.approx(beta * total, abs=1e-12)


def test_penalty_gradient(rng):
    sigmas = [rng.uniform(0.5, 3, size=(4, 2)), rng.uniform(0.5, 3, size=(4, 3))]
    grads = penalty_grad(sigmas, 0.2)
    h = 1e-6
    for m, s in enumerate(sigmas):
        for idx in np.ndindex(s.shape):
            up = [x.copy() for x in sigmas]
            dn = [x.copy() for x in sigmas]
            up[m][idx] += h
            dn[m][idx] -= h
            num = (uncertainty_penalty(up, 0.2) - uncertainty_penalty(dn, 0.2)) / (2 * h)
            assert grads[m][idx] == pytest.approx(num, rel=1e-6, abs=1e-10)
