import numpy as np
import pytest

from conftest import random_orthonormal
from uktl.kernel import (KernelConfig, combine_factors, factor_kernel, gram_matrix, median_heuristic_sigma,
                         projection_kernel, tensor_kernel, weighted_distance_sq)
from uktl.oracle import brute_force_gram
from uktl.subspace import tensor_subspaces
from uktl.uncertainty import weight_subspace


def test_factor_kernel_examples():
    e = np.eye(4)
    assert factor_kernel(e[:, :2], e[:, :2], 1.0) == 1.0
    assert factor_kernel(e[:, :2], e[:, 2:], 1.0) == pytest.approx(np.exp(-2.0), abs=1e-15)
    assert np.exp(-2.0) == pytest.approx(0.135335, abs=1e-6)
    diag = ((e[:, 0] + e[:, 1]) / np.sqrt(2))[:, None]
    assert factor_kernel(e[:, :1], diag, 1.0) == pytest.approx(0.606531, abs=1e-6)


def test_weighted_distance_matches_projector_difference(rng):
    A = weight_subspace(random_orthonormal(rng, 7, 3), [0.5, 1.0, 3.0])
    B = weight_subspace(random_orthonormal(rng, 7, 3), [2.0, 0.2, 1.0])
    explicit = np.sum((A @ A.T - B @ B.T) ** 2)
    assert weighted_distance_sq(A, B) == pytest.approx(explicit, rel=1e-12)


@pytest.mark.parametrize("combine, expected", [("product", 1.0), ("sum", 3.0), ("sum_product", 2.0)])
def test_identical_inputs(rng, combine, expected):
    subs = tensor_subspaces(rng.standard_normal((4, 5, 6)), 2)
    assert tensor_kernel(subs, subs, KernelConfig(combine=combine, mu=0.5)) == pytest.approx(expected, abs=1e-14)


def test_combine_arithmetic():
    out = combine_factors(np.array([1.0, 0.5, 0.2]), KernelConfig(mu=0.4, combine="sum_product"))
    assert float(out) == pytest.approx(0.74, abs=1e-15)


@pytest.mark.parametrize("kwargs", [dict(sigma=0.0), dict(mu=1.5), dict(combine="max")])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        KernelConfig(**kwargs)


def test_default_mixture_weight():
    assert KernelConfig().mu == 0.5


@pytest.fixture
def tuples():
    rng = np.random.default_rng(3)
    return [tensor_subspaces(rng.standard_normal((4, 5, 6)), 2) for _ in range(12)]


def test_gram_symmetric_unit_diagonal(tuples):
    K = gram_matrix(tuples, None, KernelConfig(combine="product"))
    assert np.array_equal(K, K.T)
    np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-14)


@pytest.mark.parametrize("combine", ["sum", "product", "sum_product"])
def test_gram_matches_pairwise_kernel(tuples, combine):
    cfg = KernelConfig(sigma=0.8, mu=0.3, combine=combine)
    K = gram_matrix(tuples[:5], tuples[5:], cfg)
    for i in range(5):
        for j in range(7):
            assert K[i, j] == pytest.approx(tensor_kernel(tuples[i], tuples[5 + j], cfg), abs=1e-14)


@pytest.mark.parametrize("seed", [0, 1])
def test_gram_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((6, 3, 4, 5))
    cfg = KernelConfig(sigma=1.3, mu=0.5, combine="sum_product")
    K = gram_matrix([tensor_subspaces(x, 2) for x in X], None, cfg)
    np.testing.assert_allclose(K, brute_force_gram(X, 2, cfg), atol=1e-10, rtol=0)


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("combine", ["sum", "product", "sum_product"])
def test_gram_positive_semidefinite(seed, combine):
    rng = np.random.default_rng(seed)
    tup = [tensor_subspaces(rng.standard_normal((4, 5, 6)), 2) for _ in range(16)]
    ev = np.linalg.eigvalsh(gram_matrix(tup, None, KernelConfig(combine=combine)))
    assert ev.min() >= -1e-8 * ev.max()


def test_projection_kernel(rng):
    A, B = random_orthonormal(rng, 6, 2), random_orthonormal(rng, 6, 2)
    assert projection_kernel(A, B) == pytest.approx(np.sum((A.T @ B) ** 2), abs=1e-14)
    assert projection_kernel(A, A) == pytest.approx(2.0, abs=1e-14)


def test_median_heuristic_positive_and_seeded(tuples):
    s1 = median_heuristic_sigma(tuples, seed=0)
    assert s1 > 0 and s1 == median_heuristic_sigma(tuples, seed=0)
