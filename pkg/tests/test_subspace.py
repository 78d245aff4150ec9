import numpy as np
import pytest

from conftest import random_orthonormal
from uktl.subspace import (Subspace, fix_signs, principal_angles, projection_distance_sq, tensor_subspaces,
                           truncated_subspace)


def test_diagonal_matrix():
    s = truncated_subspace(np.diag([2.0, 1.0]), 1)
    np.testing.assert_array_equal(s.basis[:, 0], [1.0, 0.0])
    assert s.singular_values[0] == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("shape", [(4, 9), (6, 6), (5, 20)])
def test_full_order_is_orthonormal(rng, shape):
    x = rng.standard_normal(shape)
    s = truncated_subspace(x, min(shape))
    np.testing.assert_allclose(s.basis.T @ s.basis, np.eye(min(shape)), atol=1e-10)


def test_projector_matches_gram_eigendecomposition(rng):
    x = rng.standard_normal((6, 20))
    evals, evecs = np.linalg.eigh(x @ x.T)
    top = evecs[:, np.argsort(evals)[::-1][:3]]
    s = truncated_subspace(x, 3)
    np.testing.assert_allclose(s.projector(), top @ top.T, atol=1e-8)
    np.testing.assert_allclose(s.singular_values, np.linalg.svd(x, compute_uv=False)[:3], rtol=1e-10)


@pytest.mark.parametrize("p", [0, 7])
def test_order_out_of_range(rng, p):
    with pytest.raises(ValueError):
        truncated_subspace(rng.standard_normal((6, 8)), p)


def test_fix_signs_convention():
    b = np.array([[0.6, -0.8], [-0.8, 0.6]])
    out = fix_signs(b)
    np.testing.assert_array_equal(out, [[-0.6, 0.8], [0.8, -0.6]])
    tie = fix_signs(np.array([[-0.5], [0.5]]))
    assert tie[0, 0] == 0.5


def test_tensor_subspaces_shapes(rng):
    t = rng.standard_normal((4, 5, 6))
    subs = tensor_subspaces(t, (2, 2, 2))
    assert [s.ambient_dim for s in subs] == [4, 5, 6]
    assert all(s.order == 2 for s in subs)


def test_rank_one_tensor_recovers_factors(rng):
    vs = [rng.standard_normal(n) for n in (4, 5, 6)]
    t = np.einsum("i,j,k->ijk", *vs)
    for s, v in zip(tensor_subspaces(t, 1), vs):
        assert principal_angles(s, v[:, None] / np.linalg.norm(v))[0] <= 1e-7


def test_scaling_keeps_bases(rng):
    t = rng.standard_normal((4, 5, 6))
    a, b = tensor_subspaces(t, 2), tensor_subspaces(5.0 * t, 2)
    for sa, sb in zip(a, b):
        np.testing.assert_allclose(sb.basis, sa.basis, atol=1e-12)
        np.testing.assert_allclose(sb.singular_values, 5.0 * sa.singular_values, rtol=1e-12)


def test_principal_angles_examples():
    e = np.eye(3)
    a = e[:, :1]
    assert np.all(principal_angles(a, a) == 0.0)
    assert principal_angles(a, e[:, 1:2])[0] == pytest.approx(np.pi / 2, abs=1e-15)
    diag = ((e[:, 0] + e[:, 1]) / np.sqrt(2))[:, None]
    assert principal_angles(a, diag)[0] == pytest.approx(np.pi / 4, abs=1e-15)


def test_projection_distance_examples():
    e = np.eye(4)
    assert projection_distance_sq(e[:, :2], e[:, :2]) == 0.0
    assert projection_distance_sq(e[:, :2], e[:, 2:]) == pytest.approx(4.0, abs=1e-15)
    diag = ((e[:, 0] + e[:, 1]) / np.sqrt(2))[:, None]
    explicit = np.sum((e[:, :1] @ e[:, :1].T - diag @ diag.T) ** 2)
    assert projection_distance_sq(e[:, :1], diag) == pytest.approx(1.0, abs=1e-15)
    assert explicit == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_angle_and_distance_identities(seed):
    rng = np.random.default_rng(seed)
    A, B = random_orthonormal(rng, 9, 3), random_orthonormal(rng, 9, 3)
    theta = principal_angles(A, B)
    assert np.all(np.diff(theta) >= 0) and np.all((theta >= 0) & (theta <= np.pi / 2))
    cross = np.sum((A.T @ B) ** 2)
    assert abs(cross - np.sum(np.cos(theta) ** 2)) <= 1e-10
    assert abs(projection_distance_sq(A, B) - 2 * np.sum(np.sin(theta) ** 2)) <= 1e-10
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    assert abs(projection_distance_sq(A @ Q, B) - projection_distance_sq(A, B)) <= 1e-10


def test_mismatched_dims_rejected():
    with pytest.raises(ValueError):
        projection_distance_sq(np.eye(3)[:, :1], np.eye(4)[:, :1])
    with pytest.raises(ValueError):
        principal_angles(np.eye(3)[:, :1], np.eye(3)[:, :2])


def test_subspace_accepts_dataclass(rng):
    s = Subspace(random_orthonormal(rng, 5, 2), np.array([2.0, 1.0]))
    assert projection_distance_sq(s, s.basis) == 0.0
