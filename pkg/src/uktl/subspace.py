"""Mode-wise subspaces of tensors and projection-metric geometry on G(p, n)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import matricize

__all__ = [
    "Subspace",
    "truncated_subspace",
    "tensor_subspaces",
    "principal_angles",
    "projection_distance_sq",
    "fix_signs",
]


@dataclass(frozen=True)
class Subspace:
    """A p-dimensional subspace of R^n with orthonormal ``basis`` (n x p).

    ``singular_values`` holds the p leading singular values of the matrix the
    subspace was extracted from (nonincreasing).
    """

    basis: np.ndarray
    singular_values: np.ndarray

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def order(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T


def fix_signs(basis: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive.

    Ties go to the lowest row index.
    """
    basis = np.array(basis, dtype=np.float64)
    rows = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[rows, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def truncated_subspace(x, p: int) -> Subspace:
    """Leading ``p`` left singular vectors of ``x``.

    Computed from the eigendecomposition of the small Gram matrix ``x x^T``;
    only left vectors are needed and the row count is the small side in
    every unfolding we care about.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix contains non-finite values")
    rows, cols = x.shape
    if not 1 <= p <= min(rows, cols):
        raise ValueError(f"subspace order p={p} must lie in [1, min({rows}, {cols})]")

    gram = x @ x.T
    gram = 0.5 * (gram + gram.T)
    evals, evecs = np.linalg.eigh(gram)
    top = np.argsort(evals, kind="stable")[::-1][:p]
    svals = np.sqrt(np.clip(evals[top], 0.0, None))
    return Subspace(basis=fix_signs(evecs[:, top]), singular_values=svals)


def tensor_subspaces(t, orders: Sequence[int] | int) -> tuple[Subspace, ...]:
    """Per-mode truncated subspaces of tensor ``t`` (Tucker factor matrices)."""
    t = np.asarray(t, dtype=np.float64)
    if isinstance(orders, (int, np.integer)):
        orders = [int(orders)] * t.ndim
    if len(orders) != t.ndim:
        raise ValueError(f"need {t.ndim} subspace orders, got {len(orders)}")
    return tuple(truncated_subspace(matricize(t, m), p) for m, p in enumerate(orders))


def _basis(s) -> np.ndarray:
    return s.basis if isinstance(s, Subspace) else np.asarray(s, dtype=np.float64)


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"ambient dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def principal_angles(a, b) -> np.ndarray:
    """Principal angles between span(a) and span(b), nondecreasing in [0, pi/2].

    Cosines come from the singular values of ``a^T b``.  Angles whose cosine
    exceeds 1/sqrt(2) are recovered from sines instead, because arccos loses
    all precision near zero angle.
    """
    A, B = _basis(a), _basis(b)
    _check_pair(A, B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"subspace order mismatch: {A.shape[1]} vs {B.shape[1]}")
    cross = A.T @ B
    u, cos, vt = np.linalg.svd(cross)
    cos = np.clip(cos, 0.0, 1.0)
    angles = np.arccos(cos)

    # sines: singular values of the part of B orthogonal to A, in B's principal frame
    resid = (B - A @ cross) @ vt.T
    sin = np.clip(np.linalg.norm(resid, axis=0), 0.0, 1.0)
    small = cos**2 > 0.5
    angles[small] = np.arcsin(sin[small])
    return np.sort(angles)


def projection_distance_sq(a, b) -> float:
    """Squared projection-metric distance ``||AA^T - BB^T||_F^2 = 2p - 2||A^T B||_F^2``."""
    A, B = _basis(a), _basis(b)
    _check_pair(A, B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"subspace order mismatch: {A.shape[1]} vs {B.shape[1]}")
    p = A.shape[1]
    cross = A.T @ B
    return max(0.0, 2.0 * p - 2.0 * float(np.sum(cross * cross)))
