"""Grassmann factor kernels and their sum / product / sum-product compositions.

A "tuple" below is one basis per tensor mode: either :class:`Subspace`
objects (orthonormal) or plain ``(I_m, p)`` arrays, which may be
uncertainty-weighted and therefore not orthonormal.  All distances are
computed through ``p x p`` cross-Gram matrices; ``I_m x I_m`` projectors are
never formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .subspace import Subspace

__all__ = [
    "COMBINES",
    "KernelConfig",
    "weighted_distance_sq",
    "factor_kernel",
    "combine_factors",
    "tensor_kernel",
    "stack_bases",
    "factor_matrices",
    "gram_matrix",
    "projection_kernel",
    "median_heuristic_sigma",
]

COMBINES = ("sum", "product", "sum_product")


@dataclass(frozen=True)
class KernelConfig:
    """RBF bandwidth, sum/product mixture weight and combination rule."""

    sigma: float = 1.0
    mu: float = 0.5
    combine: str = "sum_product"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if self.combine not in COMBINES:
            raise ValueError(f"combine must be one of {COMBINES}, got {self.combine!r}")


def _basis(s) -> np.ndarray:
    return s.basis if isinstance(s, Subspace) else np.asarray(s, dtype=np.float64)


def weighted_distance_sq(a, b) -> float:
    """``||A A^T - B B^T||_F^2`` via ``||A^T A||^2 + ||B^T B||^2 - 2 ||A^T B||^2``."""
    A, B = _basis(a), _basis(b)
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"ambient dimension mismatch: {A.shape[0]} vs {B.shape[0]}")
    aa, bb, ab = A.T @ A, B.T @ B, A.T @ B
    d = np.sum(aa * aa) + np.sum(bb * bb) - 2.0 * np.sum(ab * ab)
    return max(0.0, float(d))


def factor_kernel(a, b, sigma: float) -> float:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return float(np.exp(-weighted_distance_sq(a, b) / (2.0 * sigma * sigma)))


def combine_factors(factors: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Combine per-mode factor values stacked on the leading axis."""
    factors = np.asarray(factors, dtype=np.float64)
    if cfg.combine == "sum":
        return np.sum(factors, axis=0)
    if cfg.combine == "product":
        return np.prod(factors, axis=0)
    return cfg.mu * np.sum(factors, axis=0) + (1.0 - cfg.mu) * np.prod(factors, axis=0)


def tensor_kernel(a: Sequence, b: Sequence, cfg: KernelConfig) -> float:
    if len(a) != len(b):
        raise ValueError(f"mode-count mismatch: {len(a)} vs {len(b)}")
    factors = np.array([factor_kernel(x, y, cfg.sigma) for x, y in zip(a, b)])
    return float(combine_factors(factors, cfg))


def stack_bases(tuples: Sequence[Sequence]) -> list[np.ndarray]:
    """Stack a list of N tuples into one ``(N, I_m, p_m)`` array per mode."""
    if len(tuples) == 0:
        raise ValueError("need at least one subspace tuple")
    n_modes = len(tuples[0])
    if any(len(t) != n_modes for t in tuples):
        raise ValueError("all tuples must have the same number of modes")
    return [np.stack([_basis(t[m]) for t in tuples]) for m in range(n_modes)]


def _self_energy(stacked: np.ndarray) -> np.ndarray:
    g = np.einsum("nip,niq->npq", stacked, stacked)
    return np.sum(g * g, axis=(1, 2))


def factor_matrices(rows: Sequence[np.ndarray], cols: Sequence[np.ndarray], sigma: float) -> np.ndarray:
    """Factor-kernel values for every (row, col) pair: shape ``(M, N_rows, N_cols)``."""
    if len(rows) != len(cols):
        raise ValueError(f"mode-count mismatch: {len(rows)} vs {len(cols)}")
    out = []
    for R, C in zip(rows, cols):
        if R.shape[1] != C.shape[1]:
            raise ValueError(f"ambient dimension mismatch: {R.shape[1]} vs {C.shape[1]}")
        cross = np.einsum("aip,biq->abpq", R, C)
        d = _self_energy(R)[:, None] + _self_energy(C)[None, :] - 2.0 * np.sum(cross * cross, axis=(2, 3))
        np.maximum(d, 0.0, out=d)
        out.append(np.exp(-d / (2.0 * sigma * sigma)))
    return np.stack(out)


def gram_matrix(rows: Sequence[Sequence], cols: Sequence[Sequence] | None, cfg: KernelConfig) -> np.ndarray:
    """Kernel matrix between two lists of tuples.

    With ``cols=None`` the symmetric Gram of ``rows`` with itself is returned;
    its upper triangle is computed and mirrored so that ``K == K.T`` exactly.
    """
    R = stack_bases(rows)
    symmetric = cols is None or cols is rows
    C = R if symmetric else stack_bases(cols)
    K = combine_factors(factor_matrices(R, C, cfg.sigma), cfg)
    if symmetric:
        K = np.triu(K) + np.triu(K, 1).T
    return K


def projection_kernel(a, b) -> float:
    """Linear projection kernel ``||A^T B||_F^2`` (baseline)."""
    cross = _basis(a).T @ _basis(b)
    return float(np.sum(cross * cross))


def median_heuristic_sigma(tuples: Sequence[Sequence], max_samples: int = 64, seed: int = 0) -> float:
    """Bandwidth from the median pairwise per-mode distance on a seeded subsample."""
    rng = np.random.default_rng(seed)
    n = len(tuples)
    idx = np.sort(rng.permutation(n)[: min(n, max_samples)])
    sub = [tuples[i] for i in idx]
    stacked = stack_bases(sub)
    dists = []
    iu = np.triu_indices(len(sub), 1)
    for S in stacked:
        cross = np.einsum("aip,biq->abpq", S, S)
        e = _self_energy(S)
        d = e[:, None] + e[None, :] - 2.0 * np.sum(cross * cross, axis=(2, 3))
        dists.append(np.sqrt(np.maximum(d[iu], 0.0)))
    med = float(np.median(np.concatenate(dists))) if len(sub) > 1 else 0.0
    return med if med > 0 else 1.0
