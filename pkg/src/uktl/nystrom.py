"""Nystrom linearization of the tensor kernel against a set of pivots."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .kernel import KernelConfig, combine_factors, factor_matrices, gram_matrix, stack_bases

__all__ = ["NystromMap", "DegeneratePivotsError", "fit_nystrom", "inverse_sqrt", "embed_fit", "embed_apply"]


class DegeneratePivotsError(ValueError):
    """The pivot kernel matrix has no eigenvalue above the clamp threshold."""


@dataclass(frozen=True)
class NystromMap:
    """Fitted pivot map.

    ``pivot_bases`` holds one ``(C, I_m, p_m)`` array per mode (weighted bases
    as they were at fit time).  ``feature_mean`` is ``None`` until
    :func:`embed_fit` has seen the training set.
    """

    pivot_bases: tuple[np.ndarray, ...]
    cfg: KernelConfig
    p_inv: np.ndarray
    eigvals: np.ndarray
    clamp_eps: float = 1e-8
    feature_mean: np.ndarray | None = None

    @property
    def n_pivots(self) -> int:
        return self.p_inv.shape[0]


def inverse_sqrt(K: np.ndarray, clamp_eps: float = 1e-8):
    """``U diag(lambda^-1/2) U^T``, zeroing eigenvalues below ``clamp_eps * lambda_max``.

    Returns the matrix and the eigenvalues.
    """
    K = 0.5 * (np.asarray(K, dtype=np.float64) + np.asarray(K, dtype=np.float64).T)
    evals, evecs = np.linalg.eigh(K)
    lam_max = evals[-1]
    if not lam_max > 0:
        raise DegeneratePivotsError("pivot kernel matrix has no positive eigenvalue")
    keep = evals >= clamp_eps * lam_max
    scale = np.zeros_like(evals)
    scale[keep] = 1.0 / np.sqrt(evals[keep])
    P = (evecs * scale) @ evecs.T
    return 0.5 * (P + P.T), evals


def fit_nystrom(pivot_tuples: Sequence[Sequence], cfg: KernelConfig, clamp_eps: float = 1e-8) -> NystromMap:
    """Build ``K_CC`` over the pivots and its clamped inverse square root."""
    if len(pivot_tuples) < 1:
        raise ValueError("need at least one pivot")
    K_cc = gram_matrix(pivot_tuples, None, cfg)
    p_inv, evals = inverse_sqrt(K_cc, clamp_eps)
    # contiguous layout keeps reductions identical after a checkpoint reload
    bases = tuple(np.ascontiguousarray(v) for v in stack_bases(pivot_tuples))
    return NystromMap(bases, cfg, p_inv, evals, clamp_eps)


def _raw_features(nmap: NystromMap, tuples, cfg: KernelConfig | None) -> np.ndarray:
    cfg = nmap.cfg if cfg is None else cfg
    K_nc = combine_factors(factor_matrices(stack_bases(tuples), nmap.pivot_bases, cfg.sigma), cfg)
    return K_nc @ nmap.p_inv


def embed_fit(nmap: NystromMap, train_tuples: Sequence[Sequence], cfg: KernelConfig | None = None):
    """Embed the training set and store its per-feature mean.

    Returns ``(centered features, map with feature_mean set)``.
    """
    if len(train_tuples) == 0:
        raise ValueError("embed_fit needs a nonempty training set")
    G = _raw_features(nmap, train_tuples, cfg)
    mean = G.mean(axis=0)
    return G - mean, replace(nmap, feature_mean=mean)


def embed_apply(nmap: NystromMap, tuples: Sequence[Sequence], cfg: KernelConfig | None = None) -> np.ndarray:
    """Centered Nystrom features ``K_*C P^-1 - mean`` for new tuples.

    ``cfg`` overrides the kernel settings used for the data-pivot kernel
    (for instance a mixture weight that moved since the map was fitted).
    """
    if nmap.feature_mean is None:
        raise ValueError("map has no feature mean; call embed_fit first")
    return _raw_features(nmap, tuples, cfg) - nmap.feature_mean
