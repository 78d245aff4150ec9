"""Brute-force reference implementations.

Deliberately literal and slow: explicit ``I_m x I_m`` projectors, full SVDs,
Python loops.  Nothing here calls into the kernel, subspace or pivot code it
is used to check (the Nystrom error curve measures the Nystrom module
against a brute-force Gram matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "OracleReport",
    "unfold_loops",
    "svd_basis",
    "brute_force_factor",
    "brute_force_kernel",
    "brute_force_gram",
    "brute_force_forward",
    "nystrom_error_curve",
    "hard_kmeans",
]


@dataclass
class OracleReport:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} value={self.value:.3e}  tol={self.tolerance:.1e}  {self.detail}"


def unfold_loops(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode unfolding by direct index enumeration (lowest remaining mode fastest)."""
    t = np.asarray(t, dtype=np.float64)
    dims = t.shape
    rest = [k for k in range(len(dims)) if k != mode]
    ncols = int(np.prod([dims[k] for k in rest])) if rest else 1
    out = np.zeros((dims[mode], ncols))
    for idx in np.ndindex(*dims):
        col, stride = 0, 1
        for k in rest:
            col += idx[k] * stride
            stride *= dims[k]
        out[idx[mode], col] = t[idx]
    return out


def svd_basis(x: np.ndarray, p: int) -> np.ndarray:
    """Top-p left singular vectors from a full SVD (sign arbitrary)."""
    u, _, _ = np.linalg.svd(np.asarray(x, dtype=np.float64), full_matrices=False)
    return u[:, :p]


def _weighted_projector(U: np.ndarray, sigma=None) -> np.ndarray:
    n, p = U.shape
    P = np.zeros((n, n))
    for k in range(p):
        w = 1.0 if sigma is None else 1.0 / sigma[k]
        P += w * np.outer(U[:, k], U[:, k])
    return P


def brute_force_factor(Ua, Ub, bandwidth: float, sa=None, sb=None) -> float:
    diff = _weighted_projector(Ua, sa) - _weighted_projector(Ub, sb)
    d = 0.0
    for v in diff.ravel():
        d += v * v
    return math.exp(-d / (2.0 * bandwidth * bandwidth))


def _combine(factors: Sequence[float], combine: str, mu: float) -> float:
    s = 0.0
    pr = 1.0
    for f in factors:
        s += f
        pr *= f
    if combine == "sum":
        return s
    if combine == "product":
        return pr
    return mu * s + (1.0 - mu) * pr


def brute_force_kernel(bases_a, bases_b, cfg, sigmas_a=None, sigmas_b=None) -> float:
    factors = []
    for m in range(len(bases_a)):
        sa = None if sigmas_a is None else sigmas_a[m]
        sb = None if sigmas_b is None else sigmas_b[m]
        factors.append(brute_force_factor(bases_a[m], bases_b[m], cfg.sigma, sa, sb))
    return _combine(factors, cfg.combine, cfg.mu)


def _all_bases(tensors, orders):
    out = []
    for t in tensors:
        t = np.asarray(t, dtype=np.float64)
        ps = [orders] * t.ndim if isinstance(orders, int) else list(orders)
        out.append([svd_basis(unfold_loops(t, m), ps[m]) for m in range(t.ndim)])
    return out


def brute_force_gram(tensors, orders, cfg, sigmas=None, cols=None, col_sigmas=None) -> np.ndarray:
    """Kernel matrix with literal projector differences.

    ``sigmas[i][m]`` is the uncertainty vector of tensor i in mode m.  With
    ``cols`` given, returns the rectangular tensors-by-cols matrix.
    """
    rows_b = _all_bases(tensors, orders)
    cols_b = rows_b if cols is None else _all_bases(cols, orders)
    col_sigmas = sigmas if cols is None else col_sigmas
    K = np.zeros((len(rows_b), len(cols_b)))
    for i in range(len(rows_b)):
        for j in range(len(cols_b)):
            si = None if sigmas is None else sigmas[i]
            sj = None if col_sigmas is None else col_sigmas[j]
            K[i, j] = brute_force_kernel(rows_b[i], cols_b[j], cfg, si, sj)
    return K


def _scaled_sigmoid(z, lo, hi):
    return lo + (hi - lo) / (1.0 + math.exp(-z))


def _msn_sigma(W, b, feats, lo, hi):
    out = []
    for k in range(W.shape[0]):
        z = b[k]
        for f in range(W.shape[1]):
            z += W[k, f] * feats[f]
        out.append(_scaled_sigmoid(z, lo, hi))
    return out


def brute_force_forward(model, t) -> np.ndarray:
    """Straight-line logits for one tensor of a fitted model.

    Recomputes subspaces by full SVD, MSN outputs by scalar loops and kernel
    values from explicit projectors against the stored weighted pivot bases.
    """
    t = np.asarray(t, dtype=np.float64)
    M = t.ndim
    nmap = model.nmap
    sigs, bases = [], []
    for m in range(M):
        X = unfold_loops(t, m)
        u, s, _ = np.linalg.svd(X, full_matrices=False)
        p = model.orders[m]
        U = u[:, :p]
        bases.append(U)
        if not model.uncertainty:
            sigs.append([1.0] * p)
            continue
        if model.msn.input_mode == "singular_values":
            sv = s[:p]
            feats = sv / math.sqrt(sum(v * v for v in sv))
        else:
            feats = _weighted_projector(U).ravel()
        sigs.append(_msn_sigma(model.msn.weights[m], model.msn.biases[m], feats,
                               model.msn.sigma_min, model.msn.sigma_max))

    C = nmap.p_inv.shape[0]
    mu = 1.0 / (1.0 + math.exp(-float(model.mu_raw)))
    bw = math.exp(float(model.log_bandwidth))
    krow = []
    for j in range(C):
        factors = []
        for m in range(M):
            P = _weighted_projector(bases[m], sigs[m])
            V = nmap.pivot_bases[m][j]
            Q = V @ V.T
            d = float(np.sum((P - Q) ** 2))
            factors.append(math.exp(-d / (2.0 * bw * bw)))
        krow.append(_combine(factors, model.combine, mu))

    g = [sum(krow[i] * nmap.p_inv[i, c] for i in range(C)) - nmap.feature_mean[c] for c in range(C)]
    return np.array([sum(model.W[k, c] * g[c] for c in range(C)) + model.b[k] for k in range(model.W.shape[0])])


def nystrom_error_curve(tensors, orders, cfg, pivot_counts, seed: int = 0, temperature: float = 1.0,
                        clamp_eps: float = 1e-8):
    """Relative Frobenius error of the Nystrom approximation for several pivot counts.

    Returns a list of ``(C, error)``.  Pivots come from soft k-means, except
    at ``C == N`` where the samples themselves are the pivots.
    """
    from .nystrom import fit_nystrom, embed_fit
    from .pivot import soft_kmeans
    from .subspace import tensor_subspaces

    X = np.asarray(tensors, dtype=np.float64)
    n = X.shape[0]
    K = brute_force_gram(X, orders, cfg)
    tuples = [tensor_subspaces(x, orders) for x in X]
    out = []
    for C in pivot_counts:
        if C > n:
            raise ValueError(f"pivot count {C} exceeds sample count {n}")
        Z = X if C == n else soft_kmeans(X, C, temperature, seed=seed).pivots
        nmap = fit_nystrom([tensor_subspaces(z, orders) for z in Z], cfg, clamp_eps)
        G, nmap = embed_fit(nmap, tuples)
        G = G + nmap.feature_mean
        err = np.linalg.norm(K - G @ G.T) / np.linalg.norm(K)
        out.append((int(C), float(err)))
    return out


def hard_kmeans(tensors, n_clusters: int, seed: int = 0, iters: int = 100, init=None) -> np.ndarray:
    """Lloyd iterations on Frobenius distance with farthest-point seeding."""
    X = [np.asarray(t, dtype=np.float64) for t in tensors]
    n = len(X)
    rng = np.random.default_rng(seed)

    def dist(a, b):
        return float(np.sum((a - b) ** 2))

    if init is None:
        centers = [X[int(rng.integers(n))].copy()]
        while len(centers) < n_clusters:
            best, best_d = 0, -1.0
            for i in range(n):
                d = min(dist(X[i], c) for c in centers)
                if d > best_d:
                    best, best_d = i, d
            centers.append(X[best].copy())
    else:
        centers = [np.array(c, dtype=np.float64) for c in init]

    for _ in range(iters):
        groups = [[] for _ in range(n_clusters)]
        for x in X:
            ds = [dist(x, c) for c in centers]
            groups[int(np.argmin(ds))].append(x)
        new = []
        for j, g in enumerate(groups):
            new.append(np.mean(g, axis=0) if g else centers[j])
        if all(np.array_equal(a, b) for a, b in zip(new, centers)):
            break
        centers = new
    return np.stack(centers)
