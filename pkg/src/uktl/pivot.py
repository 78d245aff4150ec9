"""Soft k-means prototypes ("pivots") over tensors, used as Nystrom landmarks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["PivotSet", "soft_assign", "soft_kmeans", "farthest_point_init", "sq_distances"]

EMPTY_MASS = 1e-12


@dataclass
class PivotSet:
    """Learned pivots with the final soft assignments.

    ``objective_history`` tracks the entropy-regularized soft k-means energy
    ``sum_ij a_ij d_ij + T sum_ij a_ij log a_ij``, which each E/M step cannot
    increase; ``distortion_history`` tracks the plain ``sum_ij a_ij d_ij``.
    """

    pivots: np.ndarray  # (C, *dims)
    temperature: float
    assignments: np.ndarray  # (N, C), rows sum to 1
    objective_history: list[float] = field(default_factory=list)
    distortion_history: list[float] = field(default_factory=list)
    n_iter: int = 0

    @property
    def n_pivots(self) -> int:
        return self.pivots.shape[0]


def sq_distances(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Squared Frobenius distances between every row-tensor of X and of Z."""
    Xf = X.reshape(X.shape[0], -1)
    Zf = Z.reshape(Z.shape[0], -1)
    # explicit differences: exact zeros for coincident tensors, no cancellation
    out = np.empty((Xf.shape[0], Zf.shape[0]))
    for j, z in enumerate(Zf):
        diff = Xf - z
        out[:, j] = np.einsum("nd,nd->n", diff, diff)
    return out


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    logits = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(logits)
    return e / np.sum(e, axis=-1, keepdims=True)


def soft_assign(x, pivots, temperature: float) -> np.ndarray:
    """Responsibilities ``softmax_j(-||x - Z_j||_F^2 / T)`` of one tensor."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    x = np.asarray(x, dtype=np.float64)
    pivots = np.asarray(pivots, dtype=np.float64)
    if pivots.shape[1:] != x.shape:
        raise ValueError(f"tensor dims {x.shape} do not match pivot dims {pivots.shape[1:]}")
    d = sq_distances(x[None], pivots)[0]
    return _softmax_rows(-d / temperature)


def farthest_point_init(data: np.ndarray, n_pivots: int, seed: int) -> np.ndarray:
    """Greedy farthest-point seeding from a random first pick; returns indices."""
    rng = np.random.default_rng(seed)
    n = data.shape[0]
    chosen = [int(rng.integers(n))]
    flat = data.reshape(n, -1)
    mind = np.sum((flat - flat[chosen[0]]) ** 2, axis=1)
    for _ in range(1, n_pivots):
        nxt = int(np.argmax(mind))
        chosen.append(nxt)
        mind = np.minimum(mind, np.sum((flat - flat[nxt]) ** 2, axis=1))
    return np.array(chosen)


def _energy(alpha, d, T):
    distortion = float(np.sum(alpha * d))
    ent = float(np.sum(alpha * np.log(np.where(alpha > 0, alpha, 1.0))))
    return distortion + T * ent, distortion


def soft_kmeans(data, n_pivots: int, temperature: float = 1.0, max_iter: int = 100,
                tol: float = 1e-9, seed: int = 0, init=None) -> PivotSet:
    """Alternate soft assignment and responsibility-weighted means.

    Parameters
    ----------
    data : array-like, shape (N, *dims)
    n_pivots : int
        Number of pivots C, ``1 <= C <= N``.
    temperature : float
        Softness T of the assignments; T -> 0 recovers hard k-means.
    max_iter, tol
        Stop after ``max_iter`` rounds or once the energy drops by less
        than ``tol`` (relative to its magnitude when that exceeds 1).
    seed : int
        Seeds the farthest-point initialization.
    init : array-like, optional
        Explicit initial pivots of shape (C, *dims).
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim < 2 or X.shape[0] == 0:
        raise ValueError("soft_kmeans needs a nonempty stack of tensors")
    n = X.shape[0]
    if not 1 <= n_pivots <= n:
        raise ValueError(f"need 1 <= C <= N, got C={n_pivots}, N={n}")
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    if init is None:
        Z = X[farthest_point_init(X, n_pivots, seed)].copy()
    else:
        Z = np.array(init, dtype=np.float64)
        if Z.shape != (n_pivots,) + X.shape[1:]:
            raise ValueError(f"init has shape {Z.shape}, expected {(n_pivots,) + X.shape[1:]}")

    flat = X.reshape(n, -1)
    objective, distortion = [], []
    prev = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        d = sq_distances(X, Z)
        alpha = _softmax_rows(-d / temperature)

        mass = np.sum(alpha, axis=0)
        empty = np.flatnonzero(mass < EMPTY_MASS)
        if empty.size:
            # re-seed starving pivots at the worst-reconstructed data, one each
            worst = np.argsort(-np.sum(alpha * d, axis=1), kind="stable")
            for j, i in zip(empty, worst):
                Z[j] = X[i]
            d = sq_distances(X, Z)
            alpha = _softmax_rows(-d / temperature)
            mass = np.sum(alpha, axis=0)

        Z = ((alpha.T @ flat) / mass[:, None]).reshape(Z.shape)

        d = sq_distances(X, Z)
        energy, dist = _energy(alpha, d, temperature)
        objective.append(energy)
        distortion.append(dist)
        if prev - energy < tol * max(1.0, abs(prev)):
            break
        prev = energy

    alpha = _softmax_rows(-sq_distances(X, Z) / temperature)
    return PivotSet(Z, float(temperature), alpha, objective, distortion, it)
