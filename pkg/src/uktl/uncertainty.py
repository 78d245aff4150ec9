"""Multi-mode SigmaNet: per-mode uncertainty vectors and the log-ratio penalty."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .subspace import Subspace

__all__ = [
    "INPUT_MODES",
    "MsnParams",
    "msn_features",
    "msn_forward",
    "weight_subspace",
    "uncertainty_penalty",
    "penalty_grad",
    "logistic",
    "feature_dim",
]

INPUT_MODES = ("projection_flat", "singular_values")


def logistic(z):
    z = np.asarray(z, dtype=np.float64)
    # two-branch form avoids overflow in exp for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _identity_bias(sigma_min: float, sigma_max: float) -> float:
    if not 0 < sigma_min < 1.0 < sigma_max:
        raise ValueError(f"identity init needs 0 < sigma_min < 1 < sigma_max, got ({sigma_min}, {sigma_max})")
    s =(1.0 - sigma_min) / (sigma_max - sigma_min)
    return float(np.log(s / (1.0 - s)))


@dataclass
class MsnParams:
    """One affine branch per tensor mode followed by a scaled sigmoid.

    ``weights[m]`` has shape ``(p_m, feature_dim_m)``, ``biases[m]`` shape ``(p_m,)``.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    sigma_min: float = 0.1
    sigma_max: float = 10.0
    input_mode: str = "singular_values"

    def __post_init__(self):
        if not 0 < self.sigma_min < self.sigma_max:
            raise ValueError(f"need 0 < sigma_min < sigma_max, got ({self.sigma_min}, {self.sigma_max})")
        if self.input_mode not in INPUT_MODES:
            raise ValueError(f"input_mode must be one of {INPUT_MODES}, got {self.input_mode!r}")
        if len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must have one entry per mode")

    @classmethod
    def init(cls, dims: Sequence[int], orders: Sequence[int], *, sigma_min=0.1, sigma_max=10.0,
             input_mode="singular_values", scale=0.0, seed=None, identity=True):
        """Fresh parameters.

        With ``identity=True`` the biases are set so every sigma starts at 1,
        where weighting is a no-op.  ``scale`` > 0 draws Gaussian weights.
        """
        rng = np.random.default_rng(seed)
        b0 = _identity_bias(sigma_min, sigma_max) if identity else 0.0
        weights, biases = [], []
        for dim, p in zip(dims, orders):
            fdim = feature_dim(dim, p, input_mode)
            w = scale * rng.standard_normal((p, fdim)) if scale > 0 else np.zeros((p, fdim))
            weights.append(w)
            biases.append(np.full(p, b0))
        return cls(weights, biases, sigma_min, sigma_max, input_mode)

    @property
    def n_modes(self) -> int:
        return len(self.weights)

    def copy(self) -> "MsnParams":
        return MsnParams([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                         self.sigma_min, self.sigma_max, self.input_mode)


def feature_dim(ambient_dim: int, p: int, input_mode: str) -> int:
    return ambient_dim * ambient_dim if input_mode == "projection_flat" else p


def msn_features(s: Subspace, input_mode: str) -> np.ndarray:
    """Input featurization of one subspace.

    ``projection_flat``: the flattened projector ``U U^T``.
    ``singular_values``: the p singular values scaled to unit norm, so the
    features, like the basis, do not depend on the tensor's overall scale.
    """
    if input_mode == "projection_flat":
        return (s.basis @ s.basis.T).ravel()
    if input_mode == "singular_values":
        sv = np.asarray(s.singular_values, dtype=np.float64)
        norm = np.linalg.norm(sv)
        return sv / norm if norm > 0 else sv.copy()
    raise ValueError(f"unknown input_mode {input_mode!r}")


def _scaled_sigmoid(params: MsnParams, z):
    s = logistic(z)
    span = params.sigma_max - params.sigma_min
    return params.sigma_min + span * s, span * s * (1.0 - s)


def msn_forward(params: MsnParams, s: Subspace | np.ndarray, mode: int, *, return_grad=False):
    """Uncertainty vector for one mode.

    ``s`` is a :class:`Subspace` or a precomputed feature vector (or a batch
    of them, shape ``(n, feature_dim)``).  With ``return_grad`` also returns
    ``d sigma / d z`` for the pre-activation ``z = W f + b``.
    """
    feats = msn_features(s, params.input_mode) if isinstance(s, Subspace) else np.asarray(s, dtype=np.float64)
    W, b = params.weights[mode], params.biases[mode]
    if feats.shape[-1] != W.shape[1]:
        raise ValueError(f"mode {mode}: feature dim {feats.shape[-1]} does not match MSN input {W.shape[1]}")
    sigma, dsig = _scaled_sigmoid(params, feats @ W.T + b)
    return (sigma, dsig) if return_grad else sigma


def weight_subspace(s: Subspace | np.ndarray, sigma) -> np.ndarray:
    """Scale basis direction k by ``1 / sqrt(sigma_k)``."""
    U = s.basis if isinstance(s, Subspace) else np.asarray(s, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape[-1] != U.shape[-1]:
        raise ValueError(f"sigma has {sigma.shape[-1]} entries, basis has {U.shape[-1]} directions")
    if np.any(sigma <= 0):
        raise ValueError("sigma entries must be strictly positive")
    return U / np.sqrt(sigma)[..., None, :]


def _as_mode_list(sigmas) -> list[np.ndarray]:
    if isinstance(sigmas, np.ndarray):
        if sigmas.ndim != 3:
            raise ValueError("array sigmas must have shape (n, M, p)")
        return [sigmas[:, m, :] for m in range(sigmas.shape[1])]
    return [np.asarray(s, dtype=np.float64) for s in sigmas]


def uncertainty_penalty(sigmas, beta: float) -> float:
    """``beta * sum_i sum_m sum_k log((s_ik + 1) / sum_j (s_jk + 1))`` over the batch.

    ``sigmas`` is a list over modes of ``(n, p_m)`` arrays, or an ``(n, M, p)``
    array.  The denominator sums over the samples of this batch.
    """
    total = 0.0
    mode_list = _as_mode_list(sigmas)
    for s in mode_list:
        if s.shape[0] == 0:
            raise ValueError("uncertainty penalty needs a nonempty batch")
        if np.any(s <= 0):
            raise ValueError("sigma entries must be strictly positive")
        shifted = s + 1.0
        total += float(np.sum(np.log(shifted / np.sum(shifted, axis=0))))
    return beta * total


def penalty_grad(sigmas, beta: float) -> list[np.ndarray]:
    """Gradient of :func:`uncertainty_penalty` with respect to each sigma entry."""
    grads = []
    for s in _as_mode_list(sigmas):
        shifted = s + 1.0
        n = s.shape[0]
        grads.append(beta * (1.0 / shifted - n / np.sum(shifted, axis=0)))
    return grads
