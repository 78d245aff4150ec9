"""End-to-end model: subspaces -> MSN weighting -> Nystrom features -> softmax classifier.

Gradients flow into the classifier, the MSN branches, the mixture weight
(through a logistic reparameterization) and optionally the log RBF
bandwidth.  Subspaces, pivots, ``P^-1`` and the feature mean are piecewise
constant: they are recomputed at refresh points and treated as fixed
between them.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from .kernel import KernelConfig, median_heuristic_sigma
from .nystrom import NystromMap, fit_nystrom
from .pivot import soft_kmeans
from .subspace import Subspace, tensor_subspaces
from .tensor import decode_tensor, encode_tensor
from .uncertainty import MsnParams, logistic, msn_features, msn_forward, penalty_grad, uncertainty_penalty

__all__ = [
    "CHECKPOINT_FORMAT",
    "TrainConfig",
    "UktlModel",
    "TrainingDivergedError",
    "NotFittedError",
    "train",
    "forward",
    "forward_batch",
    "loss",
    "loss_and_grad",
    "grad_check",
    "predict",
    "predict_proba",
    "evaluate",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_to_json",
    "checkpoint_from_json",
]

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "uktl-ckpt-v1"


class TrainingDivergedError(RuntimeError):
    pass


class NotFittedError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    """Training hyperparameters; defaults follow the full-scale setup."""

    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 32
    epochs: int = 60
    lr_decay_epochs: tuple[int, ...] = (40, 50)
    lr_decay_factor: float = 0.1
    refresh_every: int = 5
    seed: int = 0
    beta: float = 0.01
    combine: str = "sum_product"
    bandwidth: float = 1.0
    bandwidth_init: str = "fixed"  # or "median"
    mu_init: float = 0.5
    learn_mu: bool = True
    learn_bandwidth: bool = False
    n_pivots: int = 150
    temperature: float = 1.0
    kmeans_iter: int = 100
    orders: tuple[int, ...] | int = 8
    clamp_eps: float = 1e-8
    msn_input: str = "singular_values"
    sigma_min: float = 0.1
    sigma_max: float = 10.0
    uncertainty: bool = True
    freeze_msn: bool = False

    def __post_init__(self):
        if isinstance(self.lr_decay_epochs, list):
            self.lr_decay_epochs = tuple(self.lr_decay_epochs)
        if isinstance(self.orders, list):
            self.orders = tuple(self.orders)
        for name in ("lr", "batch_size", "epochs", "refresh_every", "n_pivots", "temperature",
                     "bandwidth", "clamp_eps", "kmeans_iter"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("momentum", "weight_decay", "beta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if not 0.0 < self.mu_init < 1.0:
            raise ValueError(f"mu_init must lie strictly inside (0, 1), got {self.mu_init}")
        if self.bandwidth_init not in ("fixed", "median"):
            raise ValueError(f"bandwidth_init must be 'fixed' or 'median', got {self.bandwidth_init!r}")
        KernelConfig(sigma=self.bandwidth, mu=self.mu_init, combine=self.combine)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lr_decay_epochs"] = list(self.lr_decay_epochs)
        if isinstance(self.orders, tuple):
            d["orders"] = list(self.orders)
        return d


@dataclass
class UktlModel:
    dims: tuple[int, ...]
    orders: tuple[int, ...]
    classes: list[int]
    msn: MsnParams
    combine: str
    mu_raw: np.ndarray
    log_bandwidth: np.ndarray
    W: np.ndarray
    b: np.ndarray
    beta: float = 0.01
    uncertainty: bool = True
    pivots: np.ndarray | None = None
    nmap: NystromMap | None = None
    config: TrainConfig = field(default_factory=TrainConfig)

    @property
    def mu(self) -> float:
        return float(logistic(self.mu_raw))

    @property
    def bandwidth(self) -> float:
        return float(np.exp(self.log_bandwidth))

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def kernel_config(self) -> KernelConfig:
        return KernelConfig(sigma=self.bandwidth, mu=self.mu, combine=self.combine)

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable arrays by name; updating them in place updates the model."""
        params = {"W": self.W, "b": self.b}
        for m in range(self.n_modes):
            params[f"msn_W{m}"] = self.msn.weights[m]
            params[f"msn_b{m}"] = self.msn.biases[m]
        params["mu_raw"] = self.mu_raw
        params["log_bandwidth"] = self.log_bandwidth
        return params


# --------------------------------------------------------------------------
# cached per-sample statistics


@dataclass
class _Stats:
    """What the differentiable part needs to know about a set of samples.

    ``feats[m]``  MSN inputs, (n, F_m)
    ``gram2[m]``  squared entries of U^T U, (n, p, p)
    ``cross2[m]`` row sums of squared U^T V_j over pivots j, (n, C, p)
    ``penergy[m]`` ||V_j^T V_j||_F^2 for each pivot, (C,)
    """

    bases: list[np.ndarray]
    feats: list[np.ndarray]
    gram2: list[np.ndarray]
    cross2: list[np.ndarray] | None = None
    penergy: list[np.ndarray] | None = None

    def take(self, idx) -> "_Stats":
        return _Stats([u[idx] for u in self.bases], [f[idx] for f in self.feats],
                      [g[idx] for g in self.gram2],
                      None if self.cross2 is None else [c[idx] for c in self.cross2],
                      self.penergy)

    def __len__(self):
        return self.bases[0].shape[0]


def _resolve_orders(orders, dims) -> tuple[int, ...]:
    if isinstance(orders, (int, np.integer)):
        orders = (int(orders),) * len(dims)
    orders = tuple(int(p) for p in orders)
    if len(orders) != len(dims):
        raise ValueError(f"need one subspace order per mode ({len(dims)}), got {len(orders)}")
    total = int(np.prod(dims))
    for m, (p, d) in enumerate(zip(orders, dims)):
        if not 1 <= p <= min(d, total // d):
            raise ValueError(f"mode {m}: subspace order {p} invalid for dims {tuple(dims)}")
    return orders


def _subspaces(X: np.ndarray, orders) -> list[tuple[Subspace, ...]]:
    return [tensor_subspaces(x, orders) for x in X]


def _sample_stats(tuples: Sequence[Sequence[Subspace]], input_mode: str) -> _Stats:
    n_modes = len(tuples[0])
    bases, feats, gram2 = [], [], []
    for m in range(n_modes):
        U = np.stack([t[m].basis for t in tuples])
        g = np.einsum("nik,nil->nkl", U, U)
        bases.append(U)
        feats.append(np.stack([msn_features(t[m], input_mode) for t in tuples]))
        gram2.append(g * g)
    return _Stats(bases, feats, gram2)


def _attach_pivots(stats: _Stats, pivot_bases: Sequence[np.ndarray]) -> _Stats:
    cross2, penergy = [], []
    for U, V in zip(stats.bases, pivot_bases):
        c = np.einsum("nik,jiq->njkq", U, V)
        cross2.append(np.sum(c * c, axis=3))
        vv = np.einsum("jik,jil->jkl", V, V)
        penergy.append(np.sum(vv * vv, axis=(1, 2)))
    return replace(stats, cross2=cross2, penergy=penergy)


def _prepare(model: UktlModel, tensors) -> _Stats:
    if model.nmap is None or model.nmap.feature_mean is None:
        raise NotFittedError("model has no fitted Nystrom map")
    X = _stack(tensors, model.dims)
    stats = _sample_stats(_subspaces(X, model.orders), model.msn.input_mode)
    return _attach_pivots(stats, model.nmap.pivot_bases)


def _stack(tensors, dims) -> np.ndarray:
    X = np.asarray(tensors, dtype=np.float64)
    if X.ndim == len(dims):
        X = X[None]
    if X.shape[0] == 0:
        raise ValueError("no input tensors")
    if tuple(X.shape[1:]) != tuple(dims):
        raise ValueError(f"tensor dims {X.shape[1:]} do not match model dims {tuple(dims)}")
    if not np.all(np.isfinite(X)):
        raise ValueError("input tensors contain non-finite values")
    return X


# --------------------------------------------------------------------------
# differentiable core


def _sigmas(model: UktlModel, stats: _Stats):
    """Per-mode uncertainty vectors and their derivative w.r.t. the MSN pre-activation."""
    out, dout = [], []
    for m in range(model.n_modes):
        if model.uncertainty:
            s, ds = msn_forward(model.msn, stats.feats[m], m, return_grad=True)
        else:
            s = np.ones((len(stats), model.orders[m]))
            ds = np.zeros_like(s)
        out.append(s)
        dout.append(ds)
    return out, dout


def _core(model: UktlModel, stats: _Stats, mean: np.ndarray | None):
    """Forward pass on prepared stats; returns logits and a cache for backprop."""
    nmap = model.nmap
    sig, dsig = _sigmas(model, stats)
    bw2 = model.bandwidth ** 2
    mu = model.mu
    ws, dists, factors = [], [], []
    for m in range(model.n_modes):
        w = 1.0 / sig[m]
        self_e = np.einsum("nk,nkl,nl->n", w, stats.gram2[m], w)
        d = self_e[:, None] + stats.penergy[m][None, :] - 2.0 * np.einsum("nk,njk->nj", w, stats.cross2[m])
        d = np.maximum(d, 0.0)
        ws.append(w)
        dists.append(d)
        factors.append(np.exp(-d / (2.0 * bw2)))
    F = np.stack(factors)
    ksum, kprod = np.sum(F, axis=0), np.prod(F, axis=0)
    if model.combine == "sum":
        k = ksum
    elif model.combine == "product":
        k = kprod
    else:
        k = mu * ksum + (1.0 - mu) * kprod
    G = k @ nmap.p_inv
    feats = G - (nmap.feature_mean if mean is None else mean)
    logits = feats @ model.W.T + model.b
    cache = dict(sig=sig, dsig=dsig, w=ws, d=dists, F=F, ksum=ksum, kprod=kprod, feats=feats, bw2=bw2, mu=mu)
    return logits, cache


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - np.max(z, axis=1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=1, keepdims=True))


def _loss_from(model, logits, cache, y):
    logp = _log_softmax(logits)
    n = logits.shape[0]
    ce = -float(np.mean(logp[np.arange(n), y]))
    pen = uncertainty_penalty(cache["sig"], model.beta) if model.uncertainty else 0.0
    return ce + pen, logp


def _backward(model: UktlModel, stats: _Stats, cache, logp, y) -> dict[str, np.ndarray]:
    n = logp.shape[0]
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n

    grads = {"W": delta.T @ cache["feats"], "b": delta.sum(axis=0)}
    dk = (delta @ model.W) @ model.nmap.p_inv.T

    F, mu, bw2 = cache["F"], cache["mu"], cache["bw2"]
    M = model.n_modes
    if model.combine == "sum":
        dk_dF = [np.ones_like(F[0])] * M
        gmu = 0.0
    else:
        others = []
        for m in range(M):
            prod = np.ones_like(F[0])
            for j in range(M):
                if j != m:
                    prod = prod * F[j]
            others.append(prod)
        if model.combine == "product":
            dk_dF = others
            gmu = 0.0
        else:
            dk_dF = [mu + (1.0 - mu) * o for o in others]
            gmu = float(np.sum(dk * (cache["ksum"] - cache["kprod"])))
    grads["mu_raw"] = np.array(gmu * mu * (1.0 - mu))

    pen_g = penalty_grad(cache["sig"], model.beta) if model.uncertainty else None
    glogbw = 0.0
    for m in range(M):
        dF = dk * dk_dF[m]
        glogbw += float(np.sum(dF * F[m] * cache["d"][m])) / bw2
        dd = dF * (-F[m] / (2.0 * bw2))
        w = cache["w"][m]
        dw = 2.0 * dd.sum(axis=1)[:, None] * np.einsum("nkl,nl->nk", stats.gram2[m], w) \
            - 2.0 * np.einsum("nj,njk->nk", dd, stats.cross2[m])
        if model.uncertainty:
            dsig = -w * w * dw + pen_g[m]
            dz = dsig * cache["dsig"][m]
            grads[f"msn_W{m}"] = dz.T @ stats.feats[m]
            grads[f"msn_b{m}"] = dz.sum(axis=0)
        else:
            grads[f"msn_W{m}"] = np.zeros_like(model.msn.weights[m])
            grads[f"msn_b{m}"] = np.zeros_like(model.msn.biases[m])
    grads["log_bandwidth"] = np.array(glogbw)
    return grads


# --------------------------------------------------------------------------
# public inference API


def forward_batch(model: UktlModel, tensors) -> np.ndarray:
    """Logits for a stack of tensors, shape (n, num_classes)."""
    logits, _ = _core(model, _prepare(model, tensors), None)
    return logits


def forward(model: UktlModel, t) -> np.ndarray:
    """Logits for one tensor."""
    return forward_batch(model, np.asarray(t, dtype=np.float64)[None])[0]


def _label_index(model: UktlModel, labels) -> np.ndarray:
    lookup = {c: i for i, c in enumerate(model.classes)}
    try:
        return np.array([lookup[int(v)] for v in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"unknown label {exc.args[0]}") from None


def loss(model: UktlModel, tensors, labels) -> float:
    """Mean cross-entropy plus the batch uncertainty penalty."""
    return loss_and_grad(model, tensors, labels, need_grad=False)[0]


def loss_and_grad(model: UktlModel, tensors, labels, need_grad=True):
    stats = _prepare(model, tensors)
    y = _label_index(model, labels)
    if len(y) != len(stats):
        raise ValueError("number of labels does not match number of tensors")
    logits, cache = _core(model, stats, None)
    value, logp = _loss_from(model, logits, cache, y)
    return value, (_backward(model, stats, cache, logp, y) if need_grad else None)


def predict_proba(model: UktlModel, tensors) -> np.ndarray:
    return np.exp(_log_softmax(forward_batch(model, tensors)))


def predict(model: UktlModel, tensors) -> np.ndarray:
    """Predicted labels; ties go to the lowest class index."""
    idx = np.argmax(forward_batch(model, tensors), axis=1)
    return np.asarray(model.classes)[idx]


def evaluate(model: UktlModel, tensors, labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("cannot evaluate accuracy on an empty dataset")
    return float(np.mean(predict(model, tensors) == labels))


# --------------------------------------------------------------------------
# training


def _pivot_weighted_bases(model: UktlModel, pivot_tuples) -> list[np.ndarray]:
    stats = _sample_stats(pivot_tuples, model.msn.input_mode)
    sig, _ = _sigmas(model, stats)
    return [U / np.sqrt(s)[:, None, :] for U, s in zip(stats.bases, sig)]


def refresh(model: UktlModel, pivot_tuples, train_stats: _Stats, clamp_eps: float) -> _Stats:
    """Re-weight the pivots, refit ``P^-1`` and re-estimate the feature mean.

    Returns the training stats re-attached to the new pivot bases.
    """
    weighted = _pivot_weighted_bases(model, pivot_tuples)
    C = weighted[0].shape[0]
    nmap = fit_nystrom([tuple(V[j] for V in weighted) for j in range(C)], model.kernel_config(), clamp_eps)
    model.nmap = nmap
    stats = _attach_pivots(train_stats, nmap.pivot_bases)
    _, cache = _core(model, stats, mean=np.zeros(C))
    model.nmap = replace(nmap, feature_mean=cache["feats"].mean(axis=0))
    return stats


def _decayed(name: str) -> bool:
    return name == "W" or name.startswith("msn_W")


def init_model(dims, classes, cfg: TrainConfig, bandwidth: float | None = None) -> UktlModel:
    dims = tuple(int(d) for d in dims)
    orders = _resolve_orders(cfg.orders, dims)
    msn = MsnParams.init(dims, orders, sigma_min=cfg.sigma_min, sigma_max=cfg.sigma_max,
                         input_mode=cfg.msn_input)
    bw = cfg.bandwidth if bandwidth is None else bandwidth
    return UktlModel(
        dims=dims, orders=orders, classes=[int(c) for c in classes], msn=msn, combine=cfg.combine,
        mu_raw=np.array(math.log(cfg.mu_init / (1.0 - cfg.mu_init))),
        log_bandwidth=np.array(math.log(bw)),
        W=np.zeros((len(classes), cfg.n_pivots)), b=np.zeros(len(classes)),
        beta=cfg.beta, uncertainty=cfg.uncertainty, config=cfg,
    )


def train(tensors, labels, cfg: TrainConfig, callback=None):
    """Fit a model; returns ``(model, history)``.

    ``history`` has one dict per epoch with the mean minibatch loss, the
    training accuracy after the epoch, the learning rate and the current mu.
    """
    X = np.asarray(tensors, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim < 2 or X.shape[0] == 0:
        raise ValueError("training set is empty")
    if not np.all(np.isfinite(X)):
        raise ValueError("training tensors contain non-finite values")
    classes = sorted(int(c) for c in np.unique(labels))
    if len(classes) < 2:
        raise ValueError("training needs at least two classes")
    if cfg.n_pivots > X.shape[0]:
        raise ValueError(f"n_pivots={cfg.n_pivots} exceeds training set size {X.shape[0]}")

    dims = X.shape[1:]
    orders = _resolve_orders(cfg.orders, dims)
    rng = np.random.default_rng(cfg.seed)

    train_tuples = _subspaces(X, orders)
    bandwidth = cfg.bandwidth
    if cfg.bandwidth_init == "median":
        bandwidth = median_heuristic_sigma(train_tuples, seed=cfg.seed)
    model = init_model(dims, classes, cfg, bandwidth)
    y = _label_index(model, labels)

    # the encoder is the identity, so the pivots depend only on the data and are computed once
    pset = soft_kmeans(X, cfg.n_pivots, cfg.temperature, max_iter=cfg.kmeans_iter, seed=cfg.seed)
    model.pivots = pset.pivots
    pivot_tuples = _subspaces(pset.pivots, orders)
    base_stats = _sample_stats(train_tuples, model.msn.input_mode)

    params = model.parameters()
    frozen = set()
    if cfg.freeze_msn or not cfg.uncertainty:
        frozen |= {k for k in params if k.startswith("msn_")}
    if not cfg.learn_mu or cfg.combine != "sum_product":
        frozen.add("mu_raw")
    if not cfg.learn_bandwidth:
        frozen.add("log_bandwidth")
    velocity = {k: np.zeros_like(v) for k, v in params.items() if k not in frozen}

    history = []
    n = X.shape[0]
    stats = None
    for epoch in range(cfg.epochs):
        if epoch % cfg.refresh_every == 0:
            stats = refresh(model, pivot_tuples, base_stats, cfg.clamp_eps)
        lr = cfg.lr * cfg.lr_decay_factor ** sum(epoch >= e for e in cfg.lr_decay_epochs)

        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            sub = stats.take(idx)
            logits, cache = _core(model, sub, None)
            value, logp = _loss_from(model, logits, cache, y[idx])
            if not np.isfinite(value):
                raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}")
            grads = _backward(model, sub, cache, logp, y[idx])
            for name, v in velocity.items():
                g = grads[name]
                if cfg.weight_decay and _decayed(name):
                    g = g + cfg.weight_decay * params[name]
                v *= cfg.momentum
                v += g
                params[name] -= lr * v
            total += value * len(idx)

        logits, _ = _core(model, stats, None)
        acc = float(np.mean(np.argmax(logits, axis=1) == y))
        rec = {"epoch": epoch + 1, "loss": total / n, "train_accuracy": acc, "lr": lr, "mu": model.mu}
        if not all(np.isfinite(np.asarray(p)).all() for p in params.values()):
            raise TrainingDivergedError(f"parameters became non-finite at epoch {epoch}")
        history.append(rec)
        log.info("epoch %d loss %.6f train_acc %.4f mu %.4f", rec["epoch"], rec["loss"], acc, rec["mu"])
        if callback is not None:
            callback(rec)
    return model, history


# --------------------------------------------------------------------------
# gradient check


def grad_check(model: UktlModel, tensors, labels, step: float = 1e-5, groups=None) -> dict[str, float]:
    """Compare analytic gradients with central differences.

    Returns the relative error ``||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||)``
    for each parameter group, plus ``"max"`` over all groups.
    """
    stats = _prepare(model, tensors)
    y = _label_index(model, labels)

    def objective():
        logits, cache = _core(model, stats, None)
        return _loss_from(model, logits, cache, y)[0]

    logits, cache = _core(model, stats, None)
    _, logp = _loss_from(model, logits, cache, y)
    analytic = _backward(model, stats, cache, logp, y)

    params = model.parameters()
    names = list(params) if groups is None else list(groups)
    errors = {}
    for name in names:
        arr = params[name]
        flat = arr.reshape(-1)
        numeric = np.zeros(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = objective()
            flat[i] = orig - step
            fm = objective()
            flat[i] = orig
            numeric[i] = (fp - fm) / (2.0 * step)
        a = analytic[name].reshape(-1)
        denom = max(np.linalg.norm(a), np.linalg.norm(numeric))
        errors[name] = 0.0 if denom == 0 else float(np.linalg.norm(a - numeric) / denom)
    errors["max"] = max(errors.values()) if errors else 0.0
    return errors


# --------------------------------------------------------------------------
# checkpoints


def checkpoint_to_json(model: UktlModel) -> str:
    if model.nmap is None or model.nmap.feature_mean is None:
        raise NotFittedError("cannot checkpoint an unfitted model")
    nmap = model.nmap
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": model.config.to_dict(),
        "dims": list(model.dims),
        "orders": list(model.orders),
        "classes": list(model.classes),
        "combine": model.combine,
        "beta": model.beta,
        "uncertainty": model.uncertainty,
        "mu": {"unconstrained": float(model.mu_raw), "effective": model.mu},
        "log_bandwidth": float(model.log_bandwidth),
        "msn": {
            "sigma_min": model.msn.sigma_min,
            "sigma_max": model.msn.sigma_max,
            "input_mode": model.msn.input_mode,
            "weights": [w.tolist() for w in model.msn.weights],
            "biases": [b.tolist() for b in model.msn.biases],
        },
        "pivots": [encode_tensor(z) for z in model.pivots] if model.pivots is not None else [],
        "nystrom": {
            "kernel": {"sigma": nmap.cfg.sigma, "mu": nmap.cfg.mu, "combine": nmap.cfg.combine},
            "clamp_eps": nmap.clamp_eps,
            "pivot_bases": [v.tolist() for v in nmap.pivot_bases],
            "eigvals": nmap.eigvals.tolist(),
            "p_inv": nmap.p_inv.tolist(),
            "feature_mean": nmap.feature_mean.tolist(),
        },
        "classifier": {"W": model.W.tolist(), "b": model.b.tolist()},
    }
    return json.dumps(doc)


def checkpoint_from_json(text: str) -> UktlModel:
    doc = json.loads(text)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} checkpoint (format={doc.get('format')!r})")
    msn = doc["msn"]
    arr = np.array
    nm = doc["nystrom"]
    nmap = NystromMap(
        pivot_bases=tuple(arr(v, dtype=np.float64) for v in nm["pivot_bases"]),
        cfg=KernelConfig(**nm["kernel"]),
        p_inv=arr(nm["p_inv"], dtype=np.float64),
        eigvals=arr(nm["eigvals"], dtype=np.float64),
        clamp_eps=nm["clamp_eps"],
        feature_mean=arr(nm["feature_mean"], dtype=np.float64),
    )
    pivots = np.stack([decode_tensor(s) for s in doc["pivots"]]) if doc["pivots"] else None
    return UktlModel(
        dims=tuple(doc["dims"]),
        orders=tuple(doc["orders"]),
        classes=list(doc["classes"]),
        msn=MsnParams([arr(w, dtype=np.float64) for w in msn["weights"]],
                      [arr(b, dtype=np.float64) for b in msn["biases"]],
                      msn["sigma_min"], msn["sigma_max"], msn["input_mode"]),
        combine=doc["combine"],
        mu_raw=arr(doc["mu"]["unconstrained"], dtype=np.float64),
        log_bandwidth=arr(doc["log_bandwidth"], dtype=np.float64),
        W=arr(doc["classifier"]["W"], dtype=np.float64),
        b=arr(doc["classifier"]["b"], dtype=np.float64),
        beta=doc["beta"],
        uncertainty=doc["uncertainty"],
        pivots=pivots,
        nmap=nmap,
        config=TrainConfig.from_dict(doc["config"]),
    )


def save_checkpoint(model: UktlModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(checkpoint_to_json(model))


def load_checkpoint(path) -> UktlModel:
    with open(path, encoding="utf-8") as fh:
        return checkpoint_from_json(fh.read())
