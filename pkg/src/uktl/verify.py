"""Acceptance checks runnable from the CLI (``uktl verify``) and from pytest.

Each criterion returns a list of :class:`OracleReport`; a criterion passes
when all of its reports pass, runtime budget included.
"""

from __future__ import annotations

import contextlib
import io
import math
import tempfile
import time
from pathlib import Path

import numpy as np

from .data import SyntheticSpec, load_dataset, normalize_skeleton, synthesize, temporal_blocks, temporal_resample
from .kernel import COMBINES, KernelConfig, gram_matrix
from .model import (TrainConfig, _sample_stats, _subspaces, evaluate, forward_batch, grad_check,
                    init_model, load_checkpoint, refresh)
from .oracle import OracleReport, brute_force_gram, nystrom_error_curve
from .pivot import soft_kmeans
from .subspace import principal_angles, projection_distance_sq, tensor_subspaces
from .uncertainty import MsnParams, uncertainty_penalty, weight_subspace

__all__ = ["CRITERIA", "run_criterion", "run_all", "make_gradcheck_model", "format_table"]

KERNEL_DIMS = (6, 8, 10)


def _timed(budget: float):
    start = time.perf_counter()

    def done() -> OracleReport:
        elapsed = time.perf_counter() - start
        return OracleReport("runtime [s]", elapsed, budget, elapsed < budget)

    return done


def _random_tensors(n, dims, seed):
    return np.random.default_rng(seed).standard_normal((n,) + tuple(dims))


def _random_sigmas(n, n_modes, p, seed):
    rng = np.random.default_rng(seed)
    return [[rng.uniform(0.2, 5.0, size=p) for _ in range(n_modes)] for _ in range(n)]


def _weighted(tuples, sigmas):
    return [tuple(weight_subspace(s, sig) for s, sig in zip(t, sg)) for t, sg in zip(tuples, sigmas)]


# --------------------------------------------------------------------------


def kernel_correctness() -> list[OracleReport]:
    clock = _timed(10.0)
    X = _random_tensors(20, KERNEL_DIMS, seed=11)
    p = 3
    tuples = [tensor_subspaces(x, p) for x in X]
    sigmas = _random_sigmas(len(X), len(KERNEL_DIMS), p, seed=12)
    worst = 0.0
    for combine in COMBINES:
        cfg = KernelConfig(sigma=1.0, mu=0.5, combine=combine)
        for sig in (None, sigmas):
            rows = tuples if sig is None else _weighted(tuples, sig)
            K = gram_matrix(rows, None, cfg)
            ref = brute_force_gram(X, p, cfg, sigmas=sig)
            worst = max(worst, float(np.max(np.abs(K - ref))))
    return [OracleReport("gram vs brute force (max abs diff)", worst, 1e-10, worst <= 1e-10,
                         "3 combines x {plain, weighted}, N=20"), clock()]


def psd_property() -> list[OracleReport]:
    clock = _timed(30.0)
    p = 3
    worst = -np.inf
    for seed in range(10):
        X = _random_tensors(32, KERNEL_DIMS, seed=100 + seed)
        tuples = [tensor_subspaces(x, p) for x in X]
        weighted = _weighted(tuples, _random_sigmas(32, len(KERNEL_DIMS), p, seed=200 + seed))
        for combine in COMBINES:
            cfg = KernelConfig(sigma=1.0, mu=0.5, combine=combine)
            for rows in (tuples, weighted):
                ev = np.linalg.eigvalsh(gram_matrix(rows, None, cfg))
                worst = max(worst, float(-ev[0] / ev[-1]))
    return [OracleReport("-lambda_min / lambda_max", worst, 1e-8, worst <= 1e-8, "10 seeds x N=32"), clock()]


def grassmann_identities() -> list[OracleReport]:
    rng = np.random.default_rng(3)
    cos_err = dist_err = sin_err = inv_err = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 13))
        p = int(rng.integers(1, n + 1))
        A = np.linalg.qr(rng.standard_normal((n, p)))[0]
        B = np.linalg.qr(rng.standard_normal((n, p)))[0]
        cross = np.sum((A.T @ B) ** 2)
        theta = principal_angles(A, B)
        cos_err = max(cos_err, abs(cross - np.sum(np.cos(theta) ** 2)))
        d = projection_distance_sq(A, B)
        explicit = np.sum((A @ A.T - B @ B.T) ** 2)
        dist_err = max(dist_err, abs(d - (2 * p - 2 * cross)), abs(d - explicit))
        sin_err = max(sin_err, abs(d - 2 * np.sum(np.sin(theta) ** 2)))
        Q = np.linalg.qr(rng.standard_normal((p, p)))[0]
        inv_err = max(inv_err, abs(projection_distance_sq(A @ Q, B) - d))
    return [
        OracleReport("||A^T B||^2 = sum cos^2", cos_err, 1e-10, cos_err <= 1e-10, "100 pairs"),
        OracleReport("dist = 2p - 2||A^T B||^2 = explicit", dist_err, 1e-10, dist_err <= 1e-10),
        OracleReport("dist = 2 sum sin^2", sin_err, 1e-10, sin_err <= 1e-10),
        OracleReport("basis invariance under Q", inv_err, 1e-10, inv_err <= 1e-10),
    ]


def nystrom_exactness_and_trend() -> list[OracleReport]:
    clock = _timed(60.0)
    cfg = KernelConfig(sigma=1.0, mu=0.5, combine="sum_product")
    counts = [2, 4, 8, 16]
    curves, exact = [], 0.0
    for seed in range(5):
        X, _, _, _ = synthesize(SyntheticSpec(num_classes=4, per_class=16, dims=KERNEL_DIMS, rank=2,
                                              noise=0.3, seed=seed, test_fraction=0.0))
        res = nystrom_error_curve(X, 3, cfg, counts + [len(X)], seed=seed)
        curves.append([e for _, e in res[:-1]])
        exact = max(exact, res[-1][1])
    mean = np.mean(curves, axis=0)
    ratio = max(mean[i + 1] / mean[i] for i in range(len(mean) - 1))
    detail = "mean errors " + ", ".join(f"C={c}:{e:.4f}" for c, e in zip(counts, mean))
    return [
        OracleReport("C=N relative error", exact, 1e-6, exact <= 1e-6, "5 seeds, N=64"),
        OracleReport("max step ratio of mean error", ratio, 1.05, ratio <= 1.05, detail),
        clock(),
    ]


def make_gradcheck_model(seed: int = 0, input_mode: str = "singular_values", n_pivots: int = 8):
    """Desk-scale model with random (non-identity) parameters and a batch of 4."""
    X, y, _, _ = synthesize(SyntheticSpec(num_classes=3, per_class=12, dims=(8, 10, 12), rank=3,
                                          noise=0.3, seed=seed, test_fraction=0.0))
    cfg = TrainConfig(orders=4, n_pivots=n_pivots, msn_input=input_mode, beta=0.05, seed=seed)
    model = init_model(X.shape[1:], sorted(set(y.tolist())), cfg)
    rng = np.random.default_rng(seed + 1)
    model.msn = MsnParams.init(model.dims, model.orders, input_mode=input_mode, scale=0.5, seed=seed + 2)
    pivots = soft_kmeans(X, n_pivots, seed=seed).pivots
    model.pivots = pivots
    stats = _sample_stats(_subspaces(X, model.orders), input_mode)
    refresh(model, _subspaces(pivots, model.orders), stats, cfg.clamp_eps)
    model.W[...] = rng.standard_normal(model.W.shape)
    model.b[...] = rng.standard_normal(model.b.shape)
    model.mu_raw[...] = rng.normal(0.0, 0.5)
    return model, X[:4], y[:4]


def gradient_check() -> list[OracleReport]:
    clock = _timed(30.0)
    model, X, y = make_gradcheck_model(seed=0)
    errs = grad_check(model, X, y, step=1e-5)
    groups = {
        "classifier": max(errs["W"], errs["b"]),
        "MSN": max(v for k, v in errs.items() if k.startswith("msn_")),
        "mu": errs["mu_raw"],
    }
    reports = [OracleReport(f"grad rel err: {k}", v, 1e-4, v <= 1e-4, "step 1e-5, batch 4") for k, v in groups.items()]
    return reports + [clock()]


def degenerate_equivalences() -> list[OracleReport]:
    X = _random_tensors(12, KERNEL_DIMS, seed=21)
    tuples = [tensor_subspaces(x, 3) for x in X]
    weighted = _weighted(tuples, _random_sigmas(12, 3, 3, seed=22))
    worst_sum = worst_prod = 0.0
    for rows in (tuples, weighted):
        ksum = gram_matrix(rows, None, KernelConfig(mu=0.5, combine="sum"))
        kprod = gram_matrix(rows, None, KernelConfig(mu=0.5, combine="product"))
        k1 = gram_matrix(rows, None, KernelConfig(mu=1.0, combine="sum_product"))
        k0 = gram_matrix(rows, None, KernelConfig(mu=0.0, combine="sum_product"))
        worst_sum = max(worst_sum, float(np.max(np.abs(k1 - ksum))))
        worst_prod = max(worst_prod, float(np.max(np.abs(k0 - kprod))))

    model, Xb, _ = make_gradcheck_model(seed=5)
    model.msn = MsnParams.init(model.dims, model.orders, input_mode=model.msn.input_mode)  # sigma == 1
    uktl = forward_batch(model, Xb)
    model.uncertainty = False
    ktl = forward_batch(model, Xb)
    model.uncertainty = True
    ktl_err = float(np.max(np.abs(uktl - ktl)))
    return [
        OracleReport("mu=1 sum-product vs sum", worst_sum, 1e-15, worst_sum <= 1e-15),
        OracleReport("mu=0 sum-product vs product", worst_prod, 1e-15, worst_prod <= 1e-15),
        OracleReport("UKTL(sigma=1) vs KTL forward", ktl_err, 1e-12, ktl_err <= 1e-12),
    ]


def end_to_end_benchmark() -> list[OracleReport]:
    from .cli import run

    clock = _timed(300.0)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        quiet = io.StringIO()
        with contextlib.redirect_stdout(quiet), contextlib.redirect_stderr(quiet):
            codes = [run(["gen", "--classes", "3", "--per-class", "100", "--dims", "8,10,12",
                          "--noise", "0.3", "--seed", "7", "--out", str(tmp / "data")])]
            for name in ("a.json", "b.json"):
                codes.append(run(["fit", "--train", str(tmp / "data" / "train.json"), "--orders", "4",
                                  "--pivots", "16", "--epochs", "30", "--batch-size", "16", "--seed", "7",
                                  "--quiet", "--out", str(tmp / name)]))
        if any(codes):
            return [OracleReport("cli exit codes", float(max(codes)), 0.0, False, f"codes={codes}"), clock()]
        model = load_checkpoint(tmp / "a.json")
        X, y, _ = load_dataset(tmp / "data" / "test.json")
        acc = evaluate(model, X, y)
        same = (tmp / "a.json").read_bytes() == (tmp / "b.json").read_bytes()
    return [
        OracleReport("test accuracy", acc, 0.95, acc >= 0.95, "K=3, n=100/class, 8x10x12, eta=0.3"),
        OracleReport("rerun checkpoint identical", float(not same), 0.0, same, "byte comparison"),
        clock(),
    ]


def preprocessing_contracts() -> list[OracleReport]:
    seq = np.arange(70, dtype=np.float64)[None, None, :] * np.ones((3, 5, 1))
    out = temporal_resample(seq, 200)
    expected = np.concatenate([np.arange(70), np.arange(70), np.arange(60)])
    cyc_ok = out.shape[-1] == 200 and np.array_equal(out[0, 0], expected)
    blocks = temporal_blocks(np.zeros((3, 25, 200)), 30, 10)

    rng = np.random.default_rng(8)
    range_err = 0.0
    for _ in range(50):
        s = rng.standard_normal((3, 25, int(rng.integers(20, 120))))
        c = int(rng.integers(25))
        z = normalize_skeleton(s, c)
        peaks = np.max(np.abs(z), axis=(1, 2))
        range_err = max(range_err, float(np.max(np.abs(z[:, c, :]))), float(np.max(np.abs(peaks - 1.0))),
                        float(max(0.0, np.max(np.abs(z)) - 1.0)))
    return [
        OracleReport("resample 70->200 cyclic pattern", float(not cyc_ok), 0.0, bool(cyc_ok)),
        OracleReport("blocks(200, 30, 10) count", float(len(blocks)), 18, len(blocks) == 18),
        OracleReport("normalize: ref=0, peak=1, range [-1,1]", range_err, 1e-12, range_err <= 1e-12, "50 sequences"),
    ]


def loss_identities() -> list[OracleReport]:
    rng = np.random.default_rng(9)
    beta = 0.37
    one = uncertainty_penalty([rng.uniform(0.1, 10, (1, 4)) for _ in range(3)], beta)
    n, M, p = 6, 3, 4
    s = np.full((n, M, p), 2.5)
    ident = uncertainty_penalty(s, beta)
    expected = beta * n * M * p * math.log(1.0 / n)
    err = abs(ident - expected)
    return [
        OracleReport("n=1 penalty", abs(one), 0.0, one == 0.0),
        OracleReport("identical-sigma penalty", err, 1e-12, err <= 1e-12, f"beta*n*M*p*log(1/n)={expected:.6f}"),
    ]


CRITERIA = [
    (1, "kernel correctness", kernel_correctness),
    (2, "PSD property", psd_property),
    (3, "Grassmann identities", grassmann_identities),
    (4, "Nystrom exactness and trend", nystrom_exactness_and_trend),
    (5, "gradient check", gradient_check),
    (6, "degenerate equivalences", degenerate_equivalences),
    (7, "end-to-end synthetic benchmark", end_to_end_benchmark),
    (8, "preprocessing contracts", preprocessing_contracts),
    (9, "loss identities", loss_identities),
]


def run_criterion(number: int) -> list[OracleReport]:
    for num, _, fn in CRITERIA:
        if num == number:
            return fn()
    raise KeyError(f"no acceptance criterion {number}")


def format_table(number: int, title: str, reports: list[OracleReport]) -> str:
    ok = all(r.passed for r in reports)
    lines = [f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"]
    lines += ["    " + r.line() for r in reports]
    return "\n".join(lines)


def run_all(selected=None, out=None) -> bool:
    """Run the selected criteria (all by default); print a table; return overall pass."""
    ok = True
    for num, title, fn in CRITERIA:
        if selected and num not in selected:
            continue
        reports = fn()
        ok &= all(r.passed for r in reports)
        print(format_table(num, title, reports), file=out, flush=True)
    return ok
