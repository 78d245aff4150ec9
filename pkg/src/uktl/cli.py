"""Command-line interface: ``uktl <subcommand> ...``.

Exit status: 0 success, 1 failed check or failed training, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .data import SyntheticSpec, gen_synthetic, load_dataset
from .kernel import KernelConfig, gram_matrix, median_heuristic_sigma
from .model import (TrainConfig, TrainingDivergedError, evaluate, grad_check, load_checkpoint, predict_proba,
                    save_checkpoint, train, _resolve_orders)
from .nystrom import embed_fit, fit_nystrom
from .oracle import nystrom_error_curve
from .pivot import soft_kmeans
from .subspace import tensor_subspaces
from .tensor import TnsFormatError

log = logging.getLogger("uktl")

GRADCHECK_TOL = 1e-4

# flag spellings that differ from the TrainConfig field name
FLAG_ALIASES = {"n_pivots": "pivots"}

FIELD_HELP = {
    "lr": "initial learning rate",
    "momentum": "SGD momentum",
    "weight_decay": "L2 decay on classifier and MSN weights",
    "batch_size": "minibatch size",
    "epochs": "training epochs",
    "lr_decay_epochs": "comma-separated epochs at which lr is multiplied by --lr-decay-factor",
    "lr_decay_factor": "lr multiplier at each decay epoch",
    "refresh_every": "epochs between pivot re-weighting and P^-1 refits",
    "seed": "random seed",
    "beta": "weight of the uncertainty penalty",
    "combine": "kernel combination: sum, product or sum_product",
    "bandwidth": "RBF bandwidth shared by all modes",
    "bandwidth_init": "'fixed' uses --bandwidth, 'median' uses the median heuristic",
    "mu_init": "initial sum/product mixture weight, in (0, 1)",
    "learn_mu": "train the mixture weight",
    "learn_bandwidth": "train the log bandwidth",
    "n_pivots": "number of Nystrom pivots C",
    "temperature": "soft k-means temperature",
    "kmeans_iter": "maximum soft k-means iterations",
    "orders": "subspace order p, one value or comma-separated per mode",
    "clamp_eps": "relative eigenvalue floor for the pivot kernel inverse square root",
    "msn_input": "MSN input: singular_values or projection_flat",
    "sigma_min": "lower bound of the uncertainty values",
    "sigma_max": "upper bound of the uncertainty values",
    "uncertainty": "use the uncertainty module (off gives the plain kernel model)",
    "freeze_msn": "keep MSN parameters fixed during training",
}


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _orders(text: str):
    vals = _int_list(text)
    return vals[0] if len(vals) == 1 else vals


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model / training options (override --config)")
    defaults = TrainConfig()
    for f in fields(TrainConfig):
        flag = "--" + FLAG_ALIASES.get(f.name, f.name).replace("_", "-")
        default = getattr(defaults, f.name)
        shown = ",".join(map(str, default)) if isinstance(default, tuple) else default
        help_text = f"{FIELD_HELP[f.name]} (default: {shown})"
        kw = dict(dest=f.name, default=argparse.SUPPRESS, help=help_text)
        if isinstance(default, bool):
            g.add_argument(flag, action=argparse.BooleanOptionalAction, **kw)
        elif f.name == "orders":
            g.add_argument(flag, type=_orders, metavar="P[,P...]", **kw)
        elif f.name == "lr_decay_epochs":
            g.add_argument(flag, type=_int_list, metavar="E[,E...]", **kw)
        elif isinstance(default, str):
            g.add_argument(flag, type=str, **kw)
        else:
            g.add_argument(flag, type=type(default), **kw)
    g.add_argument("--config", type=Path, help="JSON file of training options; flags take precedence")


def _train_config(args) -> TrainConfig:
    merged = TrainConfig().to_dict()
    if getattr(args, "config", None) is not None:
        doc = json.loads(args.config.read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
        unknown = set(doc) - set(merged)
        if unknown:
            raise ValueError(f"{args.config}: unknown config keys {sorted(unknown)}")
        merged.update(doc)
    for f in fields(TrainConfig):
        if hasattr(args, f.name):
            merged[f.name] = getattr(args, f.name)
    return TrainConfig.from_dict(merged)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uktl", description="Uncertainty-driven kernel tensor learning.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap on BLAS worker threads (default: $UKTL_THREADS, else machine parallelism)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", help="generate a synthetic dataset", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--classes", type=int, default=3, help="number of classes")
    p.add_argument("--per-class", type=int, default=100, help="samples per class")
    p.add_argument("--dims", type=_int_list, default=(8, 10, 12), help="tensor dims, comma-separated")
    p.add_argument("--rank", type=int, default=3, help="per-mode signal rank")
    p.add_argument("--noise", type=float, default=0.3, help="noise std relative to each sample's signal RMS")
    p.add_argument("--test-fraction", type=float, default=0.2, help="held-out fraction per class")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("fit", help="train a model and write a checkpoint")
    p.add_argument("--train", type=Path, required=True, help="training manifest (JSON)")
    p.add_argument("--out", type=Path, required=True, help="checkpoint path")
    p.add_argument("--quiet", action="store_true", help="suppress per-epoch log lines")
    _add_train_flags(p)

    p = sub.add_parser("predict", help="write predictions CSV (index,label,confidence)")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("eval", help="print accuracy of a checkpoint on a manifest")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)

    p = sub.add_parser("gram", help="export the kernel matrix (or Nystrom features) as CSV")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout)")
    p.add_argument("--nystrom", type=int, default=None, metavar="C",
                   help="export centered Nystrom features with C soft k-means pivots instead")
    _add_train_flags(p)

    p = sub.add_parser("bench-pivots", help="Nystrom relative error versus pivot count, as CSV")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--counts", type=_int_list, default=(2, 4, 8, 16), help="pivot counts")
    p.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout)")
    _add_train_flags(p)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradients",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-5, help="central-difference step")
    p.add_argument("--msn-input", choices=("singular_values", "projection_flat"), default="singular_values")

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", type=_int_list, default=None, help="comma-separated criterion numbers")
    return parser


# --------------------------------------------------------------------------


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _csv(matrix: np.ndarray, header: str | None = None) -> str:
    lines = [header] if header else []
    lines += [",".join(repr(float(v)) for v in row) for row in np.atleast_2d(matrix)]
    return "\n".join(lines) + "\n"


def cmd_gen(args) -> int:
    spec = SyntheticSpec(num_classes=args.classes, per_class=args.per_class, dims=tuple(args.dims),
                         rank=args.rank, noise=args.noise, seed=args.seed, test_fraction=args.test_fraction)
    train_path, test_path = gen_synthetic(spec, args.out)
    print(f"wrote {train_path} and {test_path}")
    return 0


def cmd_fit(args) -> int:
    cfg = _train_config(args)
    X, y, _ = load_dataset(args.train)

    def report(rec):
        if not args.quiet:
            print(f"epoch {rec['epoch']:3d}  loss {rec['loss']:.6f}  train_acc {rec['train_accuracy']:.4f}  "
                  f"mu {rec['mu']:.4f}  lr {rec['lr']:.3g}", file=sys.stderr, flush=True)

    model, _ = train(X, y, cfg, callback=report)
    save_checkpoint(model, args.out)
    if not args.quiet:
        print(f"wrote {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = load_checkpoint(args.checkpoint)
    X, _, _ = load_dataset(args.manifest)
    proba = predict_proba(model, X)
    idx = np.argmax(proba, axis=1)
    lines = ["index,label,confidence"]
    lines += [f"{i},{model.classes[k]},{repr(float(proba[i, k]))}" for i, k in enumerate(idx)]
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    X, y, _ = load_dataset(args.manifest)
    print(f"accuracy={evaluate(model, X, y):.4f}")
    return 0


def _kernel_setup(args):
    cfg = _train_config(args)
    X, _, _ = load_dataset(args.manifest)
    if X.shape[0] == 0:
        raise ValueError(f"{args.manifest}: no entries")
    orders = _resolve_orders(cfg.orders, X.shape[1:])
    tuples = [tensor_subspaces(x, orders) for x in X]
    bw = median_heuristic_sigma(tuples, seed=cfg.seed) if cfg.bandwidth_init == "median" else cfg.bandwidth
    return cfg, X, orders, tuples, KernelConfig(sigma=bw, mu=cfg.mu_init, combine=cfg.combine)


def cmd_gram(args) -> int:
    cfg, X, orders, tuples, kcfg = _kernel_setup(args)
    if args.nystrom is None:
        _write_text(args.out, _csv(gram_matrix(tuples, None, kcfg)))
        return 0
    pivots = soft_kmeans(X, args.nystrom, cfg.temperature, max_iter=cfg.kmeans_iter, seed=cfg.seed).pivots
    nmap = fit_nystrom([tensor_subspaces(z, orders) for z in pivots], kcfg, cfg.clamp_eps)
    feats, _ = embed_fit(nmap, tuples)
    _write_text(args.out, _csv(feats))
    return 0


def cmd_bench_pivots(args) -> int:
    cfg, X, orders, _, kcfg = _kernel_setup(args)
    curve = nystrom_error_curve(X, orders, kcfg, list(args.counts), seed=cfg.seed,
                                temperature=cfg.temperature, clamp_eps=cfg.clamp_eps)
    lines = ["C,rel_error"] + [f"{c},{repr(e)}" for c, e in curve]
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_gradcheck(args) -> int:
    from .verify import make_gradcheck_model

    model, X, y = make_gradcheck_model(seed=args.seed, input_mode=args.msn_input)
    errs = grad_check(model, X, y, step=args.step)
    for name, v in errs.items():
        if name != "max":
            print(f"{name:14s} rel_err={v:.3e}")
    worst = errs["max"]
    ok = worst <= GRADCHECK_TOL
    print(f"max_rel_err={worst:.3e}")
    print(f"max_rel_err{'<=' if ok else '>'}1e-4")
    return 0 if ok else 1


def cmd_verify(args) -> int:
    from .verify import CRITERIA, run_all

    known = {num for num, _, _ in CRITERIA}
    if args.only and not set(args.only) <= known:
        raise ValueError(f"unknown criteria {sorted(set(args.only) - known)}; choose from {sorted(known)}")
    ok = run_all(set(args.only) if args.only else None, out=sys.stdout)
    print("ALL CRITERIA PASSED" if ok else "SOME CRITERIA FAILED")
    return 0 if ok else 1


COMMANDS = {
    "gen": cmd_gen,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "gram": cmd_gram,
    "bench-pivots": cmd_bench_pivots,
    "gradcheck": cmd_gradcheck,
    "verify": cmd_verify,
}


def _thread_limit(args):
    n = args.threads
    if n is None and os.environ.get("UKTL_THREADS"):
        n = int(os.environ["UKTL_THREADS"])
    if n is None:
        return None
    if n < 1:
        raise ValueError("--threads must be >= 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        limiter = _thread_limit(args)
        try:
            return COMMANDS[args.command](args)
        finally:
            if limiter is not None:
                limiter.unregister()
    except TrainingDivergedError as exc:
        print(f"uktl: training failed: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, IndexError, TnsFormatError) as exc:
        print(f"uktl {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
