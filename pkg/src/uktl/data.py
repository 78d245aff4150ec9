"""Datasets: synthetic subspace-clustered tensors, manifests, skeleton preprocessing."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor import read_tensor, write_tensor

__all__ = [
    "SyntheticSpec",
    "DatasetManifest",
    "synthesize",
    "gen_synthetic",
    "load_manifest",
    "load_dataset",
    "normalize_skeleton",
    "temporal_resample",
    "temporal_blocks",
]


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic dataset.

    Every class owns one random orthonormal ``dims[m] x rank`` factor per
    mode; a sample is a random Gaussian core multiplied into those factors,
    plus i.i.d. Gaussian noise whose standard deviation is ``noise`` times
    the sample's own signal RMS.
    """

    num_classes: int = 3
    per_class: int = 100
    dims: tuple[int, ...] = (8, 10, 12)
    rank: int = 3
    noise: float = 0.3
    seed: int = 0
    test_fraction: float = 0.2

    def __post_init__(self):
        if self.num_classes < 1 or self.per_class < 1:
            raise ValueError("num_classes and per_class must be positive")
        if self.noise < 0:
            raise ValueError("noise level must be nonnegative")
        if not 0 <= self.test_fraction < 1:
            raise ValueError("test_fraction must lie in [0, 1)")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"dims must be positive, got {self.dims}")
        if not 1 <= self.rank <= min(self.dims):
            raise ValueError(f"rank {self.rank} too large for dims {self.dims}")


@dataclass
class DatasetManifest:
    dims: tuple[int, ...]
    num_classes: int
    entries: list[tuple[str, int]]

    def to_json(self) -> str:
        return json.dumps({
            "dims": list(self.dims),
            "num_classes": self.num_classes,
            "entries": [{"path": p, "label": int(y)} for p, y in self.entries],
        }, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        doc = json.loads(text)
        try:
            entries = [(e["path"], int(e["label"])) for e in doc["entries"]]
            m = cls(tuple(int(d) for d in doc["dims"]), int(doc["num_classes"]), entries)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed manifest: {exc}") from None
        for path, label in m.entries:
            if not 0 <= label < m.num_classes:
                raise ValueError(f"label {label} of {path} outside [0, {m.num_classes})")
        return m


def _mode_product(core: np.ndarray, factors) -> np.ndarray:
    out = core
    for m, U in enumerate(factors):
        out = np.moveaxis(np.tensordot(U, out, axes=(1, m)), 0, m)
    return out


def synthesize(spec: SyntheticSpec):
    """Generate the dataset in memory.

    Returns ``(X_train, y_train, X_test, y_test)``; both splits are class-balanced.
    """
    rng = np.random.default_rng(spec.seed)
    bases = [
        [np.linalg.qr(rng.standard_normal((d, spec.rank)))[0] for d in spec.dims]
        for _ in range(spec.num_classes)
    ]
    n_test = int(round(spec.per_class * spec.test_fraction))
    train, test = [], []
    for label in range(spec.num_classes):
        samples = []
        for _ in range(spec.per_class):
            core = rng.standard_normal((spec.rank,) * len(spec.dims))
            x = _mode_product(core, bases[label])
            rms = np.sqrt(np.mean(x * x))
            x = x + spec.noise * rms * rng.standard_normal(x.shape)
            samples.append(x)
        order = rng.permutation(spec.per_class)
        test += [(samples[i], label) for i in order[:n_test]]
        train += [(samples[i], label) for i in order[n_test:]]

    def pack(items):
        perm = rng.permutation(len(items))
        X = np.stack([items[i][0] for i in perm]) if items else np.empty((0,) + tuple(spec.dims))
        y = np.array([items[i][1] for i in perm], dtype=np.int64)
        return X, y

    return (*pack(train), *pack(test))


def gen_synthetic(spec: SyntheticSpec, out_dir) -> tuple[Path, Path]:
    """Write tensors as TNS files plus ``train.json`` / ``test.json`` manifests."""
    out = Path(out_dir)
    (out / "tensors").mkdir(parents=True, exist_ok=True)
    Xtr, ytr, Xte, yte = synthesize(spec)
    paths = []
    for split, X, y in (("train", Xtr, ytr), ("test", Xte, yte)):
        entries = []
        for i, (x, label) in enumerate(zip(X, y)):
            rel = f"tensors/{split}_{i:05d}.tns"
            write_tensor(out / rel, x)
            entries.append((rel, int(label)))
        manifest = DatasetManifest(tuple(spec.dims), spec.num_classes, entries)
        path = out / f"{split}.json"
        path.write_text(manifest.to_json(), encoding="utf-8")
        paths.append(path)
    return paths[0], paths[1]


def load_manifest(path) -> DatasetManifest:
    return DatasetManifest.from_json(Path(path).read_text(encoding="utf-8"))


def load_dataset(path):
    """Read a manifest and every tensor it references; returns ``(X, y, manifest)``."""
    manifest = load_manifest(path)
    root = Path(path).parent
    X = []
    for rel, _ in manifest.entries:
        t = read_tensor(rel if os.path.isabs(rel) else root / rel)
        if t.shape != manifest.dims:
            raise ValueError(f"{rel}: dims {t.shape} differ from manifest dims {manifest.dims}")
        X.append(t)
    X = np.stack(X) if X else np.empty((0,) + manifest.dims)
    y = np.array([label for _, label in manifest.entries], dtype=np.int64)
    return X, y, manifest


# --------------------------------------------------------------------------
# skeleton preprocessing; sequences are (axes, joints, frames)


def normalize_skeleton(seq, ref_joint: int) -> np.ndarray:
    """Center on ``ref_joint`` per frame, then scale each axis into [-1, 1].

    An axis that is identically zero after centering is left as zeros.
    """
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 3:
        raise ValueError(f"expected an (axes, joints, frames) array, got shape {seq.shape}")
    if not 0 <= ref_joint < seq.shape[1]:
        raise IndexError(f"reference joint {ref_joint} out of range for {seq.shape[1]} joints")
    centered = seq - seq[:, ref_joint:ref_joint + 1, :]
    peak = np.max(np.abs(centered), axis=(1, 2), keepdims=True)
    return np.divide(centered, peak, out=np.zeros_like(centered), where=peak > 0)


def temporal_resample(seq, length: int = 200) -> np.ndarray:
    """Bring the last (frame) axis to exactly ``length`` frames.

    Shorter sequences repeat cyclically; longer ones are sampled uniformly
    with both endpoints kept.
    """
    seq = np.asarray(seq)
    if length < 1:
        raise ValueError("target length must be >= 1")
    frames = seq.shape[-1]
    if frames == 0:
        raise ValueError("cannot resample an empty sequence")
    if frames < length:
        idx = np.arange(length) % frames
    elif length == 1:
        idx = np.zeros(1, dtype=np.int64)
    else:
        idx = np.rint(np.arange(length) * (frames - 1) / (length - 1)).astype(np.int64)
    return seq[..., idx]


def temporal_blocks(seq, block: int, stride: int) -> list[np.ndarray]:
    """Overlapping windows of ``block`` frames every ``stride`` frames."""
    seq = np.asarray(seq)
    frames = seq.shape[-1]
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if not 1 <= block <= frames:
        raise ValueError(f"block length {block} must lie in [1, {frames}]")
    return [seq[..., s:s + block] for s in range(0, frames - block + 1, stride)]
