"""Dense M-mode tensors: unfolding, norms and the TNS text format.

Tensors are plain C-ordered float64 ``numpy`` arrays (row-major, last index
fastest).  Modes are 0-based, as with numpy axes.
"""

from __future__ import annotations

import re

import numpy as np

__all__ = [
    "TnsFormatError",
    "as_tensor",
    "matricize",
    "fold",
    "frobenius_norm",
    "encode_tensor",
    "decode_tensor",
    "write_tensor",
    "read_tensor",
]

MAGIC = "TNS v1"


class TnsFormatError(ValueError):
    """Raised when a TNS stream cannot be decoded."""


def as_tensor(t) -> np.ndarray:
    """Return ``t`` as a finite, C-contiguous float64 array of order >= 1."""
    arr = np.ascontiguousarray(t, dtype=np.float64)
    if arr.ndim == 0:
        raise ValueError("tensor must have order >= 1")
    if 0 in arr.shape:
        raise ValueError(f"tensor dims must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains non-finite values")
    return arr


def _check_mode(ndim: int, mode: int) -> None:
    if not 0 <= mode < ndim:
        raise IndexError(f"mode {mode} out of range for order-{ndim} tensor")


def matricize(t, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding of ``t``.

    Returns an ``I_mode x prod(I_k, k != mode)`` matrix whose columns are the
    mode fibers, enumerated with the lowest remaining mode varying fastest
    (Kolda & Bader ordering).
    """
    t = np.asarray(t, dtype=np.float64)
    _check_mode(t.ndim, mode)
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def fold(x, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`matricize`."""
    dims = tuple(int(d) for d in dims)
    _check_mode(len(dims), mode)
    moved = (dims[mode],) + dims[:mode] + dims[mode + 1:]
    x = np.asarray(x, dtype=np.float64)
    if x.size != int(np.prod(dims)):
        raise ValueError(f"matrix of size {x.size} cannot fold into {dims}")
    return np.ascontiguousarray(np.moveaxis(np.reshape(x, moved, order="F"), 0, mode))


def frobenius_norm(t) -> float:
    t = np.asarray(t, dtype=np.float64)
    return float(np.sqrt(np.sum(t * t)))


def encode_tensor(t) -> str:
    """Serialize a tensor to TNS v1 text.

    Values are written one per line using the shortest decimal string that
    round-trips the double exactly.
    """
    t = as_tensor(t)
    lines = [MAGIC, f"order {t.ndim}", "dims " + " ".join(str(d) for d in t.shape)]
    lines.extend(repr(float(v)) for v in t.ravel())
    return "\n".join(lines) + "\n"


def decode_tensor(text: str | bytes) -> np.ndarray:
    if isinstance(text, bytes):
        text = text.decode("ascii")
    lines = text.split("\n")
    if len(lines) < 3:
        raise TnsFormatError("truncated header: expected 3 header lines")
    if lines[0].strip() != MAGIC:
        raise TnsFormatError(f"line 1: expected {MAGIC!r}, got {lines[0]!r}")

    head = lines[1].split()
    if len(head) != 2 or head[0] != "order":
        raise TnsFormatError(f"line 2: expected 'order <M>', got {lines[1]!r}")
    try:
        order = int(head[1])
    except ValueError:
        raise TnsFormatError(f"line 2: order is not an integer: {head[1]!r}") from None
    if order < 1:
        raise TnsFormatError(f"line 2: order must be >= 1, got {order}")

    head = lines[2].split()
    if not head or head[0] != "dims":
        raise TnsFormatError(f"line 3: expected 'dims ...', got {lines[2]!r}")
    if len(head) - 1 != order:
        raise TnsFormatError(f"line 3: order {order} but {len(head) - 1} dims given")
    try:
        dims = tuple(int(d) for d in head[1:])
    except ValueError:
        raise TnsFormatError(f"line 3: non-integer dim in {lines[2]!r}") from None
    if any(d < 1 for d in dims):
        raise TnsFormatError(f"line 3: dims must be positive, got {dims}")

    values = []
    for lineno, line in enumerate(lines[3:], start=4):
        for col, token in _tokens(line):
            try:
                v = float(token)
            except ValueError:
                raise TnsFormatError(
                    f"line {lineno}, column {col}: non-numeric token {token!r}"
                ) from None
            if not np.isfinite(v):
                raise TnsFormatError(f"line {lineno}, column {col}: non-finite value {token!r}")
            values.append(v)

    expected = int(np.prod(dims))
    if len(values) != expected:
        raise TnsFormatError(
            f"value-count mismatch: dims {dims} require {expected} values, found {len(values)}"
        )
    return np.array(values, dtype=np.float64).reshape(dims)


def _tokens(line: str):
    for match in re.finditer(r"\S+", line):
        yield match.start() + 1, match.group()


def write_tensor(path, t) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(encode_tensor(t))


def read_tensor(path) -> np.ndarray:
    with open(path, encoding="ascii") as fh:
        try:
            return decode_tensor(fh.read())
        except TnsFormatError as exc:
            raise TnsFormatError(f"{path}: {exc}") from None
