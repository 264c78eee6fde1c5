"""Tensor-train container and the operations the constructions rely on.

Cores are stored as arrays of shape ``(e_k, r_{k-1}, r_k)``: external index
first, then the left and right bond. Multi-indices are ordered so the first
core is the most significant digit, which makes the flat index of a
univariate quantized tensor equal to ``j`` for the point ``x = j / 2**K``.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Sequence

import numpy as np

DENSE_CAP = 2 ** 26
MAGIC = b"QTT1"
FORMAT_VERSION = 1


class TTValidationError(ValueError):
    """A tensor train or its serialized form violates a structural invariant."""


class QTTFormatError(ValueError):
    """Serialized QTT container is malformed (magic, version, truncation)."""


class DenseSizeError(ValueError):
    """Requested dense materialization exceeds the configured cap."""


class NumericalError(RuntimeError):
    """A factorization failed; ``level`` tells which core was being built."""

    def __init__(self, msg: str, level: int | None = None):
        super().__init__(msg if level is None else f"{msg} (level {level})")
        self.level = level


@dataclass(frozen=True)
class TensorTrain:
    """Sequence of 3-index cores ``(e_k, r_{k-1}, r_k)`` with ``r_0 = r_K = 1``."""

    cores: tuple[np.ndarray, ...]

    def __post_init__(self):
        cores = tuple(np.asarray(c, dtype=float) for c in self.cores)
        if not cores:
            raise TTValidationError("a tensor train needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 3:
                raise TTValidationError(f"core {k} has {c.ndim} indices, expected 3")
            if not np.all(np.isfinite(c)):
                raise TTValidationError(f"core {k} has non-finite entries")
        if cores[0].shape[1] != 1 or cores[-1].shape[2] != 1:
            raise TTValidationError("boundary ranks must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[1]:
                raise TTValidationError(
                    f"rank mismatch between cores {k} and {k + 1}: "
                    f"{cores[k].shape[2]} != {cores[k + 1].shape[1]}")
        for c in cores:
            c.setflags(write=False)
        object.__setattr__(self, "cores", cores)

    @property
    def depth(self) -> int:
        return len(self.cores)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.shape[0] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[2] for c in self.cores)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.cores)


@dataclass(frozen=True)
class DenseQuantizedTensor:
    """Full array of tensor entries, flat in C order over ``dims``."""

    dims: tuple[int, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if vals.size != int(np.prod(dims, dtype=np.int64)):
            raise ValueError(f"{vals.size} values do not fit dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", vals)

    @property
    def depth(self) -> int:
        return len(self.dims)

    def reshape(self) -> np.ndarray:
        return self.values.reshape(self.dims)


def _check_size(n: int, cap: int) -> None:
    if n > cap:
        raise DenseSizeError(f"dense tensor with {n} entries exceeds cap {cap}")


def quantized_tensor(f, K: int, cap: int = DENSE_CAP) -> DenseQuantizedTensor:
    """Sample a univariate ``f`` on the dyadic grid ``j / 2**K``."""
    _check_size(2 ** K, cap)
    x = np.arange(2 ** K) / 2.0 ** K
    return DenseQuantizedTensor((2,) * K, np.asarray(f(x), dtype=float))


def tt_eval(tt: TensorTrain, index: Sequence[int]) -> float:
    """Value of the entry at ``index`` by left-to-right matrix products."""
    if len(index) != tt.depth:
        raise ValueError(f"index has length {len(index)}, tensor train has depth {tt.depth}")
    v = np.ones(1)
    for k, (s, core) in enumerate(zip(index, tt.cores)):
        if not 0 <= s < core.shape[0]:
            raise ValueError(f"index {s} out of range for core {k} with external dim {core.shape[0]}")
        v = v @ core[s]
    return float(v[0])


def _left_table(cores: Sequence[np.ndarray]) -> np.ndarray:
    """Contract cores into a matrix ``(prod e, r)`` with C-ordered rows."""
    mat = np.ones((1, 1))
    for c in cores:
        # rows: (old prefix, sigma)
        mat = np.einsum("pa,sab->psb", mat, c).reshape(-1, c.shape[2])
    return mat


def _right_table(cores: Sequence[np.ndarray]) -> np.ndarray:
    """Contract cores into a matrix ``(r, prod e)`` with C-ordered columns."""
    mat = np.ones((1, 1))
    for c in reversed(cores):
        mat = np.einsum("sab,bq->asq", c, mat).reshape(c.shape[1], -1)
    return mat


def _flat(idx: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    out = np.zeros(idx.shape[0], dtype=np.int64)
    for j, d in enumerate(dims):
        out = out * d + idx[:, j]
    return out


def tt_eval_batch(tt: TensorTrain, indices, table_limit: int = 2 ** 23,
                  chunk: int = 8192) -> np.ndarray:
    """Evaluate many entries at once.

    Precomputes full contraction tables for a leading and a trailing block of
    cores (as long as each table stays under ``table_limit`` entries), gathers
    the needed rows and columns, and handles any middle cores one by one.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 2 or idx.shape[1] != tt.depth:
        raise ValueError(f"indices must have shape (n, {tt.depth})")
    dims, ranks, K = tt.dims, tt.ranks, tt.depth
    if np.any(idx < 0) or np.any(idx >= np.asarray(dims)[None, :]):
        raise ValueError("index out of range")

    hl, size = 0, 1
    while hl < K and size * dims[hl] * ranks[hl + 1] <= table_limit and hl < (K + 1) // 2:
        size *= dims[hl]
        hl += 1
    hr, size = 0, 1
    while hr < K - hl and size * dims[K - 1 - hr] * ranks[K - 1 - hr] <= table_limit:
        size *= dims[K - 1 - hr]
        hr += 1
    left = _left_table(tt.cores[:hl])
    right = _right_table(tt.cores[K - hr:])
    lrow = _flat(idx[:, :hl], dims[:hl])
    rcol = _flat(idx[:, K - hr:], dims[K - hr:])

    out = np.empty(idx.shape[0])
    for start in range(0, idx.shape[0], chunk):
        sl = slice(start, start + chunk)
        v = left[lrow[sl]]
        for k in range(hl, K - hr):
            core = tt.cores[k]
            nxt = np.empty((v.shape[0], core.shape[2]))
            sig = idx[sl, k]
            for s in range(core.shape[0]):
                m = sig == s
                nxt[m] = v[m] @ core[s]
            v = nxt
        out[sl] = np.einsum("ir,ri->i", v, right[:, rcol[sl]])
    return out


def tt_to_dense(tt: TensorTrain, cap: int = DENSE_CAP) -> DenseQuantizedTensor:
    """Materialize every entry; refuses tensors larger than ``cap``."""
    _check_size(tt.size, cap)
    return DenseQuantizedTensor(tt.dims, _left_table(tt.cores).reshape(-1))


def tensor_norm(x, p: str = "two") -> float:
    """Entrywise tensor norm: ``inf``, ``two`` (2^-K scaled) or ``frob``."""
    vals = x.values if isinstance(x, DenseQuantizedTensor) else np.asarray(x, dtype=float).reshape(-1)
    if p == "inf":
        return float(np.max(np.abs(vals))) if vals.size else 0.0
    frob = float(np.linalg.norm(vals))
    if p == "frob":
        return frob
    if p == "two":
        return frob / np.sqrt(vals.size)
    raise ValueError(f"unknown norm {p!r}; expected 'inf', 'two' or 'frob'")


@dataclass
class SVDResult:
    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray
    discarded: float  # Frobenius norm of the dropped part


def truncated_svd(mat: np.ndarray, budget: float = 0.0, max_rank: int | None = None,
                  level: int | None = None) -> SVDResult:
    """SVD keeping the shortest prefix whose discarded tail has norm <= budget.

    At least one singular triple is always kept. Signs are fixed so the first
    non-negligible entry of each left singular vector is positive.
    """
    try:
        U, s, Vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            import scipy.linalg
            U, s, Vt = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"SVD failed: {exc}", level) from exc
    # tail[i] = sum_{j >= i} s_j^2, tail[n] = 0
    tail = np.append(np.cumsum((s ** 2)[::-1])[::-1], 0.0)
    r = int(np.argmax(tail <= budget ** 2))
    r = max(r, 1)
    if max_rank is not None:
        r = min(r, max_rank)
    r = min(r, s.size)
    U, s, Vt = U[:, :r], s[:r], Vt[:r]
    scale = np.max(np.abs(U), axis=0, keepdims=True) * 1e-10
    first = np.argmax(np.abs(U) > scale, axis=0)
    signs = np.sign(U[first, np.arange(r)])
    signs[signs == 0] = 1.0
    U = U * signs[None, :]
    Vt = Vt * signs[:, None]
    return SVDResult(U, s, Vt, float(np.sqrt(tail[r])))


def left_orthogonalize(cores: Sequence[np.ndarray]) -> list[np.ndarray]:
    """QR sweep left to right; all but the last core end up left-orthogonal."""
    out = [np.array(c) for c in cores]
    for k in range(len(out) - 1):
        e, rl, rr = out[k].shape
        q, r = np.linalg.qr(out[k].reshape(e * rl, rr))
        out[k] = q.reshape(e, rl, q.shape[1])
        out[k + 1] = np.einsum("ab,sbc->sac", r, out[k + 1])
    return out


def tt_round(tt: TensorTrain, tol: float) -> TensorTrain:
    """Recompress to relative Frobenius accuracy ``tol``.

    Left-orthogonalization followed by a right-to-left truncated-SVD sweep
    with per-bond budget ``tol * ||tt||_F / sqrt(K - 1)``.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    K = tt.depth
    if K == 1:
        return tt
    cores = left_orthogonalize(tt.cores)
    norm = float(np.linalg.norm(cores[-1]))
    budget = tol * norm / np.sqrt(K - 1)
    for k in range(K - 1, 0, -1):
        e, rl, rr = cores[k].shape
        mat = cores[k].transpose(1, 0, 2).reshape(rl, e * rr)
        # truncate in the row space: SVD of the transpose keeps our sign rule on V
        res = truncated_svd(mat.T, budget, level=k)
        r = res.s.size
        cores[k] = res.U.T.reshape(r, e, rr).transpose(1, 0, 2)
        cores[k - 1] = np.einsum("sab,bc->sac", cores[k - 1], (res.Vt.T * res.s[None, :]))
    return TensorTrain(tuple(cores))


def unfolding_eps_rank(x: DenseQuantizedTensor, m: int, eps: float, p: str = "two") -> int:
    """Smallest rank ``r >= 1`` whose best approximation of the m-th unfolding
    is within ``eps`` in the tensor 2-norm (Frobenius scaled by 1/sqrt(size))."""
    if p != "two":
        raise ValueError("only the 2-norm rank is computable; use p='two'")
    if not 1 <= m <= x.depth - 1:
        raise ValueError(f"level m must be in 1..{x.depth - 1}, got {m}")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    rows = int(np.prod(x.dims[:m]))
    mat = x.values.reshape(rows, -1)
    s = np.linalg.svd(mat, compute_uv=False)
    # singular values at rounding level count as zero, as in numpy's matrix_rank
    s = np.where(s > s[0] * max(mat.shape) * np.finfo(float).eps, s, 0.0)
    tail = np.append(np.cumsum((s ** 2)[::-1])[::-1], 0.0) / x.values.size
    r = int(np.argmax(np.sqrt(tail) <= eps))
    return max(r, 1)


def unfolding_rank_profile(x: DenseQuantizedTensor, eps: float) -> list[int]:
    return [unfolding_eps_rank(x, m, eps) for m in range(1, x.depth)]


# -- serialization ---------------------------------------------------------

def _to_bytes(tt: TensorTrain) -> bytes:
    buf = io.BytesIO()
    K = tt.depth
    buf.write(MAGIC)
    buf.write(struct.pack("<B", FORMAT_VERSION))
    buf.write(struct.pack("<I", K))
    buf.write(struct.pack("<I", K))
    buf.write(struct.pack(f"<{K}I", *tt.dims))
    buf.write(struct.pack(f"<{K + 1}I", *tt.ranks))
    for c in tt.cores:
        buf.write(np.ascontiguousarray(c, dtype="<f8").tobytes())
    return buf.getvalue()


def tt_write(tt: TensorTrain, sink) -> None:
    """Write the binary container to a path or a binary file object."""
    data = _to_bytes(tt)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)


def _take(buf: memoryview, pos: int, n: int) -> tuple[memoryview, int]:
    if pos + n > len(buf):
        raise QTTFormatError("truncated payload")
    return buf[pos:pos + n], pos + n


def tt_from_bytes(data: bytes) -> TensorTrain:
    buf = memoryview(data)
    head, pos = _take(buf, 0, 4)
    if bytes(head) != MAGIC:
        raise QTTFormatError(f"bad magic {bytes(head)!r}")
    raw, pos = _take(buf, pos, 1)
    (version,) = struct.unpack("<B", raw)
    if version != FORMAT_VERSION:
        raise QTTFormatError(f"unsupported format version {version}")
    raw, pos = _take(buf, pos, 8)
    K, ndims = struct.unpack("<2I", raw)
    if ndims != K:
        raise TTValidationError(f"{ndims} external dims listed for depth {K}")
    raw, pos = _take(buf, pos, 4 * K)
    dims = struct.unpack(f"<{K}I", raw)
    raw, pos = _take(buf, pos, 4 * (K + 1))
    ranks = struct.unpack(f"<{K + 1}I", raw)
    if ranks[0] != 1 or ranks[-1] != 1:
        raise TTValidationError(f"boundary ranks must be 1, got r_0={ranks[0]}, r_K={ranks[-1]}")
    cores = []
    for k in range(K):
        shape = (dims[k], ranks[k], ranks[k + 1])
        raw, pos = _take(buf, pos, 8 * int(np.prod(shape)))
        cores.append(np.frombuffer(raw, dtype="<f8").astype(float).reshape(shape))
    if pos != len(buf):
        raise QTTFormatError(f"{len(buf) - pos} trailing bytes after last core")
    return TensorTrain(tuple(cores))


def tt_read(source) -> TensorTrain:
    """Read a container from a path or a binary file object."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    return tt_from_bytes(data)
