"""Black-box function evaluation with call accounting."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np


class FunctionOracle:
    """Wrap a vectorized function ``f: [0,1]^d -> R`` and count evaluations.

    ``fn`` receives an array of shape ``(n,)`` when ``dim == 1`` and
    ``(n, dim)`` otherwise, and must return ``n`` real values.

    Two counters are kept: ``requests`` is the number of points asked for by
    callers, ``calls`` is the number of points actually passed to ``fn``.
    With ``cache=True`` (the default) repeated points, keyed by their exact
    binary representation, are served from memory and do not count as calls.

    ``workers > 1`` splits each batch into chunks evaluated on a thread pool;
    useful when ``fn`` releases the GIL or waits on I/O.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], dim: int = 1,
                 cache: bool = True, workers: int = 1, chunk: int = 4096):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.fn = fn
        self.dim = dim
        self.cache = cache
        self.workers = workers
        self.chunk = chunk
        self.requests = 0
        self.calls = 0
        self._memo: dict[bytes, float] = {}

    def reset_counters(self) -> None:
        self.requests = 0
        self.calls = 0

    def _raw(self, pts: np.ndarray) -> np.ndarray:
        if len(pts) == 0:
            return np.zeros(0)
        self.calls += len(pts)
        if self.workers > 1 and len(pts) > self.chunk:
            pieces = [pts[i:i + self.chunk] for i in range(0, len(pts), self.chunk)]
            with ThreadPoolExecutor(self.workers) as pool:
                out = list(pool.map(self.fn, pieces))
            vals = np.concatenate([np.asarray(o, dtype=float).reshape(-1) for o in out])
        else:
            vals = np.asarray(self.fn(pts), dtype=float).reshape(-1)
        if vals.shape[0] != len(pts):
            raise ValueError(f"oracle returned {vals.shape[0]} values for {len(pts)} points")
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("oracle returned non-finite values")
        return vals

    def __call__(self, x) -> np.ndarray:
        """Evaluate at a batch of points; returns a flat array of values."""
        pts = np.asarray(x, dtype=float)
        if self.dim == 1:
            pts = pts.reshape(-1)
        else:
            pts = pts.reshape(-1, self.dim)
        self.requests += len(pts)
        if not self.cache:
            return self._raw(pts)

        keys = [p.tobytes() for p in pts] if self.dim > 1 else [np.float64(p).tobytes() for p in pts]
        out = np.empty(len(pts))
        missing: dict[bytes, list[int]] = {}
        for i, k in enumerate(keys):
            v = self._memo.get(k)
            if v is None:
                missing.setdefault(k, []).append(i)
            else:
                out[i] = v
        if missing:
            first = [idx[0] for idx in missing.values()]
            vals = self._raw(pts[first])
            for (k, idx), v in zip(missing.items(), vals):
                self._memo[k] = float(v)
                out[idx] = v
        return out


def as_oracle(f, dim: int = 1) -> FunctionOracle:
    """Return ``f`` unchanged if it is already an oracle, else wrap it."""
    if isinstance(f, FunctionOracle):
        return f
    return FunctionOracle(f, dim=dim)
