"""Recover Chebyshev-grid samples of a function from its QTT.

Stage 1 contracts the last ``q`` cores against local Lagrange weights on the
dyadic grid, giving samples on every level ``K - q`` subinterval. Stage 2
then repeatedly undoes one interpolation core with its generalized inverse
``G`` to coarsen by one level at a time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .cheb import ChebSystem
from .cores import build_inverse_core, build_lagrange_tensor
from .tt import DENSE_CAP, TensorTrain, _left_table, _right_table


@dataclass(frozen=True)
class GridSamples:
    """Approximations of ``f(x_{<=m} + 2^-m c[beta])`` for all level-``m`` prefixes.

    Held either as explicit ``values`` of shape ``(2**m, N + 1)`` (rows in
    binary prefix order) or lazily as ``prefix`` cores plus a ``tail`` matrix
    ``(r, N + 1)``, whose row for a given prefix is the prefix chain times
    ``tail``. The lazy form avoids materializing ``2**m`` rows at large ``m``.
    """

    m: int
    nodes: np.ndarray = field(repr=False)
    values: np.ndarray | None = field(default=None, repr=False)
    prefix: tuple[np.ndarray, ...] | None = field(default=None, repr=False)
    tail: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.nodes)
        if (self.values is None) == (self.tail is None):
            raise ValueError("give exactly one of values or (prefix, tail)")
        if self.values is not None:
            vals = np.asarray(self.values, dtype=float)
            if vals.shape != (2 ** self.m, n):
                raise ValueError(f"values must have shape {(2 ** self.m, n)}, got {vals.shape}")
            if not np.all(np.isfinite(vals)):
                raise ValueError("non-finite sample values")
            object.__setattr__(self, "values", vals)
        else:
            if self.prefix is None or len(self.prefix) != self.m:
                raise ValueError(f"lazy samples at level {self.m} need {self.m} prefix cores")
            if self.tail.shape[1] != n:
                raise ValueError("tail width does not match node count")

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    @property
    def is_lazy(self) -> bool:
        return self.values is None

    def row(self, prefix_bits) -> np.ndarray:
        """Samples on the subinterval with the given leading bits."""
        bits = tuple(int(b) for b in prefix_bits)
        if len(bits) != self.m:
            raise ValueError(f"prefix must have {self.m} bits")
        if not self.is_lazy:
            j = int("".join(map(str, bits)), 2) if bits else 0
            return self.values[j]
        v = np.ones(1)
        for s, core in zip(bits, self.prefix):
            v = v @ core[s]
        return v @ self.tail

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        """All rows as a ``(2**m, N + 1)`` array."""
        if not self.is_lazy:
            return self.values
        if 2 ** self.m * len(self.nodes) > cap:
            raise ValueError(f"2^{self.m} x {len(self.nodes)} samples exceed cap {cap}")
        return _left_table(self.prefix) @ self.tail

    def points(self) -> np.ndarray:
        """Sample locations, same shape as :meth:`dense`."""
        base = np.arange(2 ** self.m) / 2.0 ** self.m
        return base[:, None] + 2.0 ** -self.m * self.nodes[None, :]


def stage1_recover(tt: TensorTrain, sys: ChebSystem, q: int = 1) -> GridSamples:
    """Level ``K - q`` samples from the last ``q`` cores and the Lagrange tensor."""
    K = tt.depth
    if not 1 <= q <= min(4, K - 1):
        raise ValueError(f"q must be in 1..{min(4, K - 1)}, got {q}")
    if any(e != 2 for e in tt.dims):
        raise ValueError("inversion needs univariate bit cores")
    L = build_lagrange_tensor(sys, q)
    tail = _right_table(tt.cores[K - q:]) @ L
    return GridSamples(K - q, sys.nodes, prefix=tuple(tt.cores[:K - q]), tail=tail)


def stage2_coarsen(samples: GridSamples, G: np.ndarray) -> GridSamples:
    """Undo one interpolation core: level ``k + 1`` samples -> level ``k``."""
    if samples.m < 1:
        raise ValueError("cannot coarsen level-0 samples")
    n = len(samples.nodes)
    if G.shape != (2, n, n):
        raise ValueError(f"inverse core shape {G.shape} does not match {n} nodes")
    if samples.is_lazy:
        last = samples.prefix[-1]
        tail = last[0] @ samples.tail @ G[0] + last[1] @ samples.tail @ G[1]
        return GridSamples(samples.m - 1, samples.nodes, prefix=samples.prefix[:-1], tail=tail)
    vals = samples.values.reshape(2 ** (samples.m - 1), 2, n)
    coarse = np.einsum("psb,sbg->pg", vals, G)
    return GridSamples(samples.m - 1, samples.nodes, values=coarse)


def recover_grid(tt: TensorTrain, sys: ChebSystem, q: int = 1, m: int | None = None) -> GridSamples:
    """Stage 1 followed by ``K - q - m`` coarsening steps."""
    K = tt.depth
    m = K - q if m is None else m
    if not 1 <= m <= K - q:
        raise ValueError(f"target level must be in 1..{K - q}, got {m}")
    samples = stage1_recover(tt, sys, q)
    G = build_inverse_core(sys)
    while samples.m > m:
        samples = stage2_coarsen(samples, G)
    return samples


def write_samples_csv(samples: GridSamples, sink, cap: int = DENSE_CAP) -> None:
    """CSV with columns ``prefix_bits, beta, x, value``."""
    vals = samples.dense(cap)
    pts = samples.points()
    w = csv.writer(sink)
    w.writerow(["prefix_bits", "beta", "x", "value"])
    for j in range(vals.shape[0]):
        bits = format(j, f"0{samples.m}b") if samples.m else ""
        for beta in range(vals.shape[1]):
            w.writerow([bits, beta, "%.17g" % pts[j, beta], "%.17g" % vals[j, beta]])
