"""Error measurement of a QTT against its target function on dyadic grids."""

from __future__ import annotations

import numpy as np

from .cores import multivariate_bit_order
from .tt import DENSE_CAP, TensorTrain, tt_eval_batch, tt_to_dense


def integers_to_bits(j: np.ndarray, K: int) -> np.ndarray:
    """Binary digits of ``j``, most significant first, shape ``(n, K)``."""
    j = np.asarray(j, dtype=np.int64)
    shifts = np.arange(K - 1, -1, -1, dtype=np.int64)
    return ((j[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def sample_dyadic_indices(K: int, n_random: int = 100_000, coarse_level: int = 10,
                          seed: int = 0) -> np.ndarray:
    """Integer grid positions in ``0 .. 2**K - 1`` used for sampled norms.

    Takes ``n_random`` uniform draws plus every point of the coarser grid
    ``D_coarse`` (all of ``D_K`` when ``K <= coarse_level`` or the total is
    small enough to enumerate).
    """
    total = 2 ** K
    if total <= n_random + 2 ** min(coarse_level, K):
        return np.arange(total, dtype=np.int64)
    rng = np.random.default_rng(seed)
    rand = rng.integers(0, total, size=n_random, dtype=np.int64)
    level = min(coarse_level, K)
    coarse = np.arange(2 ** level, dtype=np.int64) << (K - level)
    return np.unique(np.concatenate([rand, coarse]))


def sampled_errors(tt: TensorTrain, f, n_random: int = 100_000, coarse_level: int = 10,
                   seed: int = 0, full: bool = False) -> np.ndarray:
    """Absolute errors ``|S(j) - f(j / 2**K)|`` at sampled (or all) grid points."""
    K = tt.depth
    if full:
        return np.abs(tt_to_dense(tt).values - np.asarray(f(np.arange(2 ** K) / 2.0 ** K)))
    j = sample_dyadic_indices(K, n_random, coarse_level, seed)
    approx = tt_eval_batch(tt, integers_to_bits(j, K))
    return np.abs(approx - np.asarray(f(j / 2.0 ** K), dtype=float))


def sup_error(tt: TensorTrain, f, **kw) -> float:
    """Sampled maximum error on ``D_K``; a lower bound for the true maximum
    unless ``full=True``."""
    return float(sampled_errors(tt, f, **kw).max())


def two_norm_error(tt: TensorTrain, f, cap: int = DENSE_CAP) -> float:
    """Exact ``sqrt(2^-K sum |S - T|^2)`` by brute force."""
    exact = np.asarray(f(np.arange(2 ** tt.depth) / 2.0 ** tt.depth), dtype=float)
    err = tt_to_dense(tt, cap).values - exact
    return float(np.sqrt(np.mean(err ** 2)))


def multivariate_points(bits: np.ndarray, d: int, K: int, ordering: str) -> np.ndarray:
    """Map core-ordered bit strings to points in ``[0,1)^d``."""
    order = multivariate_bit_order(d, K, ordering)
    pts = np.zeros((bits.shape[0], d))
    for pos, (i, k) in enumerate(order):
        pts[:, i] += bits[:, pos] * 2.0 ** -k
    return pts


def multivariate_sup_error(tt: TensorTrain, f, d: int, K: int, ordering: str,
                           n_random: int = 100_000, seed: int = 0, full: bool = False) -> float:
    """Max error on the product grid ``D_K^d``; exhaustive when ``full`` or
    when the grid has at most ``n_random`` points."""
    total_bits = d * K
    if full or 2 ** total_bits <= n_random:
        j = np.arange(2 ** total_bits, dtype=np.int64)
    else:
        j = np.random.default_rng(seed).integers(0, 2 ** total_bits, size=n_random, dtype=np.int64)
    bits = integers_to_bits(j, total_bits)
    approx = tt_eval_batch(tt, bits)
    exact = np.asarray(f(multivariate_points(bits, d, K, ordering)), dtype=float)
    return float(np.max(np.abs(approx - exact)))
