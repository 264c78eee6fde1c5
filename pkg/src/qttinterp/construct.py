"""Construction pipelines: black-box function -> quantized tensor train."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cheb import ChebSystem, LocalInterpSystem
from .cores import (DangerTree, DecaySchedule, SparseCore, build_decay_cores, build_interp_core,
                    build_left_core, build_multires_cores, build_multivariate_cores,
                    build_right_core, build_sparse_core)
from .oracle import FunctionOracle, as_oracle
from .tt import TensorTrain, truncated_svd


@dataclass(frozen=True)
class TruncationPolicy:
    """How the rank-revealing sweep truncates.

    In ``"budget"`` mode level ``k`` may discard singular values of total
    Frobenius norm at most ``eps * sqrt(2**k)``; ``max_rank`` additionally caps
    the kept rank. In ``"rank-cap"`` mode only ``max_rank`` applies.
    """

    eps: float = 0.0
    max_rank: int | None = None
    mode: str = "budget"

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.mode not in ("budget", "rank-cap"):
            raise ValueError(f"unknown truncation mode {self.mode!r}")
        if self.mode == "rank-cap" and self.max_rank is None:
            raise ValueError("rank-cap mode needs max_rank")
        if self.max_rank is not None and self.max_rank < 1:
            raise ValueError("max_rank must be >= 1")

    def budget(self, level: int) -> float:
        if self.mode == "rank-cap":
            return 0.0
        return self.eps * np.sqrt(2.0 ** level)


@dataclass
class BuildReport:
    ranks: tuple[int, ...]
    evaluations: int          # points requested from the oracle
    oracle_calls: int         # distinct points actually evaluated
    discarded: list[float] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def max_rank(self) -> int:
        return max(self.ranks)

    def as_dict(self) -> dict:
        return {
            "ranks": list(self.ranks),
            "max_rank": self.max_rank,
            "evaluations": self.evaluations,
            "oracle_calls": self.oracle_calls,
            "discarded": list(self.discarded),
            "wall_time": self.wall_time,
        }


class _Counter:
    def __init__(self, oracle: FunctionOracle):
        self.oracle = oracle
        self.t0 = time.perf_counter()
        self.req0 = oracle.requests
        self.calls0 = oracle.calls

    def report(self, tt: TensorTrain, discarded=()) -> BuildReport:
        return BuildReport(tt.ranks, self.oracle.requests - self.req0,
                           self.oracle.calls - self.calls0, list(discarded),
                           time.perf_counter() - self.t0)


def construct_basic(f, sys: ChebSystem, K: int) -> tuple[TensorTrain, BuildReport]:
    """``A_L A^(K-2) A_R``: every interior rank is ``N + 1``."""
    if K < 2:
        raise ValueError("depth K must be >= 2")
    f = as_oracle(f)
    ctr = _Counter(f)
    A = build_interp_core(sys)
    tt = TensorTrain((build_left_core(f, sys),) + (A,) * (K - 2) + (build_right_core(sys),))
    return tt, ctr.report(tt)


def _times_core(R: np.ndarray, A) -> np.ndarray:
    """``B[sigma] = R @ A[sigma]`` for dense or sparse cores."""
    if isinstance(A, SparseCore):
        return np.stack([np.asarray((A[s].T @ R.T).T) for s in (0, 1)])
    return np.einsum("ag,sgb->sab", R, A)


def _rank_revealing_sweep(first: np.ndarray, steps, policy: TruncationPolicy):
    """Shared sweep: factor ``first`` (2, 1, n), then for each step apply it to
    the running remainder ``R`` and re-factor; the last step is merged as is.

    ``steps`` is a sequence of callables ``R -> B`` with ``B`` of shape
    ``(2, r, n')``.
    """
    cores, discarded = [], []
    mat = first.reshape(2, -1)
    res = truncated_svd(mat, policy.budget(1), policy.max_rank, level=1)
    cores.append(res.U.reshape(2, 1, -1))
    discarded.append(res.discarded)
    R = res.s[:, None] * res.Vt
    for level, step in enumerate(steps[:-1], start=2):
        B = step(R)
        r = B.shape[1]
        res = truncated_svd(B.reshape(2 * r, -1), policy.budget(level), policy.max_rank, level=level)
        cores.append(res.U.reshape(2, r, -1))
        discarded.append(res.discarded)
        R = res.s[:, None] * res.Vt
    cores.append(steps[-1](R))
    return cores, discarded


def construct_rank_revealing(f, sys: ChebSystem, K: int, policy: TruncationPolicy,
                             sparse: bool = False, M: int | None = None
                             ) -> tuple[TensorTrain, BuildReport]:
    """Build ``A_L A^(K-2) A_R`` level by level, truncating as it goes.

    Each interior core is the left factor of an SVD of ``R A`` reshaped to
    ``(2 r, N + 1)``, so all cores but the last have orthonormal columns.
    With ``sparse=True`` the dense interpolation core is replaced by its local
    counterpart of half-width ``M``, so each level costs ``O(N r M + N r^2)``.
    """
    if K < 2:
        raise ValueError("depth K must be >= 2")
    if sparse and M is None:
        raise ValueError("sparse construction needs the local order M")
    f = as_oracle(f)
    ctr = _Counter(f)
    AL = build_left_core(f, sys)
    A = build_sparse_core(LocalInterpSystem(sys, M)) if sparse else build_interp_core(sys)
    AR = build_right_core(sys)
    steps = [lambda R: _times_core(R, A)] * (K - 2) + [lambda R: np.einsum("ag,sgb->sab", R, AR)]
    cores, discarded = _rank_revealing_sweep(AL, steps, policy)
    tt = TensorTrain(tuple(cores))
    return tt, ctr.report(tt, discarded)


def construct_decay(f, sched: DecaySchedule, K: int | None = None) -> tuple[TensorTrain, BuildReport]:
    """A priori decaying-rank construction for band-limited targets; no SVD."""
    K = sched.K if K is None else K
    if K != sched.K:
        raise ValueError(f"schedule depth {sched.K} does not match K={K}")
    f = as_oracle(f)
    ctr = _Counter(f)
    AL = build_left_core(f, ChebSystem(sched.N(1)))
    tt = TensorTrain((AL,) + tuple(build_decay_cores(sched)))
    return tt, ctr.report(tt)


def decay_error_bound(sched: DecaySchedule, mu_total: float) -> float:
    """A priori sup-norm error bound of :func:`construct_decay`."""
    K, omega, delta = sched.K, sched.omega, sched.delta
    a = 1.0 + 2.0 / np.pi * np.log(np.ceil(omega / 2.0 + delta) + 1.0)
    return 2.0 / np.pi * mu_total * (K - 1) * a ** (K - 2) * np.exp(-delta / 2.0)


def decay_max_rank_bound(sched: DecaySchedule) -> int:
    return int(np.ceil(np.sqrt(sched.omega) + sched.delta)) + 1


def construct_multires(f, sys: ChebSystem, K: int, danger: DangerTree
                       ) -> tuple[TensorTrain, BuildReport]:
    """Multiresolution construction deferring evaluation on dangerous intervals."""
    f = as_oracle(f)
    ctr = _Counter(f)
    tt = TensorTrain(tuple(build_multires_cores(f, sys, K, danger)))
    return tt, ctr.report(tt)


def construct_multivariate(f, sys: ChebSystem, d: int, K: int, ordering: str = "interleaved",
                           policy: TruncationPolicy | None = None, sparse: bool = False,
                           M: int | None = None) -> tuple[TensorTrain, BuildReport]:
    """Rank-revealing construction for ``f: [0,1]^d -> R`` with ``K`` bits per variable.

    The bond before truncation is a product of ``(N+1)``-sized factors; each
    directional core is applied through its Kronecker structure.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if sparse and M is None:
        raise ValueError("sparse construction needs the local order M")
    policy = policy or TruncationPolicy()
    f = as_oracle(f, dim=d)
    ctr = _Counter(f)
    interior = build_sparse_core(LocalInterpSystem(sys, M)) if sparse else None
    mv = build_multivariate_cores(f, sys, d, K, ordering, interior=interior)
    steps = [core.apply for core in mv.cores]
    cores, discarded = _rank_revealing_sweep(mv.left, steps, policy)
    tt = TensorTrain(tuple(cores))
    return tt, ctr.report(tt, discarded)
