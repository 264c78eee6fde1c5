"""Builders for the interpolating tensor cores.

Every core is an array ``core[sigma, alpha, beta]`` (external bit first). The
interior core ``A`` maps Chebyshev-Lobatto samples on a dyadic interval to the
samples on its left (``sigma = 0``) and right (``sigma = 1``) halves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .cheb import ChebSystem, LocalInterpSystem, lobatto_nodes
from .oracle import FunctionOracle, as_oracle


def _half_points(nodes: np.ndarray, sigma: int) -> np.ndarray:
    return (sigma + nodes) / 2.0


def build_left_core(f, sys: ChebSystem) -> np.ndarray:
    """``A_L[sigma, 0, beta] = f((sigma + c[beta]) / 2)``; 2(N+1) evaluations."""
    f = as_oracle(f)
    pts = np.concatenate([_half_points(sys.nodes, 0), _half_points(sys.nodes, 1)])
    return f(pts).reshape(2, 1, sys.N + 1)


def build_interp_core(sys: ChebSystem) -> np.ndarray:
    """``A[sigma, alpha, beta] = P^alpha((sigma + c[beta]) / 2)``."""
    return np.stack([sys.cardinal_matrix(_half_points(sys.nodes, s)).T for s in (0, 1)])


def build_right_core(sys: ChebSystem) -> np.ndarray:
    """``A_R[sigma, alpha, 0] = P^alpha(sigma / 2)``."""
    return sys.cardinal_matrix(np.array([0.0, 0.5]))[:, :, None]


@dataclass(frozen=True)
class CoreSet:
    left: np.ndarray
    interior: np.ndarray
    right: np.ndarray


def build_core_set(f, sys: ChebSystem) -> CoreSet:
    return CoreSet(build_left_core(f, sys), build_interp_core(sys), build_right_core(sys))


@dataclass(frozen=True)
class SparseCore:
    """Interpolating core with one CSC matrix ``[alpha, beta]`` per bit value."""

    mats: tuple[sp.csc_matrix, sp.csc_matrix]

    @property
    def shape(self) -> tuple[int, int, int]:
        return (2,) + self.mats[0].shape

    def __getitem__(self, sigma: int) -> sp.csc_matrix:
        return self.mats[sigma]

    def toarray(self) -> np.ndarray:
        return np.stack([m.toarray() for m in self.mats])

    def column(self, sigma: int, beta: int) -> list[tuple[int, float]]:
        m = self.mats[sigma]
        lo, hi = m.indptr[beta], m.indptr[beta + 1]
        return list(zip(m.indices[lo:hi].tolist(), m.data[lo:hi].tolist()))

    @property
    def nnz(self) -> int:
        return sum(m.nnz for m in self.mats)


def build_sparse_core(lsys: LocalInterpSystem) -> SparseCore:
    """Local-interpolation counterpart of :func:`build_interp_core`."""
    nodes = lsys.base.nodes
    mats = tuple(lsys.local_matrix(_half_points(nodes, s)).T.tocsc() for s in (0, 1))
    return SparseCore(mats)


@dataclass(frozen=True)
class DecaySchedule:
    """Grid sizes ``N_k = ceil(2^-k * omega + delta)`` for ``k = 1..K``."""

    omega: float
    delta: float
    K: int

    def __post_init__(self):
        if self.omega <= 0 or self.delta <= 0:
            raise ValueError("bandlimit and margin must be positive")
        if self.K < 2:
            raise ValueError("depth must be >= 2")

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        return tuple(int(math.ceil(2.0 ** -k * self.omega + self.delta)) for k in range(1, self.K + 1))

    def N(self, k: int) -> int:
        return self.sizes[k - 1]


def build_decay_core(N_in: int, N_out: int) -> np.ndarray:
    """``A_k[sigma, alpha, beta] = P_{N_in}^alpha((sigma + c_{N_out}[beta]) / 2)``."""
    src = ChebSystem(N_in)
    dst = lobatto_nodes(N_out)
    return np.stack([src.cardinal_matrix(_half_points(dst, s)).T for s in (0, 1)])


def build_decay_cores(sched: DecaySchedule) -> list[np.ndarray]:
    """Cores ``A_2 .. A_{K-1}`` followed by the right cap.

    The cap evaluates the level ``K - 1`` interpolant at ``sigma / 2``, i.e. it
    is the column of ``A_K`` whose node is ``c = 0`` (index ``N_K``).
    """
    K = sched.K
    cores = [build_decay_core(sched.N(k - 1), sched.N(k)) for k in range(2, K)]
    cap = ChebSystem(sched.N(K - 1)).cardinal_matrix(np.array([0.0, 0.5]))[:, :, None]
    return cores + [cap]


def build_inverse_core(sys: ChebSystem) -> np.ndarray:
    """Generalized inverse ``G[sigma, beta, gamma]`` of the interior core.

    Coarse node ``c[gamma] <= 1/2`` is read from the left child grid,
    otherwise from the right child grid.
    """
    n = sys.N + 1
    c = sys.nodes
    left = c <= 0.5
    G = np.zeros((2, n, n))
    G[0][:, left] = sys.cardinal_matrix(2.0 * c[left]).T
    G[1][:, ~left] = sys.cardinal_matrix(2.0 * c[~left] - 1.0).T
    return G


def build_lagrange_tensor(sys: ChebSystem, q: int) -> np.ndarray:
    """Weights ``L[sigma_{1:q}, beta]`` interpolating from the dyadic grid
    ``D_q`` (rows in binary order, first bit most significant) to ``c[beta]``."""
    if not 1 <= q <= 4:
        raise ValueError(f"q must be in 1..4, got {q}")
    t = np.arange(2 ** q) / 2.0 ** q
    c = sys.nodes
    L = np.ones((2 ** q, sys.N + 1))
    for i in range(2 ** q):
        for j in range(2 ** q):
            if j != i:
                L[i] *= (c - t[j]) / (t[i] - t[j])
    return L


# -- multiresolution ----------------------------------------------------------

Prefix = tuple[int, ...]


@dataclass(frozen=True)
class DangerTree:
    """Nested sets ``S_k`` of dangerous dyadic prefixes for ``k = 1..K-1``."""

    K: int
    levels: tuple[tuple[Prefix, ...], ...]

    def __post_init__(self):
        levels = tuple(tuple(tuple(int(b) for b in p) for p in lvl) for lvl in self.levels)
        if len(levels) > self.K - 1:
            raise ValueError(f"{len(levels)} levels given for depth {self.K}; at most K-1 allowed")
        levels = levels + ((),) * (self.K - 1 - len(levels))
        for k, lvl in enumerate(levels, start=1):
            if len(set(lvl)) != len(lvl):
                raise ValueError(f"duplicate prefixes in level {k}")
            for p in lvl:
                if len(p) != k or any(b not in (0, 1) for b in p):
                    raise ValueError(f"prefix {p} is not a bit string of length {k}")
                if k > 1 and p[:-1] not in set(levels[k - 2]):
                    raise ValueError(f"prefix {p} at level {k} has no dangerous parent")
        object.__setattr__(self, "levels", levels)

    def S(self, k: int) -> tuple[Prefix, ...]:
        if 1 <= k <= self.K - 1:
            return self.levels[k - 1]
        return ()

    def q(self, k: int) -> int:
        return len(self.S(k))

    @classmethod
    def empty(cls, K: int) -> "DangerTree":
        return cls(K, ())

    @classmethod
    def left_edge(cls, K: int) -> "DangerTree":
        return cls(K, tuple(((0,) * k,) for k in range(1, K)))

    @classmethod
    def right_edge(cls, K: int) -> "DangerTree":
        return cls(K, tuple(((1,) * k,) for k in range(1, K)))

    @classmethod
    def containing(cls, x0: float, K: int) -> "DangerTree":
        """Chain of dyadic intervals ``[x, x + 2^-k)`` containing ``x0``."""
        j = min(int(math.floor(x0 * 2 ** (K - 1))), 2 ** (K - 1) - 1)
        bits = tuple((j >> (K - 2 - i)) & 1 for i in range(K - 1))
        return cls(K, tuple((bits[:k],) for k in range(1, K)))

    def first_safe_level(self, index: Sequence[int]) -> int:
        """Smallest k with ``index[:k]`` not in ``S_k`` (``K`` if none)."""
        for k in range(1, self.K):
            if tuple(index[:k]) not in set(self.S(k)):
                return k
        return self.K

    def evaluation_count(self, N: int) -> int:
        """Oracle requests made by :func:`build_multires_cores`."""
        total = (N + 1) * (2 - self.q(1))
        for k in range(2, self.K):
            total += (N + 1) * (2 * self.q(k - 1) - self.q(k))
        return total + 2 * self.q(self.K - 1)


def _dyadic(prefix: Prefix) -> float:
    return sum(b * 2.0 ** -(i + 1) for i, b in enumerate(prefix))


def build_multires_cores(f, sys: ChebSystem, K: int, danger: DangerTree) -> list[np.ndarray]:
    """Block cores of the multiresolution construction.

    Bond ``k`` carries ``N + 1`` interpolation values followed by ``q_k``
    indicator slots, one per dangerous prefix at level ``k``.
    """
    if K < 2:
        raise ValueError("depth must be >= 2")
    if danger.K != K:
        raise ValueError(f"danger tree built for depth {danger.K}, not {K}")
    f = as_oracle(f)
    n = sys.N + 1
    c = sys.nodes

    # gather every evaluation point first so the oracle sees one batch
    requests: list[tuple[tuple, np.ndarray]] = []
    S1 = set(danger.S(1))
    for s in (0, 1):
        if (s,) not in S1:
            requests.append((("L", s), (s + c) / 2.0))
    for k in range(2, K):
        Sk = set(danger.S(k))
        for i, p in enumerate(danger.S(k - 1)):
            base = _dyadic(p)
            for s in (0, 1):
                if p + (s,) not in Sk:
                    requests.append((("F", k, i, s), base + 2.0 ** -k * (s + c)))
    for i, p in enumerate(danger.S(K - 1)):
        base = _dyadic(p)
        requests.append((("FK", i), base + 2.0 ** -K * np.array([0.0, 1.0])))
    if requests:
        vals = f(np.concatenate([pts for _, pts in requests]))
    samples, pos = {}, 0
    for key, pts in requests:
        samples[key] = vals[pos:pos + len(pts)]
        pos += len(pts)

    A = build_interp_core(sys)
    AR = build_right_core(sys)

    q1 = danger.q(1)
    first = np.zeros((2, 1, n + q1))
    for s in (0, 1):
        if ("L", s) in samples:
            first[s, 0, :n] = samples[("L", s)]
    for j, p in enumerate(danger.S(1)):
        first[p[0], 0, n + j] = 1.0
    cores = [first]

    for k in range(2, K):
        qa, qb = danger.q(k - 1), danger.q(k)
        core = np.zeros((2, n + qa, n + qb))
        core[:, :n, :n] = A
        child_pos = {p: j for j, p in enumerate(danger.S(k))}
        for i, p in enumerate(danger.S(k - 1)):
            for s in (0, 1):
                j = child_pos.get(p + (s,))
                if j is None:
                    core[s, n + i, :n] = samples[("F", k, i, s)]
                else:
                    core[s, n + i, n + j] = 1.0
        cores.append(core)

    qK = danger.q(K - 1)
    last = np.zeros((2, n + qK, 1))
    last[:, :n, :] = AR
    for i in range(qK):
        last[:, n + i, 0] = samples[("FK", i)]
    cores.append(last)
    return cores


# -- multivariate -------------------------------------------------------------

@dataclass(frozen=True)
class KronCore:
    """Core acting as ``I x .. x small(sigma) x .. x I`` on a factored bond.

    ``sizes`` are the factor sizes of the incoming bond (most significant
    first) and ``axis`` the factor ``small`` acts on. A ``small`` core with a
    trailing size of 1 (a right cap) removes its factor from the bond.
    """

    small: np.ndarray | SparseCore
    sizes: tuple[int, ...]
    axis: int

    @property
    def in_size(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def out_sizes(self) -> tuple[int, ...]:
        b = self.small.shape[2]
        rest = list(self.sizes)
        if b == 1:
            del rest[self.axis]
        else:
            rest[self.axis] = b
        return tuple(rest)

    @property
    def out_size(self) -> int:
        return int(np.prod(self.out_sizes))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (2, self.in_size, self.out_size)

    def _mat(self, sigma: int):
        return self.small[sigma]

    def apply(self, R: np.ndarray) -> np.ndarray:
        """``B[sigma] = R @ core(sigma)`` for a row block ``R`` of shape (r, in_size).

        Costs ``O(r * in_size * a)`` per bit value, never forming the Kronecker
        matrix.
        """
        r = R.shape[0]
        T = R.reshape((r,) + self.sizes)
        T = np.moveaxis(T, self.axis + 1, -1)
        lead = T.shape[:-1]
        flat = T.reshape(-1, self.sizes[self.axis])
        out = []
        for s in (0, 1):
            m = self._mat(s)
            prod = np.asarray(flat @ m) if not sp.issparse(m) else np.asarray((m.T @ flat.T).T)
            b = prod.shape[1]
            prod = prod.reshape(lead + (b,))
            if b == 1:
                prod = prod[..., 0]
            else:
                prod = np.moveaxis(prod, -1, self.axis + 1)
            out.append(prod.reshape(r, -1))
        return np.stack(out)

    def rmatvec(self, sigma: int, u: np.ndarray) -> np.ndarray:
        """Row vector times core: ``u @ core(sigma)``."""
        return self.apply(np.asarray(u, dtype=float)[None, :])[sigma, 0]

    def matvec(self, sigma: int, v: np.ndarray) -> np.ndarray:
        """Core times column vector: ``core(sigma) @ v``."""
        m = self._mat(sigma)
        m = m.toarray() if sp.issparse(m) else m
        T = np.asarray(v, dtype=float).reshape(self.out_sizes)
        if m.shape[1] == 1:
            T = np.expand_dims(T, self.axis)
        T = np.tensordot(m, T, axes=([1], [self.axis]))
        T = np.moveaxis(T, 0, self.axis)
        return T.reshape(-1)

    def to_dense(self) -> np.ndarray:
        """Materialize ``(2, in_size, out_size)``; for small test sizes only."""
        out = []
        for s in (0, 1):
            m = self._mat(s)
            m = m.toarray() if sp.issparse(m) else m
            mats = [np.eye(n) for n in self.sizes]
            mats[self.axis] = m
            full = np.ones((1, 1))
            for mm in mats:
                full = np.kron(full, mm)
            out.append(full)
        return np.stack(out)


def build_multivariate_left_core(f, sys: ChebSystem, d: int) -> np.ndarray:
    """``f((sigma + c[b1]) / 2, c[b2], ..., c[bd])`` on the full product grid."""
    f = as_oracle(f, dim=d)
    c = sys.nodes
    n = sys.N + 1
    grids = np.meshgrid(*([c] * d), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    blocks = []
    for s in (0, 1):
        p = pts.copy()
        p[:, 0] = (s + p[:, 0]) / 2.0
        blocks.append(p)
    vals = f(np.concatenate(blocks))
    return vals.reshape(2, 1, n ** d)


def multivariate_bit_order(d: int, K: int, ordering: str) -> list[tuple[int, int]]:
    """``(variable, depth)`` for each core position; depth counts from 1."""
    if ordering == "interleaved":
        return [(i, k) for k in range(1, K + 1) for i in range(d)]
    if ordering == "serial":
        return [(i, k) for i in range(d) for k in range(1, K + 1)]
    raise ValueError(f"unknown ordering {ordering!r}")


@dataclass(frozen=True)
class MultivariateCores:
    left: np.ndarray
    cores: tuple[KronCore, ...]
    d: int
    K: int
    ordering: str


def build_multivariate_cores(f, sys: ChebSystem, d: int, K: int, ordering: str = "interleaved",
                             interior: np.ndarray | SparseCore | None = None) -> MultivariateCores:
    """Left core plus Kronecker-structured interior cores and caps.

    ``interior`` overrides the univariate interpolation core (e.g. with a
    :class:`SparseCore`).
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if K < 2:
        raise ValueError("depth must be >= 2")
    n = sys.N + 1
    A = build_interp_core(sys) if interior is None else interior
    AR = build_right_core(sys)
    left = build_multivariate_left_core(f, sys, d)
    cores: list[KronCore] = []
    if ordering == "interleaved":
        full = (n,) * d
        for i in range(1, d):
            cores.append(KronCore(A, full, i))
        for _ in range(2, K):
            for i in range(d):
                cores.append(KronCore(A, full, i))
        for i in range(d):
            cores.append(KronCore(AR, (n,) * (d - i), 0))
    elif ordering == "serial":
        for i in range(d):
            sizes = (n,) * (d - i)
            steps = K - 2 if i == 0 else K - 1
            cores.extend(KronCore(A, sizes, 0) for _ in range(steps))
            cores.append(KronCore(AR, sizes, 0))
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    assert len(cores) == d * K - 1
    return MultivariateCores(left, tuple(cores), d, K, ordering)
