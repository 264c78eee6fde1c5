"""Closed-form interpolation error and QTT rank bounds, plus a sampled
measurement of the Chebyshev interpolation error on dyadic subintervals.

Three smoothness classes are supported:

* :class:`Differentiable` -- ``|f^(p+1)| <= C`` on [0, 1];
* :class:`Analytic` -- ``|f| <= B`` on the scaled Bernstein ellipse of parameter ``rho``;
* :class:`Bandlimited` -- ``f(x) = (2 pi)^-1 int e^{i w x} dmu(w)`` with ``mu``
  supported on ``[-omega, omega]`` and total variation ``mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .cheb import ChebSystem
from .oracle import FunctionOracle


@dataclass(frozen=True)
class Differentiable:
    p: int
    C: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("order p must be >= 1")
        if self.C < 0:
            raise ValueError("derivative bound C must be >= 0")


@dataclass(frozen=True)
class Analytic:
    rho: float
    B: float

    def __post_init__(self):
        if self.rho <= 1:
            raise ValueError("ellipse parameter rho must exceed 1")
        if self.B < 0:
            raise ValueError("magnitude bound B must be >= 0")

    def rho_at(self, m: int) -> float:
        """Effective ellipse parameter on level-``m`` subintervals."""
        return max(self.rho, 2.0 ** m * (self.rho - 1.0) ** 2 / self.rho)


@dataclass(frozen=True)
class Bandlimited:
    omega: float
    mu: float

    def __post_init__(self):
        # omega = 0 (constants) is allowed
        if self.omega < 0:
            raise ValueError("bandlimit must be >= 0")
        if self.mu < 0:
            raise ValueError("total variation must be >= 0")


SmoothnessSpec = Union[Differentiable, Analytic, Bandlimited]


def log_plus(x: float) -> float:
    return max(0.0, math.log(x)) if x > 0 else 0.0


def interp_error_bound(spec: SmoothnessSpec, m: int, N: int) -> float:
    """Upper bound on ``E_{m,N}[f]`` for the given smoothness class."""
    if m < 0 or N < 1:
        raise ValueError("need m >= 0 and N >= 1")
    if isinstance(spec, Differentiable):
        if N <= spec.p:
            raise ValueError(f"differentiable bound needs N > p = {spec.p}")
        return 4.0 * spec.C / math.pi * 2.0 ** -m / (spec.p * (N - spec.p) ** spec.p)
    if isinstance(spec, Analytic):
        rm = spec.rho_at(m)
        return 4.0 * spec.B * rm ** -N / (rm - 1.0)
    if isinstance(spec, Bandlimited):
        return 2.0 * spec.mu / math.pi * math.exp(0.5 * (2.0 ** -m * spec.omega - N))
    raise TypeError(f"unknown smoothness spec {spec!r}")


def rank_bound(spec: SmoothnessSpec, m: int, eps: float) -> int:
    """Upper bound on the ``(eps, inf)``-rank of the ``m``-th unfolding."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if m < 0:
        raise ValueError("m must be >= 0")
    if isinstance(spec, Differentiable):
        p = spec.p
        return 1 + p + math.ceil((4.0 * spec.C / math.pi * 2.0 ** -m / (p * eps)) ** (1.0 / p))
    if isinstance(spec, Analytic):
        if spec.B == 0:
            return 2
        rm = spec.rho_at(m)
        lg = lambda v: math.log(v) / math.log(rm)  # noqa: E731
        return 1 + max(1, math.ceil(lg(1.0 / eps) - lg(rm - 1.0) + lg(4.0 * spec.B)))
    if isinstance(spec, Bandlimited):
        return 1 + math.ceil(2.0 ** -m * spec.omega + 2.0 * log_plus(2.0 * spec.mu / (math.pi * eps)))
    raise TypeError(f"unknown smoothness spec {spec!r}")


def rank_bound_multiorder(C: Sequence[float], m: int, eps: float) -> int:
    """Rank bound using derivative bounds ``C[q-1] >= |f^(q+1)|`` for every
    order ``q = 1..p`` at once; tends to 3 as ``m`` grows."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if not C:
        raise ValueError("need at least one derivative bound")
    best = min(q + (4.0 * c / math.pi * 2.0 ** -m / (q * eps)) ** (1.0 / q)
               for q, c in enumerate(C, start=1))
    return 1 + math.ceil(best)


def uniform_rank_bound(spec: Bandlimited, eps: float, max_level: int = 64) -> int:
    """Depth-independent rank bound ``max_m min(2^m, rank_bound(spec, m, eps))``.

    Of order ``sqrt(omega)`` plus a logarithmic term in ``mu / eps``.
    """
    if not isinstance(spec, Bandlimited):
        raise TypeError("uniform bound needs a bandlimited spec")
    return max(min(2 ** m, rank_bound(spec, m, eps)) for m in range(1, max_level + 1))


def _as_callable(f):
    # the measurement uses many one-off points; skip the oracle cache
    return f.fn if isinstance(f, FunctionOracle) else f


def measure_interp_error(f, m: int, N: int, u_samples: int = 256, v_samples: int = 256) -> float:
    """Sampled estimate of ``E_{m,N}[f]``.

    Maximizes ``|f(u + 2^-m v) - sum_a f(u + 2^-m c[a]) P^a(v)|`` over
    ``u_samples`` equispaced offsets ``u`` in ``[0, 1 - 2^-m]`` and
    ``v_samples`` Chebyshev-distributed ``v`` in [0, 1], endpoints included.
    Being a maximum over finitely many points, it never exceeds the true
    supremum.
    """
    if u_samples < 64 or v_samples < 64:
        raise ValueError("need at least 64 samples in each of u and v")
    if m < 0:
        raise ValueError("m must be >= 0")
    fn = _as_callable(f)
    sys = ChebSystem(N)
    h = 2.0 ** -m
    u = np.linspace(0.0, 1.0 - h, u_samples) if m > 0 else np.zeros(1)
    k = np.arange(v_samples - 2)
    v = np.concatenate([[0.0, 1.0], (1.0 - np.cos(np.pi * (k + 0.5) / (v_samples - 2))) / 2.0])
    P = sys.cardinal_matrix(v)
    node_vals = np.asarray(fn((u[:, None] + h * sys.nodes[None, :]).ravel()), dtype=float)
    node_vals = node_vals.reshape(len(u), N + 1)
    exact = np.asarray(fn((u[:, None] + h * v[None, :]).ravel()), dtype=float).reshape(len(u), len(v))
    return float(np.max(np.abs(node_vals @ P.T - exact)))
