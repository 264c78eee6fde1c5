"""Registry of closed-form test functions on [0, 1]^d."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import Bandlimited, SmoothnessSpec


@dataclass(frozen=True)
class RegisteredFunction:
    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    spec: SmoothnessSpec | None = None


def random_trig_coefficients(J: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Standard normal ``a_j`` then ``b_j`` from numpy's PCG64 generator."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(J)
    b = rng.standard_normal(J)
    return a, b


def random_trig_series(J: int, seed: int, chunk: int = 2048) -> Callable[[np.ndarray], np.ndarray]:
    """``sum_j a_j cos(2 pi j x) + b_j sin(2 pi j x)`` with normal coefficients."""
    a, b = random_trig_coefficients(J, seed)
    freqs = 2.0 * np.pi * np.arange(1, J + 1)

    def f(x):
        x = np.asarray(x, dtype=float).reshape(-1)
        out = np.empty_like(x)
        for s in range(0, len(x), chunk):
            ph = np.outer(x[s:s + chunk], freqs)
            out[s:s + chunk] = np.cos(ph) @ a + np.sin(ph) @ b
        return out

    return f


def peak(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    """``alpha / sqrt(alpha^2 + (x - 1/2)^2)``, sharply peaked at 1/2."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    return lambda x: alpha / np.sqrt(alpha ** 2 + (np.asarray(x) - 0.5) ** 2)


def gaussian(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    """``exp(-(x / alpha)^2 / 2)``, concentrated near the left endpoint."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    return lambda x: np.exp(-0.5 * (np.asarray(x) / alpha) ** 2)


def cos_sin(omega: float) -> Callable[[np.ndarray], np.ndarray]:
    """``cos(2 pi omega x) + sin(2 pi omega x)``."""
    w = 2.0 * np.pi * omega
    return lambda x: np.cos(w * np.asarray(x)) + np.sin(w * np.asarray(x))


def bivariate_bump(p: np.ndarray) -> np.ndarray:
    """``1 / (1 + 100 |p - (1/2, 1/2)|^2)``."""
    p = np.asarray(p, dtype=float)
    return 1.0 / (1.0 + 100.0 * ((p[:, 0] - 0.5) ** 2 + (p[:, 1] - 0.5) ** 2))


_FIXED: dict[str, RegisteredFunction] = {
    "const": RegisteredFunction("const", 1, lambda x: np.ones_like(np.asarray(x, dtype=float)),
                                Bandlimited(0.0, 2.0 * np.pi)),
    "x": RegisteredFunction("x", 1, lambda x: np.asarray(x, dtype=float)),
    "x2": RegisteredFunction("x2", 1, lambda x: np.asarray(x, dtype=float) ** 2),
    "x3": RegisteredFunction("x3", 1, lambda x: np.asarray(x, dtype=float) ** 3),
    "cheb3": RegisteredFunction("cheb3", 1, lambda x: 4 * np.asarray(x, dtype=float) ** 3 - 3 * np.asarray(x)),
    "sqrt": RegisteredFunction("sqrt", 1, lambda x: np.sqrt(np.asarray(x, dtype=float))),
    "exp": RegisteredFunction("exp", 1, lambda x: np.exp(np.asarray(x, dtype=float))),
    "bivariate": RegisteredFunction("bivariate", 2, bivariate_bump),
    "sum_xy": RegisteredFunction("sum_xy", 2, lambda p: np.asarray(p)[:, 0] + np.asarray(p)[:, 1]),
    "separable": RegisteredFunction(
        "separable", 2, lambda p: np.exp(np.asarray(p)[:, 0]) * np.cos(3 * np.asarray(p)[:, 1])),
}


def get_function(name: str, *, J: int = 25, seed: int | None = None, alpha: float = 0.1,
                 omega: float = 8.0) -> RegisteredFunction:
    """Look up a function by name; parametrized families take keyword args.

    ``oscil`` (random trig series, needs ``seed``), ``peak`` and ``gaussian``
    (use ``alpha``), ``cos`` and ``cos_sin`` (use ``omega`` in cycles per unit).
    """
    if name in _FIXED:
        return _FIXED[name]
    if name == "oscil":
        if seed is None:
            raise ValueError("oscil needs an explicit seed")
        return RegisteredFunction(name, 1, random_trig_series(J, seed))
    if name == "peak":
        return RegisteredFunction(name, 1, peak(alpha))
    if name == "gaussian":
        return RegisteredFunction(name, 1, gaussian(alpha))
    if name == "cos":
        w = 2.0 * np.pi * omega
        return RegisteredFunction(name, 1, lambda x: np.cos(w * np.asarray(x)), Bandlimited(w, 2.0 * np.pi))
    if name == "cos_sin":
        w = 2.0 * np.pi * omega
        return RegisteredFunction(name, 1, cos_sin(omega), Bandlimited(w, 2.0 * np.pi * np.sqrt(2.0)))
    raise KeyError(f"unknown function {name!r}; known: {', '.join(function_names())}")


def function_names() -> list[str]:
    return sorted(list(_FIXED) + ["oscil", "peak", "gaussian", "cos", "cos_sin"])
