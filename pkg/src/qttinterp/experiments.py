"""Reproducible numerical experiments with CSV output.

Every experiment is deterministic given its parameters and seed; the seed
drives both random test functions and the random dyadic points used for
sampled sup-norm errors. Output is one ``#`` header line with the experiment
name, seed and parameters, one ``#`` line naming the columns, then numeric
rows with floats printed to 17 significant digits.
"""

from __future__ import annotations

import io
import sys
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cheb import ChebSystem
from .construct import (TruncationPolicy, construct_basic, construct_multires,
                        construct_multivariate, construct_rank_revealing)
from .cores import DangerTree
from .evaluate import multivariate_sup_error, sup_error
from .functions import bivariate_bump, gaussian, peak, random_trig_series
from .invert import recover_grid
from .oracle import FunctionOracle

DEFAULTS: dict[str, dict] = {
    "oscillatory": {"J": 25, "N": [10, 20, 30, 40, 50, 60, 70, 80, 90, 100], "K": 20},
    "oscillatory-scaling": {"J": [200, 300, 400, 500, 600], "K": 20},
    "peak-sparse": {"N": [250, 500, 1000, 2000, 3000], "C": [2.0, 4.0, 8.0], "M": 10, "K": 25,
                    "tol": 1e-12},
    "invert-depth": {"alpha": 0.1, "N": 300, "q": 1, "K": list(range(8, 17))},
    "gaussian-multires": {"N": [6, 10, 14, 18], "alpha": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
                          "K": 25},
    "bivariate-serial": {"N": [4, 8, 12, 16, 20, 24, 28, 32], "K": 10, "tol": 1e-10},
}

COLUMNS = {
    "oscillatory": ["N", "evaluations", "error"],
    "oscillatory-scaling": ["J", "N", "error"],
    "peak-sparse": ["C", "N", "alpha", "max_rank", "error"],
    "invert-depth": ["K", "error"],
    "gaussian-multires": ["N", "alpha", "error"],
    "bivariate-serial": ["N", "max_rank", "error"],
}


@dataclass
class ExperimentConfig:
    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.name not in DEFAULTS:
            raise ValueError(f"unknown experiment {self.name!r}; known: {', '.join(DEFAULTS)}")
        unknown = set(self.params) - set(DEFAULTS[self.name])
        if unknown:
            raise ValueError(f"experiment {self.name} does not take {sorted(unknown)}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def resolved(self) -> dict:
        return {**DEFAULTS[self.name], **self.params}


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple, np.ndarray)) else [v]


def _positive_ints(vals, what: str) -> list[int]:
    out = [int(v) for v in _as_list(vals)]
    if any(v < 1 for v in out):
        raise ValueError(f"{what} must be positive")
    return out


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _oscillatory(p, seed):
    K = int(p["K"])
    f = random_trig_series(int(p["J"]), seed)
    for N in _positive_ints(p["N"], "N"):
        oracle = FunctionOracle(f)
        tt, rep = construct_basic(oracle, ChebSystem(N), K)
        yield [N, rep.oracle_calls, sup_error(tt, f, seed=seed)]


def _oscillatory_scaling(p, seed):
    K = int(p["K"])
    for J in _positive_ints(p["J"], "J"):
        f = random_trig_series(J, seed)
        tt, _ = construct_basic(f, ChebSystem(2 * J), K)
        yield [J, 2 * J, sup_error(tt, f, seed=seed)]


def _peak_sparse(p, seed):
    K, M = int(p["K"]), int(p["M"])
    policy = TruncationPolicy(float(p["tol"]))
    for C in _as_list(p["C"]):
        for N in _positive_ints(p["N"], "N"):
            alpha = (float(C) / N) ** 2
            f = peak(alpha)
            t0 = time.perf_counter()
            tt, rep = construct_rank_revealing(f, ChebSystem(N), K, policy, sparse=True, M=M)
            _log(f"peak-sparse C={C} N={N}: built in {time.perf_counter() - t0:.3f} s")
            yield [float(C), N, alpha, max(tt.ranks), sup_error(tt, f, seed=seed)]


def _invert_depth(p, seed):
    N, q = int(p["N"]), int(p["q"])
    f = peak(float(p["alpha"]))
    sys_ = ChebSystem(N)
    target = f(sys_.nodes / 2.0)
    for K in _positive_ints(p["K"], "K"):
        tt, _ = construct_basic(f, sys_, K)
        samples = recover_grid(tt, sys_, q, 1)
        yield [K, float(np.max(np.abs(samples.row((0,)) - target)))]


def _gaussian_multires(p, seed):
    K = int(p["K"])
    danger = DangerTree.left_edge(K)
    for N in _positive_ints(p["N"], "N"):
        for a in _as_list(p["alpha"]):
            f = gaussian(float(a))
            tt, _ = construct_multires(f, ChebSystem(N), K, danger)
            yield [N, float(a), sup_error(tt, f, seed=seed)]


def _bivariate_serial(p, seed):
    K = int(p["K"])
    policy = TruncationPolicy(float(p["tol"]))
    for N in _positive_ints(p["N"], "N"):
        tt, _ = construct_multivariate(bivariate_bump, ChebSystem(N), 2, K, "serial", policy)
        err = multivariate_sup_error(tt, bivariate_bump, 2, K, "serial", seed=seed)
        yield [N, max(tt.ranks), err]


RUNNERS: dict[str, Callable] = {
    "oscillatory": _oscillatory,
    "oscillatory-scaling": _oscillatory_scaling,
    "peak-sparse": _peak_sparse,
    "invert-depth": _invert_depth,
    "gaussian-multires": _gaussian_multires,
    "bivariate-serial": _bivariate_serial,
}


def run_experiment(cfg: ExperimentConfig) -> list[list]:
    """Run ``cfg`` and return its numeric rows."""
    return list(RUNNERS[cfg.name](cfg.resolved(), cfg.seed))


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _fmt_param(v) -> str:
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    return _fmt(v)


def format_csv(cfg: ExperimentConfig, rows: list[list]) -> str:
    buf = io.StringIO()
    params = " ".join(f"{k}={_fmt_param(v)}" for k, v in sorted(cfg.resolved().items()))
    buf.write(f"# experiment={cfg.name} seed={cfg.seed} {params}\n")
    buf.write("# " + ",".join(COLUMNS[cfg.name]) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()
