"""Benchmark problems and a portable pseudo-random stream.

Random numbers come from SplitMix64, evaluated in closed form for a whole
block of counters at once, so the stream is identical on every platform and
independent of numpy's generator versions.  Value ``i`` (0-based) of the
stream for ``seed`` is ``mix(seed + (i + 1) * 0x9E3779B97F4A7C15)``; uniform
doubles in ``[0, 1)`` take its top 53 bits.  Seed 0 starts with
``0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .errors import DimensionTooSmall
from .tensor import identity
from .io import read_tt3d

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

# the benchmark's right-hand side has only three columns, so q may be as
# small as the convection stencil (three nonzero diagonals from the main one)
MIN_N = 5
MIN_Q = 3


def splitmix64(seed, count, start=0) -> np.ndarray:
    """``count`` consecutive SplitMix64 outputs as ``uint64``."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed % 2**64) + idx * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def uniform(seed, count, start=0) -> np.ndarray:
    """Doubles in ``[0, 1)`` from the SplitMix64 stream."""
    return (splitmix64(seed, count, start) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def random_tensor(seed, shape, start=0) -> np.ndarray:
    """Uniform ``[0, 1)`` tensor filled in file (column-major, slice-major) order."""
    count = int(np.prod(shape))
    return uniform(seed, count, start).reshape(shape, order="F")


@dataclass
class ProblemConfig:
    n: int = 1000
    q: int = 3
    n3: int = 2
    m: int = 10
    tol: float = 1e-6
    max_restarts: int = 100
    mu: float = 1.0
    seed: int = 0
    problem: str = "convdiff"
    sign: int = -1
    a_path: str | None = None
    b_path: str | None = None
    c_path: str | None = None

    def __post_init__(self):
        for name in ("n", "q", "n3", "m"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.problem not in ("convdiff", "random", "file"):
            raise ValueError(f"unknown problem kind {self.problem!r}")


def _diffusion(n):
    return scipy.sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n))


def _convection(n):
    # rows are truncated at the boundaries: first row 3, -5, 1 and last row 1, 3
    return scipy.sparse.diags([1.0, 3.0, -5.0, 1.0], [-1, 0, 1, 2], shape=(n, n))


def convdiff_coefficient(size, n3, mu, offset):
    """Stack of ``mu/h^2 * diffusion + (offset + i)/(4h) * convection`` for ``i = 1..n3``."""
    h = 1.0 / (size + 1)
    diff = (mu / h**2) * _diffusion(size).toarray()
    conv = _convection(size).toarray() / (4.0 * h)
    return np.stack([diff + (offset + i) * conv for i in range(1, n3 + 1)], axis=2)


def gen_convdiff(cfg: ProblemConfig):
    """Finite-difference convection-diffusion coefficients and a random right-hand side."""
    if cfg.n < MIN_N or cfg.q < MIN_Q:
        raise DimensionTooSmall(f"stencil needs n >= {MIN_N} and q >= {MIN_Q}, got n={cfg.n}, q={cfg.q}")
    a = convdiff_coefficient(cfg.n, cfg.n3, cfg.mu, 0)
    b = convdiff_coefficient(cfg.q, cfg.n3, cfg.mu, cfg.n3)
    c = random_tensor(cfg.seed, (cfg.n, cfg.q, cfg.n3))
    return a, b, c


def gen_random(cfg: ProblemConfig):
    """Uniform ``[-1, 1]`` coefficients shifted by ``n * I`` and ``q * I``, plus ``c``.

    The shift is applied with the identity tensor, which moves every
    Fourier slice (shifting the diagonal of each frontal slice would move
    only the zero-frequency one).
    """
    n, q, n3 = cfg.n, cfg.q, cfg.n3
    na, nb = n * n * n3, q * q * n3
    a = 2.0 * random_tensor(cfg.seed, (n, n, n3)) - 1.0 + n * identity(n, n3)
    b = 2.0 * random_tensor(cfg.seed, (q, q, n3), start=na) - 1.0 + q * identity(q, n3)
    c = 2.0 * random_tensor(cfg.seed, (n, q, n3), start=na + nb) - 1.0
    return a, b, c


def load_problem(cfg: ProblemConfig):
    if cfg.problem == "convdiff":
        return gen_convdiff(cfg)
    if cfg.problem == "random":
        return gen_random(cfg)
    if not (cfg.a_path and cfg.b_path and cfg.c_path):
        raise ValueError("file problems need a, b and c paths")
    return read_tt3d(cfg.a_path), read_tt3d(cfg.b_path), read_tt3d(cfg.c_path)
