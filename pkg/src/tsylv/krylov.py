"""Global Krylov methods (tArnoldi, tFOM, tGMRES) for ``M(X) = A * X + sign * X * B``.

The operator only has to be a linear callable on tensors of one fixed
shape; :class:`SylvesterOperator` is the one used throughout.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, MaxRestartsExceeded, SingularProjection, ZeroSeed
from .report import SolveReport
from .tensor import _backward, _forward, _full, as_tensor3, basis_combine, fro_norm, inner

BREAKDOWN_RTOL = 1e-12
SINGULAR_RTOL = 1e-14
# a restart that reduces the residual by less than this fraction made no progress
STAGNATION_RTOL = 1e-10


class SylvesterOperator:
    """``x -> a * x + sign * x * b`` with the spectra of ``a`` and ``b`` cached."""

    def __init__(self, a, b, sign=1):
        a, b = as_tensor3(a), as_tensor3(b)
        if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1] or a.shape[2] != b.shape[2]:
            raise DimensionMismatch(f"incompatible coefficients {a.shape} and {b.shape}")
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        self.a, self.b, self.sign = a, b, sign
        self.shape = (a.shape[0], b.shape[0], a.shape[2])
        self.full = _full(a, b)
        self._a_hat = _forward(a, self.full)
        self._b_hat = _forward(b, self.full)

    def __call__(self, x):
        x = as_tensor3(x)
        if x.shape != self.shape:
            raise DimensionMismatch(f"operator acts on {self.shape}, got {x.shape}")
        full = self.full or np.iscomplexobj(x)
        if full and not self.full:
            return SylvesterOperator(self.a.astype(complex), self.b, self.sign)(x)
        xh = _forward(x, full)
        return _backward(self._a_hat @ xh + self.sign * (xh @ self._b_hat), self.shape[2], full)


@dataclass
class GlobalArnoldiState:
    """Orthonormal basis ``V_1..V_k(+1)`` and the ``(k+1) x k`` Hessenberg matrix.

    After a lucky breakdown ``breakdown`` is set, ``h[k, k-1] == 0`` and the
    basis holds only ``k`` tensors.
    """

    basis: list
    h: np.ndarray
    beta: float
    breakdown: bool = False

    @property
    def steps(self):
        return self.h.shape[1]


def _arnoldi_steps(op, seed, m):
    """Run tArnoldi, yielding the state after every step."""
    if m < 1:
        raise ValueError("m must be at least 1")
    beta = fro_norm(seed)
    if beta == 0.0 or not math.isfinite(beta):
        raise ZeroSeed(f"cannot start Arnoldi from a seed of norm {beta}")
    basis = [seed / beta]
    h = np.zeros((m + 1, m))
    for j in range(m):
        w = op(basis[j])
        scale = fro_norm(w)
        for i in range(j + 1):
            h[i, j] = inner(basis[i], w).real
            w = w - h[i, j] * basis[i]
        # second sweep restores orthogonality lost to cancellation
        for i in range(j + 1):
            d = inner(basis[i], w).real
            h[i, j] += d
            w = w - d * basis[i]
        h[j + 1, j] = fro_norm(w)
        if h[j + 1, j] <= BREAKDOWN_RTOL * scale:
            h[j + 1, j] = 0.0
            yield GlobalArnoldiState(basis[:], h[:j + 2, :j + 1].copy(), beta, True)
            return
        basis.append(w / h[j + 1, j])
        yield GlobalArnoldiState(basis[:], h[:j + 2, :j + 1].copy(), beta, False)


def t_arnoldi(op, seed, m) -> GlobalArnoldiState:
    """``m`` steps of tArnoldi (stops early on a lucky breakdown)."""
    state = None
    for state in _arnoldi_steps(op, as_tensor3(seed), m):
        pass
    return state


class GivensLeastSquares:
    """Incremental QR of a growing Hessenberg matrix by plane rotations.

    Solves ``min_y ||beta e_1 - H y||_2`` column by column; after each new
    column ``residual`` is the current minimum, ``|gamma_last|``.
    """

    def __init__(self, beta, m):
        self.u = np.zeros((m + 1, m))
        self.g = np.zeros(m + 1)
        self.g[0] = beta
        self.rotations = []

    @property
    def k(self):
        return len(self.rotations)

    @property
    def gamma_last(self):
        return self.g[self.k]

    @property
    def residual(self):
        return abs(self.gamma_last)

    def add_column(self, col):
        k = self.k
        h = np.array(col[:k + 2], dtype=float)
        for i, (c, s) in enumerate(self.rotations):
            h[i], h[i + 1] = c * h[i] + s * h[i + 1], -s * h[i] + c * h[i + 1]
        r = math.hypot(h[k], h[k + 1])
        c, s = (1.0, 0.0) if r == 0.0 else (h[k] / r, h[k + 1] / r)
        h[k], h[k + 1] = r, 0.0
        self.g[k], self.g[k + 1] = c * self.g[k], -s * self.g[k]
        self.u[:k + 2, k] = h
        self.rotations.append((c, s))
        return self.residual

    def solve(self):
        k = self.k
        return scipy.linalg.solve_triangular(self.u[:k, :k], self.g[:k])

    def q(self):
        """Orthogonal ``(k+1) x (k+1)`` factor with ``H = q @ u``."""
        k = self.k
        qt = np.eye(k + 1)
        for i, (c, s) in enumerate(self.rotations):
            qt[[i, i + 1]] = c * qt[i] + s * qt[i + 1], -s * qt[i] + c * qt[i + 1]
        return qt.T

    def factors(self):
        k = self.k
        return self.q(), self.u[:k + 1, :k]


def _fom_solve(state):
    k = state.steps
    hk = state.h[:k, :k]
    sv = np.linalg.svd(hk, compute_uv=False)
    if sv[-1] <= SINGULAR_RTOL * sv[0]:
        return None
    rhs = np.zeros(k)
    rhs[0] = state.beta
    return np.linalg.solve(hk, rhs)


@dataclass
class _Cycle:
    update: np.ndarray
    estimate: float
    history: list
    state: GlobalArnoldiState
    y: np.ndarray


def _global_cycle(op, r0, m, method, tol=None):
    if method not in ("tfom", "tgmres"):
        raise ValueError(f"unknown method {method!r}")
    history = []
    lsq = None
    state = None
    for state in _arnoldi_steps(op, r0, m):
        k = state.steps
        if method == "tgmres":
            if lsq is None:
                lsq = GivensLeastSquares(state.beta, m)
            est = lsq.add_column(state.h[:, k - 1])
        else:
            y = _fom_solve(state)
            est = math.inf if y is None else state.h[k, k - 1] * abs(y[-1])
        history.append(est)
        if state.breakdown or (tol is not None and est < tol):
            break
    if method == "tgmres":
        y = lsq.solve()
    else:
        y = _fom_solve(state)
        if y is None:
            raise SingularProjection(f"H_{state.steps} is singular to working precision")
    update = basis_combine(state.basis[:state.steps], y)
    return _Cycle(update, history[-1], history, state, y)


def tfom_cycle(op, r0, m):
    """One tFOM cycle: returns ``(update, residual_estimate)``.

    ``update = V_m (*) y`` with ``H_m y = ||r0|| e_1``; the estimate is
    ``h_{m+1,m} |y_m|``.
    """
    cyc = _global_cycle(op, as_tensor3(r0), m, "tfom")
    return cyc.update, cyc.estimate


def tgmres_cycle(op, r0, m):
    """One tGMRES cycle: returns ``(update, residual_estimate)``.

    ``y`` minimizes ``||beta e_1 - H~_m y||_2``; the estimate is ``|gamma_{m+1}|``.
    """
    cyc = _global_cycle(op, as_tensor3(r0), m, "tgmres")
    return cyc.update, cyc.estimate


def _note_progress(report, stalled):
    res = report.explicit_residuals
    if len(res) >= 2 and not res[-1] < res[-2] * (1.0 - STAGNATION_RTOL):
        stalled += 1
        if stalled == 2 and not any(w.startswith("stagnation") for w in report.warnings):
            report.warnings.append(f"stagnation: no decrease over restarts {report.restarts - 1}-{report.restarts}")
    else:
        stalled = 0
    return stalled


def restarted_solve(op, c, x0=None, m=10, tol=1e-6, max_restarts=100, method="tgmres"):
    """Restarted tFOM / tGMRES for ``op(x) = c``.

    Inner iterations stop as soon as the cheap estimate drops below ``tol``;
    convergence itself is always decided on the explicitly recomputed
    residual.  Returns ``(x, report)``; raises :class:`MaxRestartsExceeded`
    (carrying the last iterate and the report) when the budget runs out.
    """
    t0 = time.perf_counter()
    c = as_tensor3(c)
    x = np.zeros_like(c) if x0 is None else as_tensor3(x0).astype(c.dtype, copy=True)
    if x.shape != c.shape:
        raise DimensionMismatch(f"x0 {x.shape} does not match c {c.shape}")
    n, s, n3 = c.shape
    report = SolveReport(method, n, s, n3, m, tol)
    r = c - op(x)
    report.explicit_residuals.append(fro_norm(r))
    stalled = 0
    while report.explicit_residuals[-1] >= tol and report.restarts < max_restarts:
        if not math.isfinite(report.explicit_residuals[-1]):
            report.warnings.append("diverged: non-finite residual")
            break
        cyc = _global_cycle(op, r, m, method, tol)
        x = x + cyc.update
        r = c - op(x)
        report.restarts += 1
        report.iterations += len(cyc.history)
        report.residual_history.extend(cyc.history)
        report.restart_estimates.append(cyc.estimate)
        report.explicit_residuals.append(fro_norm(r))
        stalled = _note_progress(report, stalled)
    report.converged = report.explicit_residuals[-1] < tol
    report.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    if not report.converged:
        raise MaxRestartsExceeded(
            f"{method}: residual {report.final_residual:.3e} after {report.restarts} restarts", x, report
        )
    return x, report
