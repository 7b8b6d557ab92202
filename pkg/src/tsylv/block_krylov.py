"""Tubal Block Arnoldi and the restarted block solver TBAS(m).

The large equation ``A * X + sign * X * B = C`` (``X`` is ``n x q x n3``
with small ``q``) is projected onto the block Krylov space generated by the
residual.  The projected equation ``H_m * Y + sign * Y * B = C_1`` is small
and solved directly by :func:`t_bartels_stewart`.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import BlockBreakdown, DimensionMismatch, MaxRestartsExceeded, SingularTube
from .factorizations import t_bartels_stewart, t_schur, tubal_qr
from .krylov import SylvesterOperator, _note_progress
from .report import SolveReport
from .tensor import TProduct, _backward, _forward, _full, as_tensor3, fro_norm, t_product, t_transpose


@dataclass
class BlockArnoldiState:
    """Blocks ``V_1..V_{steps+1}`` and tube-valued Hessenberg blocks ``H[i, j]``.

    ``hblocks`` maps 0-based ``(i, j)`` with ``i <= j + 1`` to ``s x s x n3``
    tensors.  When the process broke down the last block could not be
    normalized: ``vblocks`` then holds only ``steps`` blocks, ``H[steps,
    steps-1]`` is absent and ``remainder`` keeps the un-normalized block, so
    that ``A * V_m = V_m * H_m + remainder * E_m^T`` still holds.
    """

    vblocks: list
    hblocks: dict
    h0: np.ndarray
    s: int
    steps: int
    remainder: np.ndarray | None = field(default=None, repr=False)

    @property
    def n3(self):
        return self.h0.shape[2]

    @property
    def complete(self):
        return len(self.vblocks) == self.steps + 1

    def _assemble(self, rows, cols):
        s, n3 = self.s, self.n3
        dtype = np.result_type(*self.hblocks.values())
        out = np.zeros((rows * s, cols * s, n3), dtype=dtype)
        for (i, j), blk in self.hblocks.items():
            if i < rows and j < cols:
                out[i * s:(i + 1) * s, j * s:(j + 1) * s] = blk
        return out

    def h_m(self):
        """Square block Hessenberg tensor ``H_m`` (``ms x ms x n3``)."""
        return self._assemble(self.steps, self.steps)

    def h_m1(self):
        """Rectangular ``H_{m+1}`` (``(m+1)s x ms x n3``); needs a complete state."""
        return self._assemble(self.steps + 1, self.steps)

    def v_m(self):
        return np.concatenate(self.vblocks[:self.steps], axis=1)

    def v_m1(self):
        return np.concatenate(self.vblocks, axis=1)

    def last_coupling(self):
        """``V_{m+1} * H_{m+1,m}``, or the raw remainder after a breakdown."""
        if self.remainder is not None:
            return self.remainder
        m = self.steps
        return t_product(self.vblocks[m], self.hblocks[(m, m - 1)])


def _tba_steps(aop, v, m):
    """Run Tubal Block Arnoldi, yielding a state after every step."""
    if m < 1:
        raise ValueError("m must be at least 1")
    n, s, n3 = v.shape
    if s > n:
        raise DimensionMismatch(f"block width {s} exceeds n = {n}")
    # factor the unit-norm seed so the rank test does not depend on its scale
    vnorm = fro_norm(v)
    try:
        if vnorm == 0.0:
            raise SingularTube("seed block is zero", column=0)
        qr = tubal_qr(v / vnorm)
    except SingularTube as exc:
        raise BlockBreakdown(f"seed block is rank deficient ({exc})", step=1) from exc
    vblocks = [qr.q]
    h0 = vnorm * qr.r
    hblocks = {}
    for j in range(m):
        w = aop(vblocks[j])
        scale = fro_norm(w)
        for i in range(j + 1):
            hblocks[(i, j)] = t_product(t_transpose(vblocks[i]), w)
            w = w - t_product(vblocks[i], hblocks[(i, j)])
        # second sweep, as in the global process
        for i in range(j + 1):
            d = t_product(t_transpose(vblocks[i]), w)
            hblocks[(i, j)] = hblocks[(i, j)] + d
            w = w - t_product(vblocks[i], d)
        try:
            qr = tubal_qr(w, scale=scale)
        except SingularTube as exc:
            state = BlockArnoldiState(vblocks[:], dict(hblocks), h0, s, j + 1, remainder=w)
            raise BlockBreakdown(
                f"block {j + 2} is rank deficient ({exc})", step=j + 2, state=state, remainder=w
            ) from exc
        vblocks.append(qr.q)
        hblocks[(j + 1, j)] = qr.r
        yield BlockArnoldiState(vblocks[:], dict(hblocks), h0, s, j + 1)


def tubal_block_arnoldi(a, v, m) -> BlockArnoldiState:
    """``m`` steps of Tubal Block Arnoldi started from ``v`` (``n x s x n3``).

    ``a`` may be a tensor or a :class:`TProduct`.  Raises
    :class:`BlockBreakdown` when a block loses tubal rank.
    """
    aop = a if isinstance(a, TProduct) else TProduct(a)
    state = None
    for state in _tba_steps(aop, as_tensor3(v), m):
        pass
    return state


@dataclass
class _BlockCycle:
    update: np.ndarray
    estimate: float
    history: list
    state: BlockArnoldiState


def _projected_solve(state, b, r0, sign, schur_b):
    c1 = t_product(t_transpose(state.v_m()), r0)
    y = t_bartels_stewart(state.h_m(), b, c1, sign, schur_b=schur_b)
    s, m = state.s, state.steps
    y_last = y[(m - 1) * s:m * s]
    if state.remainder is not None:
        est = fro_norm(t_product(state.remainder, y_last))
    else:
        est = fro_norm(t_product(state.hblocks[(m, m - 1)], y_last))
    return y, est


def _tbas_cycle(aop, b, r0, m, sign, tol=None, schur_b=None):
    history = []
    steps = _tba_steps(aop, r0, m)
    while True:
        broke = False
        try:
            state = next(steps)
        except StopIteration:
            break
        except BlockBreakdown as exc:
            if exc.state is None:
                raise
            state, broke = exc.state, True
        y, est = _projected_solve(state, b, r0, sign, schur_b)
        history.append(est)
        if broke or (tol is not None and est < tol):
            break
    update = t_product(state.v_m(), y)
    return _BlockCycle(update, history[-1], history, state)


def tbas_cycle(a, b, r0, m, sign=1):
    """One TBAS cycle from residual ``r0``: returns ``(update, residual_estimate)``.

    The estimate is ``||H_{m+1,m} * Y_last||_F`` where ``Y_last`` is the last
    ``s``-row block of the projected solution.
    """
    aop = a if isinstance(a, TProduct) else TProduct(a)
    cyc = _tbas_cycle(aop, as_tensor3(b), as_tensor3(r0), m, sign)
    return cyc.update, cyc.estimate


def tbas_restarted(a, b, c, x0=None, m=10, tol=1e-6, max_restarts=100, sign=1):
    """Restarted TBAS(m) for ``a * x + sign * x * b = c``.

    Each cycle seeds the block Krylov space with the current residual (block
    width ``q``), stops early once the residual estimate is below ``tol``
    and updates ``x``; convergence is judged on the recomputed residual.
    The t-Schur factors of ``b`` are computed once and reused.
    """
    t0 = time.perf_counter()
    a, b, c = as_tensor3(a), as_tensor3(b), as_tensor3(c)
    op = SylvesterOperator(a, b, sign)
    if c.shape != op.shape:
        raise DimensionMismatch(f"right-hand side {c.shape} does not match {op.shape}")
    x = np.zeros_like(c) if x0 is None else as_tensor3(x0).astype(c.dtype, copy=True)
    aop = TProduct(a)
    schur_b = t_schur(b, _full_spectrum=_full(a, b, c))
    n, q, n3 = c.shape
    report = SolveReport("tbas", n, q, n3, m, tol, block_width=q)
    r = c - op(x)
    report.explicit_residuals.append(fro_norm(r))
    stalled = 0
    while report.explicit_residuals[-1] >= tol and report.restarts < max_restarts:
        if not math.isfinite(report.explicit_residuals[-1]):
            report.warnings.append("diverged: non-finite residual")
            break
        cyc = _tbas_cycle(aop, b, r, m, sign, tol, schur_b)
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
            f"tbas: residual {report.final_residual:.3e} after {report.restarts} restarts", x, report
        )
    return x, report


def bas_solve(a, b, c, x0=None, m=10, tol=1e-6, max_restarts=100, sign=1):
    """Baseline: restarted block Arnoldi on every Fourier slice separately.

    Each independent spectral slice ``(A_k, B_k, C_k)`` is a complex matrix
    Sylvester equation solved by the ``n3 = 1`` specialization of
    :func:`tbas_restarted` with tolerance ``tol``, which bounds the folded
    residual by ``tol`` as well.  Reported iterations and restarts are the
    maxima over slices.
    """
    t0 = time.perf_counter()
    a, b, c = as_tensor3(a), as_tensor3(b), as_tensor3(c)
    op = SylvesterOperator(a, b, sign)
    if c.shape != op.shape:
        raise DimensionMismatch(f"right-hand side {c.shape} does not match {op.shape}")
    n, q, n3 = c.shape
    full = _full(a, b, c)
    ah, bh, ch = _forward(a, full), _forward(b, full), _forward(c, full)
    xh = np.zeros_like(ch) if x0 is None else _forward(as_tensor3(x0), full).copy()
    report = SolveReport("bas", n, q, n3, m, tol, block_width=q)
    report.explicit_residuals.append(fro_norm(c - op(_backward(xh, n3, full))))
    failed = []
    for k in range(ch.shape[0]):
        try:
            xk, rep = tbas_restarted(ah[k], bh[k], ch[k], xh[k], m, tol, max_restarts, sign)
        except MaxRestartsExceeded as exc:
            xk, rep = exc.x, exc.report
            failed.append(k)
        xh[k] = xk[:, :, 0]
        report.iterations = max(report.iterations, rep.iterations)
        report.restarts = max(report.restarts, rep.restarts)
        report.warnings.extend(f"slice {k}: {w}" for w in rep.warnings)
    x = _backward(xh, n3, full)
    report.explicit_residuals.append(fro_norm(c - op(x)))
    report.converged = not failed and report.explicit_residuals[-1] < tol
    report.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    if not report.converged:
        raise MaxRestartsExceeded(
            f"bas: residual {report.final_residual:.3e}, slices {failed} did not converge", x, report
        )
    return x, report
