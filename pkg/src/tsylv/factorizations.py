"""Direct solvers: t-Schur, Tubal-QR, triangular Sylvester solves, t-Bartels-Stewart.

All factorizations are computed slice-wise in the Fourier domain and folded
back.  By default every spectral slice gets a complex (unitary) Schur form,
so the triangular factor is genuinely upper triangular slice by slice; the
folded factors of a real tensor are then complex in general.  ``real=True``
instead uses a real Schur form on the slices that are their own conjugate
(``k = 0`` and, for even ``n3``, ``k = n3/2``), which keeps the folded
factors real at the price of 2x2 bumps in those slices.  The triangular
solvers accept both shapes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, DimensionMismatch, SingularPencil, SingularTube
from .tensor import TUBE_RTOL, _backward, _forward, _full, as_tensor3, self_conjugate_slices

SUBDIAG_RTOL = 1e-12
PIVOT_RTOL = 1e-13


@dataclass
class SchurFactors:
    """``a = u * r * u^T`` with ``u`` unitary and ``r`` (quasi-)triangular per Fourier slice.

    ``u_hat`` and ``r_hat`` hold the spectral slices the factors were
    computed on: all ``n3`` of them when ``full`` is set, otherwise the
    ``n3 // 2 + 1`` independent ones of a real input.
    """

    u: np.ndarray
    r: np.ndarray
    u_hat: np.ndarray = field(repr=False, default=None)
    r_hat: np.ndarray = field(repr=False, default=None)
    full: bool = field(repr=False, default=False)


@dataclass
class TubalQRFactors:
    q: np.ndarray
    r: np.ndarray


def _schur_spectral(a, full, real=False):
    n3 = a.shape[2]
    hat = _forward(a, full)
    real_slices = set(self_conjugate_slices(n3)) if real and not full else set()
    u_hat = np.empty_like(hat)
    r_hat = np.empty_like(hat)
    for k in range(hat.shape[0]):
        try:
            if k in real_slices:
                t, z = scipy.linalg.schur(hat[k].real, output="real")
            else:
                t, z = scipy.linalg.schur(hat[k], output="complex")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise ConvergenceFailure(f"Schur iteration failed on slice {k}: {exc}", slice_index=k) from exc
        u_hat[k], r_hat[k] = z, t
    return u_hat, r_hat


def _fold_factor(hat, n3, full, real):
    if full or real:
        return _backward(hat, n3, full)
    # the independent half does not determine a complex factor; mirror it
    mirrored = np.conj(hat[1:(n3 + 1) // 2][::-1])
    return np.fft.ifft(np.concatenate([hat, mirrored]).transpose(1, 2, 0), axis=2)


def t_schur(a, *, real=False, _full_spectrum=None) -> SchurFactors:
    """t-Schur decomposition of a square tensor via per-slice Schur forms.

    Parameters
    ----------
    a : ndarray, shape (n, n, n3)
    real : bool
        Use real Schur forms on the self-conjugate slices of a real ``a`` so
        that ``u`` and ``r`` are real tensors (``r`` then only
        quasi-triangular in those slices).
    """
    a = as_tensor3(a)
    n, n_, n3 = a.shape
    if n != n_:
        raise DimensionMismatch(f"t_schur needs square frontal slices, got {a.shape}")
    full = _full(a) if _full_spectrum is None else _full_spectrum
    u_hat, r_hat = _schur_spectral(a, full, real)
    return SchurFactors(
        _fold_factor(u_hat, n3, full, real), _fold_factor(r_hat, n3, full, real), u_hat, r_hat, full
    )


def tubal_qr(a, scale=None) -> TubalQRFactors:
    """Tubal-QR: ``a = q * r`` with orthonormal tensor columns and tube-triangular ``r``.

    Gram-Schmidt over lateral slices; each tube coefficient
    ``r[i, j, :] = q_i^T * w`` and each normalization is carried out per
    Fourier slice, where they reduce to vector operations.  The sweep
    is run twice per column to keep ``q`` orthonormal to working precision.

    ``scale`` raises the reference norm for the rank-deficiency test, which
    otherwise is the column's own largest slice norm.
    """
    a = as_tensor3(a)
    n1, m, n3 = a.shape
    if m > n1:
        raise DimensionMismatch(f"tubal_qr needs m <= n1, got {a.shape}")
    full = _full(a)
    ah = _forward(a, full)
    qh = np.zeros_like(ah)
    rh = np.zeros((ah.shape[0], m, m), dtype=ah.dtype)
    for j in range(m):
        w = ah[:, :, j].copy()
        ref = float(np.linalg.norm(w, axis=1).max())
        if scale is not None:
            ref = max(ref, float(scale))
        if j:
            basis = qh[:, :, :j]
            for _ in range(2):
                coeff = np.einsum("kni,kn->ki", basis.conj(), w)
                w -= np.einsum("kni,ki->kn", basis, coeff)
                rh[:, :j, j] += coeff
        norms = np.linalg.norm(w, axis=1)
        tau = TUBE_RTOL * max(1.0, ref)
        if np.any(norms <= tau):
            raise SingularTube(f"lateral slice {j} is (numerically) dependent on the previous ones", column=j)
        qh[:, :, j] = w / norms[:, None]
        rh[:, j, j] = norms
    return TubalQRFactors(_backward(qh, n3, full), _backward(rh, n3, full))


# ---------------------------------------------------------------------------
# triangular Sylvester solve, one Fourier slice at a time
# ---------------------------------------------------------------------------


def _diag_blocks(t):
    """Split a quasi-triangular matrix into 1x1 / 2x2 diagonal blocks."""
    n = t.shape[0]
    tol = SUBDIAG_RTOL * np.linalg.norm(t)
    blocks, i = [], 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > tol:
            blocks.append((i, 2))
            i += 2
        else:
            blocks.append((i, 1))
            i += 1
    return blocks


def _shifted_quasi_solve(t, blocks, sigma, rhs, pivtol, k):
    """Back substitution for ``(t + sigma I) y = rhs``; ``t`` quasi upper triangular."""
    y = np.zeros(rhs.shape, dtype=np.result_type(t, sigma, rhs))
    for i, size in reversed(blocks):
        rows = slice(i, i + size)
        b = rhs[rows] - t[rows, i + size:] @ y[i + size:]
        d = t[rows, rows] + sigma * np.eye(size)
        if size == 1:
            if abs(d[0, 0]) <= pivtol:
                raise SingularPencil(f"spectra intersect in slice {k} (pivot {abs(d[0, 0]):.3e})", slice_index=k)
            y[rows] = b / d[0, 0]
        else:
            if np.linalg.svd(d, compute_uv=False)[-1] <= pivtol:
                raise SingularPencil(f"spectra intersect in slice {k}", slice_index=k)
            y[rows] = np.linalg.solve(d, b)
    return y


def _triangular_sylvester(ra, rb, c, sign, k=0):
    """Solve ``ra @ y + sign * y @ rb = c`` for quasi upper triangular ``ra``, ``rb``."""
    scale = np.linalg.norm(ra) + np.linalg.norm(rb)
    pivtol = PIVOT_RTOL * max(scale, np.finfo(float).tiny)
    blocks_a, blocks_b = _diag_blocks(ra), _diag_blocks(rb)
    y = np.zeros(c.shape, dtype=np.result_type(ra, rb, c))
    for j, size in blocks_b:
        cols = slice(j, j + size)
        rhs = c[:, cols] - sign * (y[:, :j] @ rb[:j, cols])
        if size == 1:
            y[:, j] = _shifted_quasi_solve(ra, blocks_a, sign * rb[j, j], rhs[:, 0], pivtol, k)
            continue
        # 2x2 bump: decouple the two columns through the block's eigenvectors
        evals, vecs = np.linalg.eig(rb[cols, cols])
        rw = rhs @ vecs
        z = np.column_stack([
            _shifted_quasi_solve(ra, blocks_a, sign * evals[i], rw[:, i], pivtol, k) for i in range(2)
        ])
        block = z @ np.linalg.inv(vecs)
        y[:, cols] = block if np.iscomplexobj(y) else block.real
    return y


def _check_sylvester(a, b, c):
    if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
        raise DimensionMismatch(f"coefficients must be square, got {a.shape} and {b.shape}")
    if c.shape != (a.shape[0], b.shape[0], a.shape[2]) or b.shape[2] != a.shape[2]:
        raise DimensionMismatch(f"right-hand side {c.shape} does not match {a.shape} / {b.shape}")


def t_back_substitution(r_a, r_b, c, sign=1) -> np.ndarray:
    """Solve ``r_a * y + sign * y * r_b = c`` for Fourier-slice (quasi-)triangular ``r_a``, ``r_b``."""
    r_a, r_b, c = as_tensor3(r_a), as_tensor3(r_b), as_tensor3(c)
    _check_sylvester(r_a, r_b, c)
    full = _full(r_a, r_b, c)
    ra, rb, ch = _forward(r_a, full), _forward(r_b, full), _forward(c, full)
    y = np.stack([_triangular_sylvester(ra[k], rb[k], ch[k], sign, k) for k in range(ch.shape[0])])
    return _backward(y, c.shape[2], full)


def t_bartels_stewart(a, b, c, sign=1, *, schur_a=None, schur_b=None) -> np.ndarray:
    """Direct solve of ``a * x + sign * x * b = c``.

    Both coefficients are brought to t-Schur form, the transformed
    right-hand side ``u_a^T * c * u_b`` is solved by back substitution and
    the solution is rotated back, ``x = u_a * y * u_b^T``.  Pre-computed
    factors (e.g. of a ``b`` that is reused across calls) may be passed in.
    """
    a, b, c = as_tensor3(a), as_tensor3(b), as_tensor3(c)
    _check_sylvester(a, b, c)
    full = _full(a, b, c)
    fa = schur_a if schur_a is not None and schur_a.full == full else t_schur(a, _full_spectrum=full)
    fb = schur_b if schur_b is not None and schur_b.full == full else t_schur(b, _full_spectrum=full)
    ua, ub = fa.u_hat, fb.u_hat
    c1 = np.conj(ua.transpose(0, 2, 1)) @ _forward(c, full) @ ub
    y = np.stack([
        _triangular_sylvester(fa.r_hat[k], fb.r_hat[k], c1[k], sign, k) for k in range(c1.shape[0])
    ])
    return _backward(ua @ y @ np.conj(ub.transpose(0, 2, 1)), c.shape[2], full)
