"""Third-order tensors and the T-product algebra.

Dense tensors are plain ``numpy`` arrays of shape ``(n1, n2, n3)``; index
``[:, :, k]`` is the k-th frontal slice.  Flattening with ``order="F"``
gives the on-disk layout (column-major inside a slice, slice-major across
slices), so :func:`unfold` and the TT3D reader never need to shuffle data.

Everything fast happens in the Fourier domain along mode 3, where the
T-product decouples into independent matrix products.  For real tensors only
the ``n3 // 2 + 1`` independent spectral slices are ever formed (the rest are
complex conjugates); complex tensors use the full transform.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, SingularTube, SymmetryViolation

SYMMETRY_RTOL = 1e-12
TUBE_RTOL = 1e-13


def as_tensor3(t) -> np.ndarray:
    """Return ``t`` as a float (or complex) 3-way array, adding a unit mode 3 to matrices."""
    arr = np.asarray(t)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimensionMismatch(f"expected a third-order tensor, got ndim={arr.ndim}")
    if not np.iscomplexobj(arr):
        arr = arr.astype(np.float64, copy=False)
    return arr


def _full(*ts) -> bool:
    return any(np.iscomplexobj(t) for t in ts)


def _forward(t, full=False):
    """Spectral slices of ``t`` as an ``(K, n1, n2)`` complex array."""
    hat = np.fft.fft(t, axis=2) if full else np.fft.rfft(t, axis=2)
    return hat.transpose(2, 0, 1)


def _backward(hat, n3, full=False):
    arr = hat.transpose(1, 2, 0)
    if full:
        return np.fft.ifft(arr, axis=2)
    return np.fft.irfft(arr, n=n3, axis=2)


def self_conjugate_slices(n3):
    """Indices of spectral slices that equal their own conjugate for real data."""
    return [0, n3 // 2] if n3 % 2 == 0 and n3 > 1 else [0]


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralTensor:
    """All ``n3`` Fourier-domain frontal slices of a tensor.

    ``slices[k]`` is the ``n1 x n2`` complex matrix of the k-th DFT
    coefficient.  ``symmetric`` records that the originating tensor was real,
    so ``slices[k] == conj(slices[-k])``.
    """

    slices: np.ndarray
    symmetric: bool

    @property
    def shape(self):
        n3, n1, n2 = self.slices.shape
        return n1, n2, n3

    def symmetry_defect(self):
        """Largest relative deviation from conjugate symmetry."""
        mirrored = np.conj(np.roll(self.slices[::-1], 1, axis=0))
        scale = max(np.linalg.norm(self.slices), np.finfo(float).tiny)
        return float(np.linalg.norm(self.slices - mirrored) / scale)


def fft_mode3(t) -> SpectralTensor:
    t = as_tensor3(t)
    return SpectralTensor(np.fft.fft(t, axis=2).transpose(2, 0, 1), not np.iscomplexobj(t))


def ifft_mode3(s: SpectralTensor) -> np.ndarray:
    """Inverse of :func:`fft_mode3`.

    For symmetric input the imaginary residue is checked against
    ``SYMMETRY_RTOL`` and dropped.
    """
    out = np.fft.ifft(s.slices.transpose(1, 2, 0), axis=2)
    if not s.symmetric:
        return out
    scale = np.linalg.norm(out)
    residue = np.linalg.norm(out.imag)
    if residue > SYMMETRY_RTOL * scale:
        raise SymmetryViolation(
            f"imaginary residue {residue:.3e} exceeds {SYMMETRY_RTOL:g} * {scale:.3e}"
        )
    return out.real.copy()


# ---------------------------------------------------------------------------
# reference layouts
# ---------------------------------------------------------------------------


def bcirc(t) -> np.ndarray:
    """Block-circulant matrix: block ``(p, q)`` is frontal slice ``(p - q) mod n3``."""
    t = as_tensor3(t)
    n1, n2, n3 = t.shape
    out = np.zeros((n1 * n3, n2 * n3), dtype=t.dtype)
    for p in range(n3):
        for q in range(n3):
            out[p * n1:(p + 1) * n1, q * n2:(q + 1) * n2] = t[:, :, (p - q) % n3]
    return out


def unfold(t) -> np.ndarray:
    """Stack the frontal slices vertically, slice 1 on top."""
    t = as_tensor3(t)
    n1, n2, n3 = t.shape
    return t.transpose(2, 0, 1).reshape(n3 * n1, n2)


def fold(m, shape) -> np.ndarray:
    """Inverse of :func:`unfold`; ``shape`` is ``n3`` or the full ``(n1, n2, n3)``."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise DimensionMismatch("fold expects a matrix")
    if np.ndim(shape) == 0:
        n3 = int(shape)
        n1 = m.shape[0] // n3 if n3 > 0 else 0
    else:
        n1, n2, n3 = (int(v) for v in shape)
        if n2 != m.shape[1]:
            raise DimensionMismatch(f"column count {m.shape[1]} != n2={n2}")
    if n3 <= 0 or m.shape[0] % n3 != 0 or m.shape[0] != n1 * n3:
        raise DimensionMismatch(f"row count {m.shape[0]} is not compatible with n3={n3}")
    return m.reshape(n3, n1, m.shape[1]).transpose(1, 2, 0).copy()


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------


def _check_product(a, b):
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimensionMismatch(f"cannot T-multiply {a.shape} by {b.shape}")


def t_product(a, b, *, half_spectrum=True) -> np.ndarray:
    """T-product ``a * b`` computed slice-wise in the Fourier domain.

    With ``half_spectrum`` (the default) real operands only multiply the
    ``n3 // 2 + 1`` independent slices; the remaining ones are implied by
    conjugate symmetry.  ``half_spectrum=False`` multiplies every slice and
    goes through :class:`SpectralTensor`.
    """
    a, b = as_tensor3(a), as_tensor3(b)
    _check_product(a, b)
    n3 = a.shape[2]
    full = _full(a, b)
    if full or half_spectrum:
        return _backward(_forward(a, full) @ _forward(b, full), n3, full)
    sa, sb = fft_mode3(a), fft_mode3(b)
    return ifft_mode3(SpectralTensor(sa.slices @ sb.slices, True))


def t_product_reference(a, b) -> np.ndarray:
    """Literal ``fold(bcirc(a) @ unfold(b))``; quadratic in ``n3``, for testing."""
    a, b = as_tensor3(a), as_tensor3(b)
    _check_product(a, b)
    return fold(bcirc(a) @ unfold(b), a.shape[2])


class TProduct:
    """Multiplication by a fixed tensor whose spectrum is computed once.

    ``op(x)`` is ``a * x`` and ``op.rmul(x)`` is ``x * a``.
    """

    def __init__(self, a):
        a = as_tensor3(a)
        self.shape = a.shape
        self.full = np.iscomplexobj(a)
        self.hat = _forward(a, self.full)

    def _spec(self, x):
        x = as_tensor3(x)
        full = self.full or np.iscomplexobj(x)
        if full and not self.full:
            return x, full, _forward(_backward(self.hat, self.shape[2]), True)
        return x, full, self.hat

    def __call__(self, x):
        x, full, hat = self._spec(x)
        if x.shape[0] != self.shape[1] or x.shape[2] != self.shape[2]:
            raise DimensionMismatch(f"cannot T-multiply {self.shape} by {x.shape}")
        return _backward(hat @ _forward(x, full), self.shape[2], full)

    def rmul(self, x):
        x, full, hat = self._spec(x)
        if x.shape[1] != self.shape[0] or x.shape[2] != self.shape[2]:
            raise DimensionMismatch(f"cannot T-multiply {x.shape} by {self.shape}")
        return _backward(_forward(x, full) @ hat, self.shape[2], full)


def identity(n, n3, dtype=np.float64) -> np.ndarray:
    """Identity tensor: first frontal slice ``I_n``, the others zero."""
    out = np.zeros((n, n, n3), dtype=dtype)
    out[:, :, 0] = np.eye(n)
    return out


def t_transpose(t) -> np.ndarray:
    """Transpose every frontal slice and reverse the order of slices 2..n3.

    Complex tensors are also conjugated, which keeps the Fourier-domain
    picture (slice-wise conjugate transpose) valid for both dtypes.
    """
    t = as_tensor3(t)
    reordered = np.concatenate([t[:, :, :1], t[:, :, :0:-1]], axis=2)
    return np.conj(reordered.transpose(1, 0, 2))


def inner(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"inner product of {a.shape} and {b.shape}")
    return np.vdot(a, b)


def fro_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a).ravel()))


def _groups(t, s):
    if isinstance(t, np.ndarray) and t.ndim == 3:
        if s is None:
            return [t]
        if s <= 0 or t.shape[1] % s:
            raise DimensionMismatch(f"width {t.shape[1]} is not a multiple of s={s}")
        return [t[:, i:i + s, :] for i in range(0, t.shape[1], s)]
    return [as_tensor3(x) for x in t]


def t_diamond(a, b, s=None) -> np.ndarray:
    """Matrix of pairwise inner products between two groups of tensors.

    ``a`` and ``b`` are either sequences of equally sized tensors or single
    tensors cut into lateral groups of width ``s``.
    """
    ga, gb = _groups(a, s), _groups(b, s)
    shapes = {g.shape for g in ga} | {g.shape for g in gb}
    if len(shapes) != 1:
        raise DimensionMismatch(f"t_diamond needs equally shaped groups, got {sorted(shapes)}")
    sa = np.stack(ga).reshape(len(ga), -1)
    sb = np.stack(gb).reshape(len(gb), -1)
    return np.conj(sa) @ sb.T


def basis_combine(basis: Sequence[np.ndarray], y) -> np.ndarray:
    """``sum_j y[j] * basis[j]`` (the circled-star product)."""
    y = np.asarray(y)
    if y.ndim != 1 or len(basis) != y.shape[0]:
        raise DimensionMismatch(f"{len(basis)} basis tensors but coefficient shape {y.shape}")
    out = np.zeros_like(basis[0], dtype=np.result_type(basis[0], y))
    for yj, vj in zip(y, basis):
        out += yj * vj
    return out


# ---------------------------------------------------------------------------
# tubes
# ---------------------------------------------------------------------------


def unit_tube(n3) -> np.ndarray:
    e = np.zeros((1, 1, n3))
    e[0, 0, 0] = 1.0
    return e


def _tube_values(z):
    z = np.asarray(z)
    if z.ndim not in (1, 3) or (z.ndim == 3 and z.shape[:2] != (1, 1)):
        raise DimensionMismatch(f"a tube is 1 x 1 x n3, got {z.shape}")
    return z.reshape(-1)


def _tube_tau(coeffs):
    return TUBE_RTOL * max(1.0, float(np.max(np.abs(coeffs), initial=0.0)))


def tubal_rank(z) -> int:
    """Number of DFT coefficients of ``z`` above the singularity threshold."""
    coeffs = np.fft.fft(_tube_values(z))
    return int(np.count_nonzero(np.abs(coeffs) > _tube_tau(coeffs)))


def tube_inverse(z) -> np.ndarray:
    z = np.asarray(z)
    vals = _tube_values(z)
    coeffs = np.fft.fft(vals)
    small = np.abs(coeffs) <= _tube_tau(coeffs)
    if small.any():
        raise SingularTube(f"tube has {int(small.sum())} vanishing Fourier coefficient(s)")
    inv = np.fft.ifft(1.0 / coeffs)
    if not np.iscomplexobj(vals):
        inv = inv.real
    return inv.reshape(z.shape)


def normalization1(v, scale=None):
    """Split a tensor column as ``v = u * a`` with ``u^T * u = e``.

    Per Fourier slice ``k`` the tube coefficient is ``a_k = ||v_k||_2`` and
    ``u_k = v_k / a_k``.  A slice norm at or below ``1e-13 * max(1, scale)``
    raises :class:`SingularTube`; ``scale`` defaults to the largest slice
    norm of ``v`` itself.
    """
    v = as_tensor3(v)
    if v.shape[1] != 1:
        raise DimensionMismatch(f"normalization1 expects an n1 x 1 x n3 column, got {v.shape}")
    n3 = v.shape[2]
    full = np.iscomplexobj(v)
    vh = _forward(v, full)
    norms = np.linalg.norm(vh[:, :, 0], axis=1)
    ref = float(norms.max(initial=0.0)) if scale is None else float(scale)
    tau = TUBE_RTOL * max(1.0, ref)
    if np.any(norms <= tau):
        raise SingularTube(f"column has a Fourier slice of norm <= {tau:.3e}")
    u = _backward(vh / norms[:, None, None], n3, full)
    a = _backward(norms.astype(complex)[:, None, None], n3, full)
    return u, a


# ---------------------------------------------------------------------------
# block tensors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockLayout:
    """Row and column partitions of a block tensor along modes 1 and 2."""

    rows: tuple
    cols: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        object.__setattr__(self, "cols", tuple(int(c) for c in self.cols))
        if any(r < 0 for r in self.rows) or any(c < 0 for c in self.cols):
            raise DimensionMismatch("negative block extent")

    @property
    def shape(self):
        return sum(self.rows), sum(self.cols)

    def span(self, index):
        i, j = index
        r0 = sum(self.rows[:i])
        c0 = sum(self.cols[:j])
        return slice(r0, r0 + self.rows[i]), slice(c0, c0 + self.cols[j])


def block_compose(blocks, layout: BlockLayout | None = None) -> np.ndarray:
    """Assemble a block tensor from a nested list of sub-tensors (rows of blocks).

    A flat list of tensors is read as a single block row.
    """
    if len(blocks) and not isinstance(blocks[0], (list, tuple)):
        blocks = [blocks]
    grid = [[as_tensor3(b) for b in row] for row in blocks]
    if len({len(row) for row in grid}) != 1:
        raise DimensionMismatch("ragged block rows")
    if layout is None:
        layout = BlockLayout([row[0].shape[0] for row in grid], [b.shape[1] for b in grid[0]])
    if len(layout.rows) != len(grid) or len(layout.cols) != len(grid[0]):
        raise DimensionMismatch("layout does not match the block grid")
    n3s = {b.shape[2] for row in grid for b in row}
    if len(n3s) != 1:
        raise DimensionMismatch(f"blocks disagree on n3: {sorted(n3s)}")
    for i, row in enumerate(grid):
        for j, b in enumerate(row):
            if b.shape[:2] != (layout.rows[i], layout.cols[j]):
                raise DimensionMismatch(f"block {(i, j)} has shape {b.shape[:2]}")
    return np.concatenate([np.concatenate(row, axis=1) for row in grid], axis=0)


def block_slice(t, layout: BlockLayout, index) -> np.ndarray:
    t = as_tensor3(t)
    if t.shape[:2] != layout.shape:
        raise DimensionMismatch(f"tensor {t.shape[:2]} does not match layout {layout.shape}")
    rows, cols = layout.span(index)
    return t[rows, cols, :].copy()


def block_selector(m, s, n3) -> np.ndarray:
    """``[O, ..., O, I]`` of size ``s x ms x n3``."""
    out = np.zeros((s, m * s, n3))
    out[:, (m - 1) * s:, 0] = np.eye(s)
    return out
