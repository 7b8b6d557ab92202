import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def rel_err(x, ref):
    return np.linalg.norm(np.ravel(x - ref)) / max(np.linalg.norm(np.ravel(ref)), np.finfo(float).tiny)


def bcirc_loops(t):
    """Block circulant matrix written out with explicit index arithmetic."""
    n1, n2, n3 = t.shape
    out = np.zeros((n1 * n3, n2 * n3), dtype=t.dtype)
    for p in range(n3):
        for q in range(n3):
            out[p * n1:(p + 1) * n1, q * n2:(q + 1) * n2] = t[:, :, (p - q) % n3]
    return out


def dft_slices(t):
    """All Fourier slices via an explicit DFT matrix (independent of numpy.fft)."""
    n3 = t.shape[2]
    k = np.arange(n3)
    f = np.exp(-2j * np.pi * np.outer(k, k) / n3)
    return np.einsum("kl,ijl->kij", f, t)


def from_dft_slices(hat):
    n3 = hat.shape[0]
    k = np.arange(n3)
    finv = np.exp(2j * np.pi * np.outer(k, k) / n3) / n3
    return np.einsum("kl,lij->ijk", finv, hat)


def kron_sylvester(a, b, c, sign):
    """Oracle: per Fourier slice, solve (I kron A_k + sign B_k^T kron I) vec X = vec C densely."""
    ah, bh, ch = dft_slices(a), dft_slices(b), dft_slices(c)
    n, q = c.shape[:2]
    xs = []
    for ak, bk, ck in zip(ah, bh, ch):
        mat = np.kron(np.eye(q), ak) + sign * np.kron(bk.T, np.eye(n))
        xs.append(np.linalg.solve(mat, ck.ravel(order="F")).reshape((n, q), order="F"))
    x = from_dft_slices(np.stack(xs))
    return x.real if not any(np.iscomplexobj(t) for t in (a, b, c)) else x


def well_posed(rng, n, q, n3, sign=1, shift=None):
    """Random coefficients whose Fourier spectra are well separated."""
    from tsylv import identity

    shift = 3.0 * np.sqrt(n) if shift is None else shift
    a = rng.standard_normal((n, n, n3)) / np.sqrt(n3) + shift * identity(n, n3)
    b = rng.standard_normal((q, q, n3)) / np.sqrt(n3) + sign * shift * identity(q, n3)
    return a, b


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
