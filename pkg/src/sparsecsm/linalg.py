"""Dense complex matrix helpers.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Diagonal
matrices are carried as 1-D arrays holding the diagonal only.  The inner
product is the Frobenius one, ``<A, B> = tr(A^H B)``, conjugate-linear in
the first argument.
"""

import numpy as np

from .errors import DimensionError, NumericalError, OversizeError

__all__ = [
    "as_cmatrix",
    "as_diagonal",
    "diag_to_dense",
    "frob_inner",
    "frob_norm_sq",
    "hadamard",
    "matmul",
    "adjoint",
    "kron",
    "vec",
    "unvec",
    "pinv",
    "check_solvable",
    "KRON_MAX_ENTRIES",
    "SOLVABLE_MAX_COLS",
]

KRON_MAX_ENTRIES = 10_000
SOLVABLE_MAX_COLS = 64


def as_cmatrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} contains non-finite entries")
    return m


def as_diagonal(d, name="diagonal"):
    """Return ``d`` as a finite 1-D complex128 array."""
    v = np.asarray(d, dtype=np.complex128)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"{name} contains non-finite entries")
    return v


def diag_to_dense(d):
    return np.diag(as_diagonal(d))


def _same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def frob_inner(a, b):
    """Frobenius scalar product ``sum(conj(a_ij) * b_ij)``."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    _same_shape(a, b)
    return complex(np.vdot(a, b))


def frob_norm_sq(a):
    """Squared Frobenius norm, summing ``re**2 + im**2`` over all entries."""
    a = np.asarray(a, dtype=np.complex128)
    return float(np.sum(a.real**2) + np.sum(a.imag**2))


def hadamard(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    _same_shape(a, b)
    return a * b


def matmul(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(a):
    """Conjugate transpose."""
    return np.asarray(a, dtype=np.complex128).conj().T


def kron(a, b, max_entries=KRON_MAX_ENTRIES):
    """Kronecker product, refusing outputs larger than ``max_entries``.

    Only meant for small consistency checks; the full-size steering matrix
    would need ``16 n^2 m^2`` bytes.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows * cols > max_entries:
        raise OversizeError(
            f"kron output {rows}x{cols} exceeds {max_entries} entries"
        )
    return np.kron(a, b)


def vec(x):
    """Stack the columns of ``x`` into one column vector."""
    x = np.asarray(x, dtype=np.complex128)
    return x.reshape(-1, order="F")


def unvec(v, rows, cols):
    return np.asarray(v, dtype=np.complex128).reshape((rows, cols), order="F")


def pinv(a):
    """Moore-Penrose inverse from the singular value decomposition.

    Singular values below ``max(rows, cols) * eps * s_max`` count as zero.
    """
    a = as_cmatrix(a)
    rows, cols = a.shape
    if a.size == 0:
        return np.zeros((cols, rows), dtype=np.complex128)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    cutoff = max(rows, cols) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    keep = s > cutoff
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * s_inv) @ u.conj().T


def check_solvable(a, c, rtol=1e-8, max_cols=SOLVABLE_MAX_COLS):
    """Test whether ``A X A^H = C`` has an exact solution.

    Returns ``(consistent, x)`` where ``x = A^+ C (A^H)^+`` is the
    least-norm candidate.  The system is consistent iff
    ``A A^+ C (A^H)^+ A^H`` reproduces ``C`` to ``rtol`` relative to
    ``||C||_F``.
    """
    a = as_cmatrix(a, "A")
    c = as_cmatrix(c, "C")
    n, m = a.shape
    if c.shape != (n, n):
        raise DimensionError(f"C must be {n}x{n}, got {c.shape}")
    if m > max_cols:
        raise OversizeError(f"A has {m} columns, guard is {max_cols}")
    a_pinv = pinv(a)
    ah_pinv = pinv(a.conj().T)
    x = a_pinv @ c @ ah_pinv
    recon = a @ a_pinv @ c @ ah_pinv @ a.conj().T
    scale = np.linalg.norm(c)
    consistent = bool(np.linalg.norm(recon - c) <= rtol * scale)
    return consistent, x
