"""Small dense-matrix helpers used across the package.

Operators are plain complex ``numpy`` arrays; these functions validate and
measure them.
"""
import numpy as np

from .errors import DimensionMismatch, DomainError


def as_matrix(a, name="matrix"):
    """Return ``a`` as a square, finite, complex 2-D array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


def as_vector(v, dim=None, name="vector"):
    x = np.asarray(v, dtype=complex).reshape(-1)
    if dim is not None and x.shape[0] != dim:
        raise DimensionMismatch(f"{name} has length {x.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} has non-finite entries")
    return x


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def max_abs(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def hermiticity_defect(a):
    """max |A - A^dagger| (works on stacks of matrices too)."""
    return max_abs(a - dagger(a))


def intertwining_residual(h, theta):
    """max |H^dagger Theta - Theta H|."""
    return max_abs(dagger(h) @ theta - theta @ h)


def check_same_dim(*mats):
    dims = {m.shape[-1] for m in mats}
    if len(dims) != 1:
        raise DimensionMismatch(f"operand dimensions differ: {sorted(dims)}")
    return dims.pop()


def real_nullspace(system, tol):
    """Orthonormal basis (columns) of the numerical nullspace of a real matrix.

    Singular values at or below ``tol * s_max`` count as zero.
    """
    system = np.asarray(system, dtype=float)
    n = system.shape[1]
    if system.shape[0] == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(system, full_matrices=True)
    s_full = np.zeros(n)
    s_full[: s.size] = s
    s_max = s_full.max() if n else 0.0
    null = s_full <= tol * s_max
    basis = vh[null].T
    return _fix_signs(basis)


def _fix_signs(basis):
    # largest-magnitude component of each column made positive, for reproducible output
    for k in range(basis.shape[1]):
        col = basis[:, k]
        j = int(np.argmax(np.abs(col)))
        if col[j] < 0:
            basis[:, k] = -col
    return basis
