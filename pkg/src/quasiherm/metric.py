"""Metric operators: the intertwining solver and positivity certificates."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotPositiveDefinite
from .linalg import as_matrix, dagger, hermiticity_defect, real_nullspace

HERMITICITY_TOL = 1e-10


class Provenance(enum.Enum):
    CLOSED_FORM = "closed_form"
    NULLSPACE = "nullspace"
    MU_SERIES = "mu_series"


@dataclass(frozen=True)
class MetricCandidate:
    """A Hermitian matrix together with its spectral positivity certificate."""

    theta: np.ndarray
    eigenvalues: np.ndarray
    provenance: Provenance

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def is_positive_definite(self) -> bool:
        return self.min_eigenvalue > 0

    @property
    def condition_number(self) -> float:
        if not self.is_positive_definite:
            return float("inf")
        return float(self.eigenvalues[-1] / self.eigenvalues[0])

    @property
    def dim(self) -> int:
        return self.theta.shape[0]


def positivity_certificate(theta, provenance=Provenance.CLOSED_FORM, tol=HERMITICITY_TOL):
    """Certify a Hermitian matrix: full (ascending) spectrum and minimum eigenvalue.

    Raises NotHermitian when ``max|theta - theta^dagger|`` exceeds ``tol``.
    """
    theta = as_matrix(theta, "theta")
    defect = hermiticity_defect(theta)
    if defect > tol:
        raise NotHermitian(f"metric is not Hermitian (max|T - T^dagger| = {defect:.3e})")
    theta = 0.5 * (theta + dagger(theta))
    eigenvalues = np.linalg.eigvalsh(theta)
    theta.setflags(write=False)
    eigenvalues.setflags(write=False)
    return MetricCandidate(theta, eigenvalues, Provenance(provenance))


def require_positive(candidate):
    if not candidate.is_positive_definite:
        raise NotPositiveDefinite(
            f"metric is not positive definite (min eigenvalue {candidate.min_eigenvalue:.3e})"
        )
    return candidate


def as_candidate(theta):
    """Accept either a MetricCandidate or a raw matrix."""
    if isinstance(theta, MetricCandidate):
        return theta
    return positivity_certificate(theta, Provenance.CLOSED_FORM)


# ---------------------------------------------------------------- Hermitian coordinates

def hermitian_basis(n):
    """Frobenius-orthonormal real basis of n x n Hermitian matrices.

    Order: diagonal entries first, then for each upper-triangle position
    (row-major) its real and imaginary off-diagonal parts.
    """
    basis = []
    for k in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[k, k] = 1.0
        basis.append(e)
    s = 1.0 / np.sqrt(2.0)
    for j in range(n):
        for k in range(j + 1, n):
            re_part = np.zeros((n, n), dtype=complex)
            re_part[j, k] = re_part[k, j] = s
            im_part = np.zeros((n, n), dtype=complex)
            im_part[j, k] = 1j * s
            im_part[k, j] = -1j * s
            basis.extend([re_part, im_part])
    return np.array(basis)


def _realify(stack):
    # (m, n, n) complex -> (2 n^2, m) real, one column per input matrix
    flat = stack.reshape(stack.shape[0], -1)
    return np.concatenate([flat.real, flat.imag], axis=1).T


def intertwining_system(h, basis=None):
    """Real matrix of the linear map Theta -> H^dagger Theta - Theta H in Hermitian coordinates."""
    h = as_matrix(h, "H")
    if basis is None:
        basis = hermitian_basis(h.shape[0])
    images = dagger(h) @ basis - basis @ h
    return _realify(images)


def coordinates_to_matrices(coords, basis):
    """Combine real coordinates (columns of ``coords``) with a matrix basis."""
    return np.einsum("km,kij->mij", coords, basis)


@dataclass(frozen=True)
class MetricFamily:
    """Real vector space of Hermitian solutions of H^dagger Theta = Theta H."""

    dim: int
    basis: tuple

    @property
    def size(self):
        return len(self.basis)

    def combine(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.size,):
            raise DimensionMismatch(f"expected {self.size} coefficients, got {coeffs.shape}")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c, b in zip(coeffs, self.basis):
            out = out + c * b
        return out

    def projection_residual(self, theta):
        """Frobenius distance from ``theta`` to the span of the basis."""
        theta = np.asarray(theta, dtype=complex)
        if not self.basis:
            return float(np.linalg.norm(theta))
        coords = [np.real(np.vdot(b, theta)) for b in self.basis]
        return float(np.linalg.norm(theta - self.combine(coords)))


def _family_from_system(system, n, tol):
    basis = hermitian_basis(n)
    null = real_nullspace(system, tol)
    mats = coordinates_to_matrices(null, basis)
    mats = 0.5 * (mats + dagger(mats))
    frozen = []
    for m in mats:
        m.setflags(write=False)
        frozen.append(m)
    return MetricFamily(n, tuple(frozen))


def solve_intertwining(h, tol=1e-10):
    """All Hermitian Theta with H^dagger Theta = Theta H, as an orthonormal real basis.

    The relation is written as a real-linear system over the n^2 real
    coordinates of a Hermitian matrix (see :func:`hermitian_basis`); its
    numerical nullspace is read off the SVD with relative threshold ``tol``.
    An empty basis means no Hermitian solution exists within tolerance.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = as_matrix(h, "H")
    return _family_from_system(intertwining_system(h), h.shape[0], tol)


def solve_common_intertwining(hamiltonians, tol=1e-10):
    """Metrics admissible for every Hamiltonian at once (stacked nullspace)."""
    hs = [as_matrix(h, "H") for h in hamiltonians]
    n = hs[0].shape[0]
    basis = hermitian_basis(n)
    system = np.vstack([intertwining_system(h, basis) for h in hs])
    return _family_from_system(system, n, tol)


def select_positive(family, coeffs):
    """Linear combination of family members, certified positive definite."""
    theta = family.combine(coeffs)
    candidate = positivity_certificate(theta, Provenance.NULLSPACE)
    return require_positive(candidate)
