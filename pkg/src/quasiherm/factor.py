"""Factorizations Theta = Omega^dagger Omega and the maps they induce
between the auxiliary, physical and textbook representations.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite
from .linalg import as_matrix, as_vector, check_same_dim, dagger
from .metric import as_candidate, require_positive


class FactorKind(enum.Enum):
    TRIANGULAR = "triangular"
    HERMITIAN_ROOT = "hermitian_root"
    MU_SERIES = "mu_series"


@dataclass(frozen=True)
class MappingFactorization:
    """An invertible Omega with its stored inverse; ``theta`` is Omega^dagger Omega."""

    omega: np.ndarray
    omega_inverse: np.ndarray
    kind: FactorKind

    @property
    def dim(self):
        return self.omega.shape[0]

    @property
    def theta(self):
        return dagger(self.omega) @ self.omega


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def cholesky_factor(theta):
    """Upper-triangular Omega with positive real diagonal, Omega^dagger Omega = Theta."""
    candidate = require_positive(as_candidate(theta))
    try:
        lower = np.linalg.cholesky(candidate.theta)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    omega = np.ascontiguousarray(dagger(lower))
    n = omega.shape[0]
    omega_inv = np.linalg.solve(omega, np.eye(n, dtype=complex))
    omega_inv = np.triu(omega_inv)
    _freeze(omega, omega_inv)
    return MappingFactorization(omega, omega_inv, FactorKind.TRIANGULAR)


def hermitian_root_factor(theta):
    """Omega = Theta^{1/2}, Hermitian positive definite (eigenvalues ascending)."""
    candidate = require_positive(as_candidate(theta))
    w, v = np.linalg.eigh(candidate.theta)
    if w[0] <= 0:
        raise NotPositiveDefinite(f"min eigenvalue {w[0]:.3e}")
    root = np.sqrt(w)
    omega = (v * root) @ dagger(v)
    omega_inv = (v / root) @ dagger(v)
    _freeze(omega, omega_inv)
    return MappingFactorization(omega, omega_inv, FactorKind.HERMITIAN_ROOT)


def _check(fac, mat):
    mat = as_matrix(mat)
    if mat.shape[0] != fac.dim:
        raise DimensionMismatch(f"operator has dimension {mat.shape[0]}, map has {fac.dim}")
    return mat


def pullback_hamiltonian(h_physical, fac):
    """Omega^{-1} h Omega: textbook-space operator to the auxiliary space."""
    h = _check(fac, h_physical)
    return fac.omega_inverse @ h @ fac.omega


def pushforward_hamiltonian(h, fac):
    """Omega H Omega^{-1}: auxiliary-space operator to the textbook space."""
    h = _check(fac, h)
    return fac.omega @ h @ fac.omega_inverse


def map_ket(psi, fac):
    """|psi> -> Omega |psi>, the textbook-space representative."""
    return fac.omega @ as_vector(psi, fac.dim, "psi")


def unmap_ket(psi_textbook, fac):
    return fac.omega_inverse @ as_vector(psi_textbook, fac.dim, "psi")


def gauge_between(fac_a, fac_b):
    """The left factor U with Omega_a = U Omega_b; unitary when both factor the same Theta."""
    check_same_dim(fac_a.omega, fac_b.omega)
    return fac_a.omega @ fac_b.omega_inverse
