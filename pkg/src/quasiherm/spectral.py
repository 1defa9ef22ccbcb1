"""Biorthogonal eigenbases and the single-series (mu-parametrized) forms of
Omega and Theta.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ComplexSpectrum, DefectiveMatrix, DegenerateSpectrum, DimensionMismatch, DomainError
from .factor import FactorKind, MappingFactorization
from .linalg import as_matrix, dagger, max_abs
from .metric import Provenance, positivity_certificate

DEFECTIVE_COND = 1e12


@dataclass(frozen=True)
class BiorthogonalSystem:
    """Right eigenvectors |n> of H (columns of ``right_kets``) and ketkets |n>>
    (columns of ``ketkets``), eigenvectors of H^dagger, with <<m|n> = delta.

    Each right ket has unit Euclidean norm and its first nonzero component
    real positive.
    """

    energies: np.ndarray
    right_kets: np.ndarray
    ketkets: np.ndarray

    @property
    def dim(self):
        return self.energies.shape[0]

    def biorthogonality_residual(self):
        return max_abs(dagger(self.ketkets) @ self.right_kets - np.eye(self.dim))

    def coefficients(self, psi):
        """Expansion coefficients <<n|psi>."""
        return dagger(self.ketkets) @ np.asarray(psi, dtype=complex)


@dataclass(frozen=True)
class MuParameters:
    mu: tuple

    def __post_init__(self):
        mu = tuple(complex(m) for m in self.mu)
        if any(m == 0 or not np.isfinite(m) for m in mu):
            raise DomainError("every mu_n must be finite and nonzero")
        object.__setattr__(self, "mu", mu)

    def __len__(self):
        return len(self.mu)

    def as_array(self):
        return np.array(self.mu, dtype=complex)


def _phase_fix(vectors, rel=1e-12):
    out = vectors.copy()
    for k in range(out.shape[1]):
        v = out[:, k]
        v = v / np.linalg.norm(v)
        mags = np.abs(v)
        j = int(np.argmax(mags > rel * mags.max()))
        v = v * (np.conj(v[j]) / mags[j])
        v[j] = mags[j]
        out[:, k] = v
    return out


def biorthogonal_decompose(h, reality_tol=1e-8, gap_tol=None):
    """Biorthogonal eigensystem of a quasi-Hermitian H with real, simple spectrum.

    Energies are sorted ascending.  ``gap_tol`` defaults to 1e-8 times the
    spectral diameter.
    """
    h = as_matrix(h, "H")
    n = h.shape[0]
    w, v = np.linalg.eig(h)
    bad = np.abs(w.imag) > reality_tol
    if np.any(bad):
        raise ComplexSpectrum(f"eigenvalues with |Im E| > {reality_tol:g}: {w[bad]}")
    order = np.argsort(w.real, kind="stable")
    energies = w.real[order]
    v = v[:, order]
    if n > 1:
        diameter = energies[-1] - energies[0]
        gap = np.min(np.diff(energies))
        tol = 1e-8 * diameter if gap_tol is None else gap_tol
        if gap <= tol:
            raise DegenerateSpectrum(f"eigenvalue gap {gap:.3e} below tolerance {tol:.3e}")
    right = _phase_fix(v)
    if np.linalg.cond(right) > DEFECTIVE_COND:
        raise DefectiveMatrix("eigenvector matrix is numerically singular")
    # rows of R^{-1} are the dual bras <<n|
    ketkets = dagger(np.linalg.inv(right))
    for a in (energies, right, ketkets):
        a.setflags(write=False)
    return BiorthogonalSystem(energies, right, ketkets)


def _check_mu(sys, mu):
    mu = mu if isinstance(mu, MuParameters) else MuParameters(tuple(mu))
    if len(mu) != sys.dim:
        raise DimensionMismatch(f"{len(mu)} mu parameters for a {sys.dim}-level system")
    return mu.as_array()


def metric_from_mu(sys, mu):
    """Theta = sum_n |mu_n|^2 |n>><<n|."""
    m = _check_mu(sys, mu)
    theta = (sys.ketkets * np.abs(m) ** 2) @ dagger(sys.ketkets)
    return positivity_certificate(theta, Provenance.MU_SERIES)


def omega_from_mu(sys, mu):
    """Omega = sum_n |n>_T mu_n <<n| with |n>_T the standard basis; Omega^{-1} = sum_n |n> mu_n^{-1} <n|_T."""
    m = _check_mu(sys, mu)
    omega = m[:, None] * dagger(sys.ketkets)
    omega_inv = sys.right_kets / m[None, :]
    omega.setflags(write=False)
    omega_inv.setflags(write=False)
    return MappingFactorization(omega, omega_inv, FactorKind.MU_SERIES)


def spectral_resolution_check(h, sys, theta):
    """max |H - sum_n |n> E_n <n| Theta| with kets normalized so <n|Theta|n> = 1."""
    h = as_matrix(h, "H")
    theta = as_matrix(getattr(theta, "theta", theta), "theta")
    if h.shape != theta.shape or h.shape[0] != sys.dim:
        raise DimensionMismatch("H, theta and the system must share one dimension")
    kets = sys.right_kets
    norms = np.real(np.einsum("in,ij,jn->n", kets.conj(), theta, kets))
    kets = kets / np.sqrt(norms)
    recon = (kets * sys.energies) @ dagger(kets) @ theta
    return max_abs(h - recon)
