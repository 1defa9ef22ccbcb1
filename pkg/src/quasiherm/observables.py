"""Observables compatible with a given metric (Theta Lambda = Lambda^dagger Theta),
the two-level observable family and the reconstruction of Z from it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateObservable, DomainError, OutOfRange
from .linalg import as_matrix, dagger, max_abs, real_nullspace
from .metric import as_candidate, require_positive


@dataclass(frozen=True)
class ObservableFamily:
    dim: int
    basis: tuple

    @property
    def size(self):
        return len(self.basis)

    def contains(self, lam, tol=1e-10):
        return self.projection_residual(lam) < tol

    def projection_residual(self, lam):
        lam = np.asarray(lam, dtype=complex)
        coords = [np.real(np.vdot(b, lam)) for b in self.basis]
        approx = sum((c * b for c, b in zip(coords, self.basis)), np.zeros_like(lam))
        return float(np.linalg.norm(lam - approx))


def compatibility_residual(theta, lam):
    """max |Theta Lambda - Lambda^dagger Theta|."""
    theta = np.asarray(getattr(theta, "theta", theta), dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    return max_abs(theta @ lam - dagger(lam) @ theta)


def _complex_basis(n):
    # Frobenius-orthonormal real basis of all n x n complex matrices: E_jk, then i E_jk
    eye = np.eye(n * n, dtype=complex).reshape(n * n, n, n)
    return np.concatenate([eye, 1j * eye])


def solve_compatibility(theta, tol=1e-10):
    """Orthonormal real basis of {Lambda : Theta Lambda = Lambda^dagger Theta}.

    The map Lambda -> Theta Lambda - Lambda^dagger Theta is written over the
    2 n^2 real coordinates of a complex matrix and its SVD nullspace taken
    with relative threshold ``tol``.  For positive Theta the space has real
    dimension n^2 (it is Theta^{-1} times the Hermitian matrices).
    """
    candidate = require_positive(as_candidate(theta))
    th = candidate.theta
    n = th.shape[0]
    basis = _complex_basis(n)
    images = th @ basis - dagger(basis) @ th
    flat = images.reshape(images.shape[0], -1)
    system = np.concatenate([flat.real, flat.imag], axis=1).T
    null = real_nullspace(system, tol)
    mats = np.einsum("km,kij->mij", null, basis)
    out = []
    for m in mats:
        m.setflags(write=False)
        out.append(m)
    return ObservableFamily(n, tuple(out))


@dataclass(frozen=True)
class AMObservableParams:
    a: float
    p: float
    q: float
    d: float
    beta: float = 0.0

    @property
    def discriminant(self):
        """(a-d)^2/4 + pq; the eigenvalues are real iff this is non-negative."""
        return (self.a - self.d) ** 2 / 4 + self.p * self.q

    @property
    def has_real_spectrum(self):
        return self.discriminant >= 0

    @property
    def literature_reality_condition(self):
        """The inequality (a-d)^2 > 4pq as printed alongside the two-level family.

        Kept for comparison only: it disagrees with the characteristic
        polynomial whenever pq < 0 or pq > 0 with small |a-d|.
        """
        return (self.a - self.d) ** 2 > 4 * self.p * self.q

    def eigenvalues(self):
        mid = (self.a + self.d) / 2
        root = np.sqrt(complex(self.discriminant))
        return np.array([mid - root, mid + root])


def am_observable(params):
    a, p, q, d, b = params.a, params.p, params.q, params.d, params.beta
    return np.array([[a, p * np.exp(1j * b)], [q * np.exp(-1j * b), d]], dtype=complex)


def am_constraint_residual(params, r, Z):
    """|p - q r^2 - (a-d) r cos Z|; zero iff the observable is compatible with Theta_Z."""
    if r == 0:
        raise DomainError("r must be nonzero")
    return abs(params.p - params.q * r * r - (params.a - params.d) * r * np.cos(Z))


def fit_am_observable(lam, beta):
    """Least-squares real parameters (a, p, q, d) of a 2x2 matrix in the family form.

    Returns the fitted params and the distance of ``lam`` from the
    family form (the part no real (a, p, q, d) can reproduce).
    """
    lam = as_matrix(lam, "Lambda")
    if lam.shape != (2, 2):
        raise DomainError("the two-level observable family is 2x2")
    a = lam[0, 0].real
    d = lam[1, 1].real
    p = (lam[0, 1] * np.exp(-1j * beta)).real
    q = (lam[1, 0] * np.exp(1j * beta)).real
    params = AMObservableParams(float(a), float(p), float(q), float(d), beta)
    return params, float(np.linalg.norm(lam - am_observable(params)))


def reconstruct_Z(params, r, tol=1e-12):
    """Z in (0, pi) from the constraint: arccos((p - q r^2) / ((a - d) r))."""
    if r == 0:
        raise DomainError("r must be nonzero")
    gap = params.a - params.d
    if gap == 0:
        raise DegenerateObservable("a = d: the constraint does not involve Z")
    x = (params.p - params.q * r * r) / (gap * r)
    if abs(x) > 1 + tol:
        raise OutOfRange(f"arccos argument {x:.6g} outside [-1, 1]: no compatible Theta_Z")
    return float(np.arccos(np.clip(x, -1.0, 1.0)))


def pushforward_observable(lam, fac):
    """lambda = Omega Lambda Omega^{-1}."""
    return fac.omega @ np.asarray(lam, dtype=complex) @ fac.omega_inverse
