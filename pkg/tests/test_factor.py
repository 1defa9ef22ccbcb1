import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_positive, random_quasi_hermitian
from quasiherm.errors import DimensionMismatch, NotPositiveDefinite
from quasiherm.factor import (
    FactorKind,
    cholesky_factor,
    gauge_between,
    hermitian_root_factor,
    map_ket,
    pullback_hamiltonian,
    pushforward_hamiltonian,
    unmap_ket,
)
from quasiherm.model import AMModelParams, am_hamiltonian, am_metric, am_physical_hamiltonian


def test_identity_factors():
    for make in (cholesky_factor, hermitian_root_factor):
        fac = make(np.eye(3))
        np.testing.assert_allclose(fac.omega, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(fac.omega_inverse, np.eye(3), atol=1e-15)


def test_diagonal_root():
    fac = hermitian_root_factor(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(fac.omega, np.diag([2.0, 3.0]), atol=1e-14)
    assert fac.kind is FactorKind.HERMITIAN_ROOT


@pytest.mark.parametrize("r, beta, z", [(2.0, 0.3, np.pi / 4), (0.5, 2.0, 1.0), (1.0, 0.0, 2.5)])
def test_cholesky_reproduces_closed_form_omega(r, beta, z):
    fac = cholesky_factor(am_metric(AMModelParams(r, beta, z)))
    omega = np.array([[1, r * np.exp(1j * beta) * np.cos(z)], [0, r * np.sin(z)]])
    omega_inv = np.array([[1, -np.exp(1j * beta) / np.tan(z)], [0, 1 / (r * np.sin(z))]])
    np.testing.assert_allclose(fac.omega, omega, atol=1e-12)
    np.testing.assert_allclose(fac.omega_inverse, omega_inv, atol=1e-12)
    assert fac.kind is FactorKind.TRIANGULAR


def test_cholesky_sign_convention_for_negative_r_sin_z():
    r, beta, z = -1.5, 0.2, 1.0
    fac = cholesky_factor(am_metric(AMModelParams(r, beta, z)))
    assert fac.omega[1, 1].real > 0
    closed = np.array([[1, r * np.exp(1j * beta) * np.cos(z)], [0, r * np.sin(z)]])
    u = fac.omega @ np.linalg.inv(closed)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-12)


def test_hermitian_root_against_eigendecomposition():
    theta = am_metric(AMModelParams(2.0, 0.3, np.pi / 4)).theta
    fac = hermitian_root_factor(theta)
    w, v = np.linalg.eigh(theta)
    np.testing.assert_allclose(fac.omega, v @ np.diag(np.sqrt(w)) @ v.conj().T, atol=1e-12)
    assert np.max(np.abs(fac.omega.conj().T @ fac.omega - theta)) < 1e-11
    assert np.max(np.abs(fac.omega - fac.omega.conj().T)) < 1e-14


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_factorization_invariants(seed, n):
    rng = np.random.default_rng(seed)
    theta = random_positive(rng, n)
    tri, root = cholesky_factor(theta), hermitian_root_factor(theta)
    scale = np.max(np.abs(theta))
    for fac in (tri, root):
        assert np.max(np.abs(fac.omega @ fac.omega_inverse - np.eye(n))) < 1e-11 * np.linalg.cond(theta)
        assert np.max(np.abs(fac.omega.conj().T @ fac.omega - theta)) < 1e-11 * scale
    u = gauge_between(root, tri)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(n), atol=1e-10 * np.linalg.cond(theta))
    psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    phi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    for fac in (tri, root):
        lhs = np.vdot(map_ket(phi, fac), map_ket(psi, fac))
        assert abs(lhs - phi.conj() @ theta @ psi) < 1e-12 * scale * np.linalg.norm(phi) * np.linalg.norm(psi) * 10


def test_not_positive_rejected():
    for make in (cholesky_factor, hermitian_root_factor):
        with pytest.raises(NotPositiveDefinite):
            make(np.array([[1.0, 2.0], [2.0, 1.0]]))


@pytest.mark.parametrize("r, beta, z", [(2.0, 0.3, np.pi / 4), (0.5, np.pi, 2.0)])
def test_push_and_pull_closed_form(r, beta, z):
    p = AMModelParams(r, beta, z)
    fac = cholesky_factor(am_metric(p))
    hz = am_physical_hamiltonian(p)
    h = am_hamiltonian(p)
    np.testing.assert_allclose(pushforward_hamiltonian(h, fac), hz, atol=1e-11)
    np.testing.assert_allclose(pullback_hamiltonian(hz, fac), h, atol=1e-11)
    np.testing.assert_allclose(pushforward_hamiltonian(np.eye(2), fac), np.eye(2), atol=1e-12)
    root = hermitian_root_factor(am_metric(p))
    e_tri = np.linalg.eigvalsh(pushforward_hamiltonian(h, fac))
    e_root = np.linalg.eigvalsh(pushforward_hamiltonian(h, root))
    np.testing.assert_allclose(e_tri, e_root, atol=1e-10)


def test_pushforward_is_hermitian_for_quasi_hermitian_input(rng):
    h, theta = random_quasi_hermitian(rng, 4)
    for fac in (cholesky_factor(theta), hermitian_root_factor(theta)):
        small = pushforward_hamiltonian(h, fac)
        assert np.max(np.abs(small - small.conj().T)) < 1e-10 * max(1, np.max(np.abs(small)))
        back = pullback_hamiltonian(small, fac)
        np.testing.assert_allclose(back, h, atol=1e-10 * np.max(np.abs(h)))


def test_ket_round_trip_and_dimension_errors(rng):
    theta = random_positive(rng, 3)
    fac = cholesky_factor(theta)
    psi = np.array([1.0, 2j, -0.5])
    np.testing.assert_allclose(unmap_ket(map_ket(psi, fac), fac), psi, atol=1e-12)
    assert np.vdot(map_ket(psi, fac), map_ket(psi, fac)).real == pytest.approx(
        (psi.conj() @ theta @ psi).real, abs=1e-12 * np.max(np.abs(theta)) * 10
    )
    np.testing.assert_array_equal(map_ket(psi, cholesky_factor(np.eye(3))), psi)
    with pytest.raises(DimensionMismatch):
        map_ket([1, 0], fac)
    with pytest.raises(DimensionMismatch):
        pushforward_hamiltonian(np.eye(2), fac)
