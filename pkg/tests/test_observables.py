import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_positive, random_quasi_hermitian
from quasiherm.errors import DegenerateObservable, DomainError, NotPositiveDefinite, OutOfRange
from quasiherm.factor import cholesky_factor, hermitian_root_factor
from quasiherm.model import AMModelParams, am_hamiltonian, am_metric
from quasiherm.observables import (
    AMObservableParams,
    am_constraint_residual,
    am_observable,
    compatibility_residual,
    fit_am_observable,
    pushforward_observable,
    reconstruct_Z,
    solve_compatibility,
)


def test_identity_metric_gives_hermitian_matrices():
    fam = solve_compatibility(np.eye(3))
    assert fam.size == 9
    for lam in fam.basis:
        assert np.max(np.abs(lam - lam.conj().T)) < 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_dimension_is_n_squared(rng, n):
    for _ in range(3):
        theta = random_positive(rng, n)
        fam = solve_compatibility(theta)
        assert fam.size == n * n
        for lam in fam.basis:
            assert compatibility_residual(theta, lam) < 1e-10 * np.max(np.abs(theta))
            # Theta Lambda is Hermitian, so Lambda is Theta^{-1} times a Hermitian matrix
            herm = theta @ lam
            assert np.max(np.abs(herm - herm.conj().T)) < 1e-10 * np.max(np.abs(theta))


def test_rejects_indefinite_metric():
    with pytest.raises(NotPositiveDefinite):
        solve_compatibility(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_hamiltonian_belongs_to_compatible_family(rng):
    h, theta = random_quasi_hermitian(rng, 3)
    fam = solve_compatibility(theta)
    assert fam.projection_residual(h) < 1e-9 * np.linalg.norm(h)


@pytest.mark.parametrize("r, beta, z", [(1.0, 0.0, np.pi / 3), (2.0, 0.7, 2.0), (0.5, np.pi, 0.4)])
def test_am_family_fits_with_constraint(r, beta, z):
    theta = am_metric(AMModelParams(r, beta, z))
    fam = solve_compatibility(theta)
    assert fam.size == 4
    off_form = []
    for lam in fam.basis:
        params, off = fit_am_observable(lam, beta)
        assert am_constraint_residual(params, r, z) < 1e-10
        off_form.append(off)
    # the printed two-level family is the 3-dimensional slice with vanishing off-form part
    coords_system = np.array(
        [
            np.concatenate([[lam[0, 0].imag, lam[1, 1].imag],
                            [(lam[0, 1] * np.exp(-1j * beta)).imag, (lam[1, 0] * np.exp(1j * beta)).imag]])
            for lam in fam.basis
        ]
    ).T
    s = np.linalg.svd(coords_system, compute_uv=False)
    assert int(np.sum(s > 1e-10)) == 1  # one direction leaves the printed form
    # conversely every printed-form observable obeying the constraint is compatible
    q, a, d = 0.7, 1.3, -0.4
    p = q * r * r + (a - d) * r * np.cos(z)
    lam = am_observable(AMObservableParams(a, p, q, d, beta))
    assert compatibility_residual(theta, lam) < 1e-12 * max(1, r * r) * 10
    assert fam.projection_residual(lam) < 1e-10


def test_pushforward_of_compatible_observables_is_hermitian(rng):
    theta = random_positive(rng, 3)
    fam = solve_compatibility(theta)
    for fac in (cholesky_factor(theta), hermitian_root_factor(theta)):
        for lam in fam.basis:
            small = pushforward_observable(lam, fac)
            assert np.max(np.abs(small - small.conj().T)) < 1e-9


def test_am_observable_examples():
    np.testing.assert_array_equal(am_observable(AMObservableParams(2.0, 0, 0, 2.0)), 2 * np.eye(2))
    np.testing.assert_allclose(am_observable(AMObservableParams(1, 1, 1, 0, 0)), [[1, 1], [1, 0]])


@given(*(st.floats(-5, 5) for _ in range(4)), st.floats(-3, 3))
def test_am_observable_eigenvalues(a, p, q, d, beta):
    params = AMObservableParams(a, p, q, d, beta)
    got = np.linalg.eigvals(am_observable(params))
    expected = params.eigenvalues()
    # pairwise match (root sensitivity near a double eigenvalue is sqrt(eps))
    err = min(
        max(abs(got[0] - expected[0]), abs(got[1] - expected[1])),
        max(abs(got[0] - expected[1]), abs(got[1] - expected[0])),
    )
    assert err < 1e-6 * max(1, abs(a), abs(d), abs(p), abs(q))


def test_reality_criteria_disagree():
    # pq < 0 with equal diagonal: characteristic polynomial says complex,
    # the printed inequality (a-d)^2 > 4pq says real
    params = AMObservableParams(1.0, 1.0, -1.0, 1.0)
    assert not params.has_real_spectrum
    assert params.literature_reality_condition
    assert np.max(np.abs(params.eigenvalues().imag)) > 0.5


def test_constraint_residual_examples():
    assert am_constraint_residual(AMObservableParams(3.0, 2.0, 2.0, -1.0), 1.0, np.pi / 2) < 1e-15
    assert am_constraint_residual(AMObservableParams(2.0, 1.0, 0.0, 0.0), 1.0, np.pi / 3) < 1e-15
    assert am_constraint_residual(AMObservableParams(1.0, 5.0, 0.0, 1.0), 2.5, 0.3) == 5.0
    with pytest.raises(DomainError):
        am_constraint_residual(AMObservableParams(1, 1, 1, 1), 0.0, 1.0)


def test_reconstruct_Z_examples():
    assert reconstruct_Z(AMObservableParams(2.0, 1.0, 0.0, 0.0), 1.0) == pytest.approx(np.pi / 3, abs=1e-15)
    assert reconstruct_Z(AMObservableParams(1.0, 0.0, 0.0, 0.0), 1.0) == pytest.approx(np.pi / 2, abs=1e-15)
    with pytest.raises(OutOfRange):
        reconstruct_Z(AMObservableParams(1.0, 5.0, 0.0, 0.0), 1.0)
    with pytest.raises(DegenerateObservable):
        reconstruct_Z(AMObservableParams(1.0, 5.0, 0.0, 1.0), 1.0)


@given(
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(-5, 5).filter(lambda x: abs(x) > 1e-3),
    st.floats(0.1, 4).flatmap(lambda r: st.sampled_from([r, -r])),
    st.floats(-3, 3),
)
def test_reconstruct_Z_is_right_inverse(q, d, gap, r, x):
    a = d + gap
    p = q * r * r + gap * r * np.tanh(x)
    params = AMObservableParams(a, p, q, d)
    z = reconstruct_Z(params, r)
    assert 0 <= z <= np.pi
    assert am_constraint_residual(params, r, z) < 1e-12 * max(1, abs(p), q * q * r * r, abs(gap * r))


def test_hamiltonian_is_an_am_observable():
    r, beta = 1.7, 0.4
    h = am_hamiltonian(AMModelParams(r, beta))
    params, off = fit_am_observable(h, beta)
    assert off < 1e-15
    for z in (0.3, 1.0, 2.5):
        assert am_constraint_residual(params, r, z) < 1e-14
