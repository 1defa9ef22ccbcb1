import numpy as np
import pytest

R_GRID = (0.5, 1.0, 2.0)
BETA_GRID = (0.0, 0.7, np.pi)
Z_GRID = (np.pi / 6, np.pi / 4, np.pi / 3, 2 * np.pi / 3)


def random_positive(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a.conj().T @ a + 0.5 * np.eye(n)


def random_quasi_hermitian(rng, n):
    """H = Omega^{-1} h Omega with h Hermitian, nondegenerate; returns (H, Theta)."""
    energies = np.sort(rng.uniform(-3, 3, n)) + np.arange(n)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    h = (q * energies) @ q.conj().T
    omega = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 3 * np.eye(n)
    H = np.linalg.solve(omega, h @ omega)
    return H, omega.conj().T @ omega


@pytest.fixture
def rng():
    return np.random.default_rng(7)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
