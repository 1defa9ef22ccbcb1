"""Time evolution with a time-dependent Dyson map Omega(t).

Three routes to the same physics are integrated:

* the textbook equation  i du/dt = h(t) u,  h = Omega H Omega^{-1};
* the doublet  i d|Phi>/dt = H_gen |Phi>,  i d|Phi>>/dt = H_gen^dagger |Phi>>
  with  H_gen = H - i Omega^{-1} dOmega/dt;
* the operator equations for U_R (kets) and U_L^dagger (ketkets).

All integrators are classical fixed-step RK4 (hbar = 1).  For a linear
system y' = -i A(t) y one RK4 step is y -> P_k y with a step matrix built
from A at t_k, t_k + h/2 and t_k + h; the step matrices are assembled in one
batched pass, then applied sequentially.  Global error is O(h^4) for states;
the bilinear norm <<Phi|Phi> drifts as O(h^5) because the stability
polynomials of the two adjoint equations cancel through fifth order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    IncompatibleMetric,
    NonHermitianPushforward,
    SingularOmega,
    StepSizeUnderflow,
)
from .linalg import as_vector, dagger, max_abs
from .metric import solve_common_intertwining

OMEGA_COND_LIMIT = 1e12


@dataclass(frozen=True)
class TimeDependentScenario:
    """Everything needed to integrate one model.

    ``hamiltonian``, ``omega`` and ``observable`` are operator-valued
    functions of time exposing ``at(t)`` (vectorized over arrays of t).
    ``derivative`` selects how dOmega/dt is obtained: ``"auto"`` uses an
    exact symbolic derivative when ``omega`` provides ``derivative_at`` and
    a central difference otherwise; ``"exact"`` and ``"finite_difference"``
    force one or the other.
    """

    hamiltonian: object
    omega: object
    t0: float
    t1: float
    initial_ket: np.ndarray
    steps: int = 1000
    observable: object = None
    derivative_step: float | None = None
    derivative: str = "auto"
    hermiticity_tol: float = 1e-8
    compatibility_tol: float = 1e-8
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        ket = as_vector(self.initial_ket, name="initial ket")
        if not np.any(ket):
            raise ValueError("initial ket must be nonzero")
        object.__setattr__(self, "initial_ket", ket)
        if self.t1 < self.t0:
            raise ValueError("t1 must not precede t0")
        if int(self.steps) < 1:
            raise StepSizeUnderflow("at least one step is required")
        object.__setattr__(self, "steps", int(self.steps))
        if self.derivative not in ("auto", "exact", "finite_difference"):
            raise ValueError(f"unknown derivative mode {self.derivative!r}")

    @property
    def dim(self):
        return self.initial_ket.shape[0]

    @property
    def step(self):
        return (self.t1 - self.t0) / self.steps

    @property
    def fd_step(self):
        if self.derivative_step is not None:
            return float(self.derivative_step)
        horizon = self.t1 - self.t0
        return 1e-6 * (horizon if horizon > 0 else 1.0)

    def times(self):
        return np.linspace(self.t0, self.t1, self.steps + 1)

    def frozen(self):
        """Copy with every operator's time dependence pinned at t0."""
        return TimeDependentScenario(
            hamiltonian=self.hamiltonian.frozen(self.t0),
            omega=self.omega.frozen(self.t0),
            t0=self.t0,
            t1=self.t1,
            initial_ket=self.initial_ket,
            steps=self.steps,
            observable=None if self.observable is None else self.observable.frozen(self.t0),
            derivative_step=self.derivative_step,
            derivative=self.derivative,
            hermiticity_tol=self.hermiticity_tol,
            compatibility_tol=self.compatibility_tol,
        )


# ---------------------------------------------------------------- sampling

@dataclass(frozen=True)
class _Samples:
    t: np.ndarray
    H: np.ndarray
    omega: np.ndarray
    omega_inv: np.ndarray
    omega_dot: np.ndarray


def _omega_derivative(sc, t):
    mode = sc.derivative
    has_exact = hasattr(sc.omega, "derivative_at")
    if mode == "exact" or (mode == "auto" and has_exact):
        if not has_exact:
            raise ValueError("omega provides no exact derivative")
        return sc.omega.derivative_at(t)
    if not getattr(sc.omega, "depends_on_time", True):
        return np.zeros(np.shape(t) + (sc.dim, sc.dim), dtype=complex)
    h = sc.fd_step
    return (sc.omega.at(t + h) - sc.omega.at(t - h)) / (2 * h)


def _invert(omega):
    cond = np.linalg.cond(omega)
    if np.any(~np.isfinite(cond)) or np.any(cond > OMEGA_COND_LIMIT):
        worst = float(np.max(np.where(np.isfinite(cond), cond, np.inf)))
        raise SingularOmega(f"Omega(t) is singular or ill-conditioned (cond = {worst:.3e})")
    return np.linalg.inv(omega)


def sample(sc, t):
    """H, Omega, Omega^{-1} and dOmega/dt at time(s) ``t`` (arrays gain a leading axis)."""
    t = np.asarray(t, dtype=float)
    H = sc.hamiltonian.at(t)
    omega = sc.omega.at(t)
    if H.shape[-1] != sc.dim or omega.shape[-1] != sc.dim:
        raise DimensionMismatch("H, Omega and the initial ket must share one dimension")
    return _Samples(t, H, omega, _invert(omega), _omega_derivative(sc, t))


def _half_grid(sc):
    key = "half_grid"
    if key not in sc._cache:
        n = sc.steps
        t = np.linspace(sc.t0, sc.t1, 2 * n + 1)
        sc._cache[key] = sample(sc, t)
    return sc._cache[key]


def generator(sc, t):
    """H_gen(t) = H(t) - i Omega^{-1}(t) dOmega/dt."""
    s = sample(sc, t)
    return s.H - 1j * s.omega_inv @ s.omega_dot


def generator_gap(sc, t):
    """max-abs entry of H_gen(t) - H(t)."""
    s = sample(sc, np.atleast_1d(t))
    gap = np.max(np.abs(s.omega_inv @ s.omega_dot), axis=(-2, -1))
    return gap if np.ndim(t) else float(gap[0])


def generator_observability_residual(sc, t):
    """max |Theta H_gen - H_gen^dagger Theta|; nonzero once Omega moves."""
    s = sample(sc, t)
    g = s.H - 1j * s.omega_inv @ s.omega_dot
    theta = dagger(s.omega) @ s.omega
    return max_abs(theta @ g - dagger(g) @ theta)


# ---------------------------------------------------------------- RK4

def _rk4_step_matrices(a_start, a_mid, a_end, h):
    """Step matrices P_k of classical RK4 for y' = -i A(t) y (batched over k)."""
    n = a_start.shape[-1]
    eye = np.eye(n, dtype=complex)
    k1 = -1j * a_start
    k2 = -1j * a_mid @ (eye + 0.5 * h * k1)
    k3 = -1j * a_mid @ (eye + 0.5 * h * k2)
    k4 = -1j * a_end @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _propagate(step_mats, y0):
    out = np.empty((step_mats.shape[0] + 1,) + y0.shape, dtype=complex)
    out[0] = y0
    y = y0
    for k, p in enumerate(step_mats):
        y = p @ y
        out[k + 1] = y
    return out


def _integrate(sc, a_half, y0):
    h = sc.step
    if sc.t1 > sc.t0 and h <= 4 * np.finfo(float).eps * max(1.0, abs(sc.t0), abs(sc.t1)):
        raise StepSizeUnderflow(f"step {h:.3e} is below floating-point resolution")
    steps = _rk4_step_matrices(a_half[0:-1:2], a_half[1::2], a_half[2::2], h)
    return _propagate(steps, np.asarray(y0, dtype=complex))


# ---------------------------------------------------------------- results

@dataclass(frozen=True)
class EvolutionTrajectory:
    times: np.ndarray
    kets: np.ndarray
    ketkets: np.ndarray
    physical_norms: np.ndarray
    norm_imaginary: np.ndarray
    expectations: np.ndarray | None = None

    @property
    def norm_drift(self):
        return float(np.max(np.abs(self.physical_norms - self.physical_norms[0])))


@dataclass(frozen=True)
class OperatorTrajectory:
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class QuasistationarityReport:
    exists: bool
    common_family_dim: int
    basis: tuple
    certificate: np.ndarray | None = None


def _pushforward(s):
    return s.omega @ s.H @ s.omega_inv


def evolve_textbook(sc):
    """u(t) from i du/dt = h(t) u, u(t0) = I; h must be Hermitian at every node."""
    s = _half_grid(sc)
    h = _pushforward(s)
    scale = max(1.0, max_abs(h))
    defect = np.max(np.abs(h - dagger(h)))
    if defect > sc.hermiticity_tol * scale:
        raise NonHermitianPushforward(
            f"Omega H Omega^-1 is not Hermitian (max defect {defect:.3e})"
        )
    h = 0.5 * (h + dagger(h))
    u = _integrate(sc, h, np.eye(sc.dim, dtype=complex))
    return OperatorTrajectory(s.t[::2], u)


def evolve_doublet(sc):
    """Integrate the ket and ketket equations independently.

    The ket starts from the initial ket, the ketket from Theta(t0) times it.
    The ketket equation uses H_gen^dagger, the adjoint generator that keeps
    |Phi>> = Theta(t)|Phi> along the flow.
    """
    s = _half_grid(sc)
    gen = s.H - 1j * s.omega_inv @ s.omega_dot
    ket0 = sc.initial_ket
    theta0 = dagger(s.omega[0]) @ s.omega[0]
    kets = _integrate(sc, gen, ket0)
    ketkets = _integrate(sc, dagger(gen), theta0 @ ket0)
    norms = np.einsum("ti,ti->t", ketkets.conj(), kets)
    expectations = None
    if sc.observable is not None:
        lam = sc.observable.at(s.t[::2])
        num = np.einsum("ti,tij,tj->t", ketkets.conj(), lam, kets)
        expectations = (num / norms).real
    return EvolutionTrajectory(
        s.t[::2], kets, ketkets, norms.real, norms.imag, expectations
    )


def evolve_operators(sc):
    """U_R(t) and U_L^dagger(t), both starting from the identity.

    i dU_R/dt = -Omega^{-1} (i dOmega/dt) U_R + H U_R
    i dU_L^dagger/dt = H^dagger U_L^dagger + (i dOmega^dagger/dt) (Omega^{-1})^dagger U_L^dagger
    """
    s = _half_grid(sc)
    eye = np.eye(sc.dim, dtype=complex)
    a_right = -s.omega_inv @ (1j * s.omega_dot) + s.H
    a_left = dagger(s.H) + (1j * dagger(s.omega_dot)) @ dagger(s.omega_inv)
    times = s.t[::2]
    return (
        OperatorTrajectory(times, _integrate(sc, a_right, eye)),
        OperatorTrajectory(times, _integrate(sc, a_left, eye)),
    )


def node_samples(sc):
    """Samples at the integration nodes (every other half-grid point)."""
    s = _half_grid(sc)
    return _Samples(s.t[::2], s.H[::2], s.omega[::2], s.omega_inv[::2], s.omega_dot[::2])


def validate_scenario(sc):
    """Check that H(t) is quasi-Hermitian w.r.t. Theta(t) = Omega^dagger Omega at every node."""
    s = node_samples(sc)
    theta = dagger(s.omega) @ s.omega
    resid = np.max(np.abs(dagger(s.H) @ theta - theta @ s.H), axis=(-2, -1))
    scale = np.maximum(1.0, np.max(np.abs(theta), axis=(-2, -1)) * np.max(np.abs(s.H), axis=(-2, -1)))
    bad = resid > sc.compatibility_tol * scale
    if np.any(bad):
        k = int(np.argmax(bad))
        raise IncompatibleMetric(
            f"H(t)^dagger Theta(t) != Theta(t) H(t) at t = {s.t[k]:.6g} "
            f"(residual {resid[k]:.3e})"
        )
    return float(np.max(resid))


# ---------------------------------------------------------------- quasistationarity

def _coefficient_grid(k, rng):
    if k <= 4:
        values = (-2.0, -1.0, 0.0, 1.0, 2.0)
        for c in itertools.product(values, repeat=k):
            if any(c):
                yield np.array(c)
    else:
        for _ in range(4096):
            yield rng.standard_normal(k)


def quasistationarity_check(sc, sample_times=None, tol=1e-10, positivity_tol=1e-10):
    """Is there one time-independent positive Theta admissible for every H(t_k)?

    The metric families of all sampled H(t_k) are intersected (stacked
    nullspace).  A positive-definite member is then searched among the
    basis elements and their combinations on a coarse coefficient grid
    (random directions beyond four dimensions).  The search is heuristic: a
    missing certificate is reported as ``exists=False``.
    """
    if sample_times is None:
        sample_times = np.linspace(sc.t0, sc.t1, 5)
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.size < 2:
        raise ValueError("at least two sample times are required")
    hs = sc.hamiltonian.at(sample_times)
    family = solve_common_intertwining(list(hs), tol)
    if family.size == 0:
        return QuasistationarityReport(False, 0, ())
    rng = np.random.default_rng(0)
    for coeffs in _coefficient_grid(family.size, rng):
        theta = family.combine(coeffs)
        w = np.linalg.eigvalsh(0.5 * (theta + dagger(theta)))
        if w[0] > positivity_tol * max(1.0, w[-1]):
            return QuasistationarityReport(True, family.size, family.basis, theta)
    return QuasistationarityReport(False, family.size, family.basis)
