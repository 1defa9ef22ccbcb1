"""Finite-dimensional quasi-Hermitian quantum mechanics.

Metric operators for non-Hermitian Hamiltonians with real spectra, the
Dyson maps that factor them, biorthogonal spectral data, and time
evolution when the metric itself depends on time.
"""
from .errors import *  # noqa: F401,F403
from .evolution import (
    TimeDependentScenario,
    evolve_doublet,
    evolve_operators,
    evolve_textbook,
    generator,
    quasistationarity_check,
)
from .expressions import Expression
from .factor import (
    MappingFactorization,
    cholesky_factor,
    hermitian_root_factor,
    map_ket,
    pullback_hamiltonian,
    pushforward_hamiltonian,
)
from .metric import (
    MetricCandidate,
    MetricFamily,
    positivity_certificate,
    select_positive,
    solve_intertwining,
)
from .model import (
    AMModelParams,
    TimeDependentOperator,
    am_hamiltonian,
    am_metric,
    am_physical_hamiltonian,
    evaluate,
)
from .observables import (
    AMObservableParams,
    am_constraint_residual,
    am_observable,
    reconstruct_Z,
    solve_compatibility,
)
from .report import ResultTable, emit, run_scenario
from .scenario import parse_scenario
from .spectral import (
    BiorthogonalSystem,
    MuParameters,
    biorthogonal_decompose,
    metric_from_mu,
    omega_from_mu,
    spectral_resolution_check,
)

__version__ = "0.1.0"
