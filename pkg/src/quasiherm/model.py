"""Model definitions: the two-level Mostafazadeh example in closed form and
matrices whose entries are expressions of time.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DomainError, NotPositiveDefinite
from .expressions import Expression
from .linalg import as_matrix
from .metric import Provenance, positivity_certificate

SIN_Z_TOL = 1e-12


@dataclass(frozen=True)
class AMModelParams:
    """Parameters of the two-level model: H depends on (r, beta), its metric on (Z, f)."""

    r: float
    beta: float = 0.0
    Z: float = np.pi / 2
    f: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r == 0:
            raise DomainError("r must be a nonzero finite real")
        if not (np.isfinite(self.f) and self.f > 0):
            raise DomainError("f must be a positive finite real")
        if not (np.isfinite(self.beta) and np.isfinite(self.Z)):
            raise DomainError("beta and Z must be finite")

    @property
    def metric_is_regular(self):
        return abs(np.sin(self.Z)) > SIN_Z_TOL


def am_hamiltonian(params):
    r, b = params.r, params.beta
    if r == 0:
        raise DomainError("r must be nonzero")
    return np.array(
        [[0.0, r * np.exp(1j * b)], [np.exp(-1j * b) / r, 0.0]],
        dtype=complex,
    )


def am_metric_matrix(params):
    """f * Theta_Z with no positivity check."""
    r, b, z = params.r, params.beta, params.Z
    c = r * np.exp(1j * b) * np.cos(z)
    return params.f * np.array([[1.0, c], [np.conj(c), r * r]], dtype=complex)


def am_metric(params):
    """Closed-form metric f * Theta_Z, certified; singular (sin Z = 0) is rejected."""
    if not params.metric_is_regular:
        raise NotPositiveDefinite(
            f"Theta_Z is singular at Z = {params.Z!r} (det = f^2 r^2 sin^2 Z = 0)"
        )
    return positivity_certificate(am_metric_matrix(params), Provenance.CLOSED_FORM)


def am_omega(params):
    """Upper-triangular Omega_Z (scaled by sqrt f) and its closed-form inverse."""
    if not params.metric_is_regular:
        raise NotPositiveDefinite(f"Omega_Z is singular at Z = {params.Z!r}")
    r, b, z, f = params.r, params.beta, params.Z, params.f
    s = np.sqrt(f)
    omega = s * np.array(
        [[1.0, r * np.exp(1j * b) * np.cos(z)], [0.0, r * np.sin(z)]], dtype=complex
    )
    omega_inv = np.array(
        [[1.0, -np.exp(1j * b) / np.tan(z)], [0.0, 1.0 / (r * np.sin(z))]], dtype=complex
    ) / s
    return omega, omega_inv


def am_physical_hamiltonian(params):
    """The Hermitian partner h_Z living in the textbook space."""
    if not params.metric_is_regular:
        raise DomainError(f"h_Z is undefined at sin Z = 0 (Z = {params.Z!r})")
    z, b = params.Z, params.beta
    return np.array(
        [[np.cos(z), np.exp(1j * b) * np.sin(z)], [np.exp(-1j * b) * np.sin(z), -np.cos(z)]],
        dtype=complex,
    )


# ---------------------------------------------------------------- time dependence

@dataclass(frozen=True)
class TimeDependentOperator:
    """Square matrix of expressions in ``t`` and named real parameters.

    ``entries`` is a row-major nested sequence of expression strings (or
    :class:`Expression` objects, or numbers).  ``params`` are default
    parameter bindings, overridable per call.
    """

    entries: tuple
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        rows = tuple(tuple(_as_expression(e) for e in row) for row in self.entries)
        n = len(rows)
        if n == 0 or any(len(row) != n for row in rows):
            raise DimensionMismatch("operator entries must form a non-empty square array")
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def dim(self):
        return len(self.entries)

    @property
    def parameters(self):
        return frozenset().union(*(e.parameters for row in self.entries for e in row))

    @property
    def depends_on_time(self):
        return any(e.depends_on_time for row in self.entries for e in row)

    def at(self, t, params=None):
        """Matrix at time ``t``; shape (n, n), or (len(t), n, n) for an array of times."""
        bound = {**self.params, **(params or {})}
        t_arr = np.asarray(t, dtype=float)
        out = np.empty(t_arr.shape + (self.dim, self.dim), dtype=complex)
        for j, row in enumerate(self.entries):
            for k, e in enumerate(row):
                out[..., j, k] = e.evaluate(t_arr, bound)
        return out

    __call__ = at

    def derivative(self):
        return TimeDependentOperator(
            tuple(tuple(e.derivative() for e in row) for row in self.entries), self.params
        )

    def derivative_at(self, t, params=None):
        return self.derivative().at(t, params)

    def frozen(self, t0):
        """The same operator with every occurrence of ``t`` replaced by ``t0``."""
        return TimeDependentOperator(
            tuple(tuple(e.at_time(t0) for e in row) for row in self.entries), self.params
        )

    @classmethod
    def constant(cls, matrix):
        m = as_matrix(matrix)
        return cls(tuple(tuple(_complex_literal(v) for v in row) for row in m))


def _as_expression(e):
    if isinstance(e, Expression):
        return e
    if isinstance(e, str):
        return Expression(e)
    if isinstance(e, (int, float, complex, np.number)):
        return Expression(_complex_literal(e))
    raise TypeError(f"cannot use {e!r} as an operator entry")


def _complex_literal(v):
    v = complex(v)
    re_s, im_s = repr(v.real), repr(abs(v.imag))
    if v.imag == 0:
        return f"({re_s})"
    sign = "-" if v.imag < 0 else "+"
    return f"({re_s} {sign} {im_s}*i)"


def evaluate(op, t, params=None):
    """Entrywise evaluation of a TimeDependentOperator at time ``t``."""
    return op.at(t, params)


class MatrixFunction:
    """A matrix-valued function of time given by an arbitrary Python callable.

    Used where an operator is computed numerically (e.g. from a spectral
    decomposition) rather than written as expressions; it has no exact
    derivative, so callers fall back to finite differences.
    """

    def __init__(self, func, dim, depends_on_time=True):
        self.func = func
        self.dim = dim
        self.depends_on_time = depends_on_time

    def at(self, t, params=None):
        t_arr = np.asarray(t, dtype=float)
        if t_arr.ndim == 0:
            return np.asarray(self.func(float(t_arr)), dtype=complex)
        return np.array([self.func(float(s)) for s in t_arr.ravel()], dtype=complex).reshape(
            t_arr.shape + (self.dim, self.dim)
        )

    __call__ = at

    def frozen(self, t0):
        value = self.at(t0)
        return MatrixFunction(lambda t: value, self.dim, depends_on_time=False)


def am_operators(r, beta, Z, f="1", params=None):
    """Time-dependent H(t) and Omega_Z(t) of the two-level model.

    ``r``, ``beta``, ``Z`` and ``f`` are expression strings; the resulting
    operators carry exact symbolic time derivatives.
    """
    r, beta, Z, f = (f"({x})" for x in (r, beta, Z, f))
    hamiltonian = TimeDependentOperator(
        ((
            "0", f"{r}*exp(i*{beta})"),
            (f"exp(-i*{beta})/{r}", "0"),
        ),
        params or {},
    )
    omega = TimeDependentOperator(
        (
            (f"sqrt({f})", f"sqrt({f})*{r}*exp(i*{beta})*cos({Z})"),
            ("0", f"sqrt({f})*{r}*sin({Z})"),
        ),
        params or {},
    )
    return hamiltonian, omega


def am_observable_operator(a, p, q, d, beta, params=None):
    """Time-dependent observable [[a, p e^{i beta}], [q e^{-i beta}, d]]."""
    a, p, q, d, beta = (f"({x})" for x in (a, p, q, d, beta))
    return TimeDependentOperator(
        ((a, f"{p}*exp(i*{beta})"), (f"{q}*exp(-i*{beta})", d)), params or {}
    )


def am_metric_operator(r, beta, Z, f="1", params=None):
    r, beta, Z, f = (f"({x})" for x in (r, beta, Z, f))
    c = f"{f}*{r}*exp(i*{beta})*cos({Z})"
    cbar = f"{f}*{r}*exp(-i*{beta})*cos({Z})"
    return TimeDependentOperator(((f, c), (cbar, f"{f}*{r}^2")), params or {})
