"""Scenario pipeline: build operators, construct Omega(t), integrate, tabulate."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    NotPositiveDefinite,
    QuasiHermitianError,
    StageError,
    UnsupportedFormat,
)
from .evolution import (
    TimeDependentScenario,
    evolve_doublet,
    evolve_operators,
    evolve_textbook,
    node_samples,
    validate_scenario,
)
from .factor import cholesky_factor
from .linalg import dagger
from .metric import select_positive, solve_intertwining
from .model import (
    MatrixFunction,
    TimeDependentOperator,
    am_observable_operator,
    am_operators,
)
from .spectral import biorthogonal_decompose, omega_from_mu

STAGES = ("parse", "model", "metric", "evolution")


@dataclass(frozen=True)
class ResultTable:
    columns: tuple
    rows: tuple

    def __post_init__(self):
        cols = tuple(self.columns)
        rows = tuple(tuple(float(v) for v in row) for row in self.rows)
        if not cols or cols[0] != "t":
            raise ValueError("first column must be 't'")
        for row in rows:
            if len(row) != len(cols):
                raise ValueError("row length does not match the header")
            if not all(math.isfinite(v) for v in row):
                raise ValueError("table values must be finite")
        times = [row[0] for row in rows]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "rows", rows)

    def column(self, name):
        k = self.columns.index(name)
        return np.array([row[k] for row in self.rows])


# ---------------------------------------------------------------- building

def _entries(spec_entries, dim):
    return tuple(
        tuple(spec_entries.get((j, k), "0") for k in range(dim)) for j in range(dim)
    )


def _z_text(sc):
    if sc.metric.from_lambda:
        a, p, q, d, r = (f"({sc.model.am[k].text})" for k in ("a", "p", "q", "d", "r"))
        return f"arccos(({p} - {q}*{r}^2)/(({a} - {d})*{r}))"
    return sc.metric.Z.text


def build_operators(sc):
    """Model stage: H(t) and the optional observable, as expression operators."""
    params = sc.parameters
    if sc.model.builtin == "am":
        am = sc.model.am
        f = am["f"].text if "f" in am else "1"
        z = _z_text(sc) if sc.metric.mode == "closed_form_Z" else "pi/2"
        hamiltonian, omega = am_operators(am["r"].text, am["beta"].text, z, f, params)
        observable = None
        if sc.model.has_observable:
            observable = am_observable_operator(
                *(am[k].text for k in ("a", "p", "q", "d")), am["beta"].text, params
            )
        return hamiltonian, observable, omega
    dim = sc.model.dim
    hamiltonian = TimeDependentOperator(_entries(sc.model.hamiltonian, dim), params)
    observable = None
    if sc.model.observable:
        observable = TimeDependentOperator(_entries(sc.model.observable, dim), params)
    return hamiltonian, observable, None


def build_omega(sc, hamiltonian, closed_form_omega):
    """Metric stage: Omega(t) according to the scenario's metric mode."""
    mode = sc.metric.mode
    tol = sc.tolerances
    if mode == "closed_form_Z":
        return closed_form_omega
    if mode == "mu_series":
        mu = sc.metric.mu

        def omega_at(t):
            system = biorthogonal_decompose(hamiltonian.at(t), reality_tol=tol["reality"])
            return omega_from_mu(system, mu).omega

        return MatrixFunction(omega_at, hamiltonian.dim, hamiltonian.depends_on_time)
    if hamiltonian.depends_on_time:
        raise DomainError("nullspace_coeffs needs a time-independent H (the basis is not smooth in t)")
    family = solve_intertwining(hamiltonian.at(sc.evolution.t0), tol["nullspace"])
    candidate = select_positive(family, sc.metric.coeffs)
    return TimeDependentOperator.constant(cholesky_factor(candidate).omega)


def check_metric_positive(scenario, rel=1e-12):
    """Theta(t) = Omega^dagger Omega must be positive definite at every node."""
    s_omega = scenario.omega.at(scenario.times())
    theta = dagger(s_omega) @ s_omega
    w = np.linalg.eigvalsh(0.5 * (theta + dagger(theta)))
    bad = w[:, 0] <= rel * np.maximum(w[:, -1], 1e-300)
    if np.any(bad):
        k = int(np.argmax(bad))
        t = scenario.times()[k]
        raise NotPositiveDefinite(
            f"Theta(t) is not positive definite at t = {t:.6g} (min eigenvalue {w[k, 0]:.3e})"
        )


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except (QuasiHermitianError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def build_scenario(sc):
    """Run the model and metric stages; returns a validated TimeDependentScenario."""
    hamiltonian, observable, closed_omega = _stage("model", build_operators, sc)
    _stage("model", hamiltonian.at, np.linspace(sc.evolution.t0, sc.evolution.t1, 3))
    omega = _stage("metric", build_omega, sc, hamiltonian, closed_omega)
    ev = sc.evolution

    def make():
        return TimeDependentScenario(
            hamiltonian=hamiltonian,
            omega=omega,
            t0=ev.t0,
            t1=ev.t1,
            initial_ket=ev.initial_ket,
            steps=ev.steps,
            observable=observable,
            derivative_step=ev.derivative_step,
            derivative=ev.derivative,
            hermiticity_tol=sc.tolerances["hermiticity"],
            compatibility_tol=sc.tolerances["compatibility"],
        )

    scenario = _stage("model", make)
    _stage("metric", check_metric_positive, scenario)
    _stage("metric", validate_scenario, scenario)
    return scenario


# ---------------------------------------------------------------- running

def _quantities(sc, scenario):
    requested = sc.output.quantities
    if requested is None:
        requested = ("norm", "generator_gap", "expectation", "consistency")
        if scenario.observable is None:
            requested = tuple(q for q in requested if q != "expectation")
    if "expectation" in requested and scenario.observable is None:
        raise DomainError("quantity 'expectation' needs an observable in [model]")
    return requested


def _integrate(scenario, quantities):
    traj = evolve_doublet(scenario)
    samples = node_samples(scenario)
    cols = {"t": traj.times}
    if "norm" in quantities:
        cols["physical_norm"] = traj.physical_norms
    if "generator_gap" in quantities:
        cols["generator_gap"] = np.max(np.abs(samples.omega_inv @ samples.omega_dot), axis=(-2, -1))
    if "expectation" in quantities:
        cols["expectation"] = traj.expectations
    if "consistency" in quantities:
        u_right, u_left = evolve_operators(scenario)
        u = evolve_textbook(scenario)
        ket0 = scenario.initial_ket
        theta = dagger(samples.omega) @ samples.omega
        via_textbook = np.einsum(
            "tij,tjk,k->ti", samples.omega_inv, u.values, samples.omega[0] @ ket0
        )
        eye = np.eye(scenario.dim)
        cols["residual_ket_UR"] = np.max(np.abs(u_right.values @ ket0 - traj.kets), axis=-1)
        cols["residual_ket_textbook"] = np.max(np.abs(via_textbook - traj.kets), axis=-1)
        cols["residual_UR_textbook"] = np.max(np.abs(u_right.values @ ket0 - via_textbook), axis=-1)
        cols["residual_ketket"] = np.max(
            np.abs(np.einsum("tij,tj->ti", theta, traj.kets) - traj.ketkets), axis=-1
        )
        cols["residual_left_right"] = np.max(
            np.abs(theta @ u_right.values - u_left.values @ theta[0]), axis=(-2, -1)
        )
        cols["unitarity_defect"] = np.max(
            np.abs(dagger(u.values) @ u.values - eye), axis=(-2, -1)
        )
    return cols


def run_scenario(sc):
    """Full pipeline for a parsed ScenarioFile; returns a ResultTable.

    Failures are raised as StageError tagged with "model", "metric" or
    "evolution".
    """
    scenario = build_scenario(sc)
    quantities = _stage("model", _quantities, sc, scenario)
    cols = _stage("evolution", _integrate, scenario, quantities)
    stride = sc.output.stride
    names = tuple(cols)
    n = len(cols["t"])
    keep = list(range(0, n, stride))
    if keep[-1] != n - 1:
        keep.append(n - 1)
    if scenario.t1 == scenario.t0:
        keep = [0]
    rows = tuple(tuple(float(cols[c][k]) for c in names) for k in keep)
    return ResultTable(names, rows)


# ---------------------------------------------------------------- output

def _fmt(v):
    return format(v, ".16e")


def emit(table, format="csv"):
    """Serialize a ResultTable; CSV uses 17 significant digits, JSON exact reprs."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue().encode("utf-8")
    if format == "json":
        payload = {"columns": list(table.columns), "rows": [list(r) for r in table.rows]}
        return (json.dumps(payload, allow_nan=False) + "\n").encode("utf-8")
    raise UnsupportedFormat(f"unsupported output format {format!r} (csv or json)")


def load_table(data, format="csv"):
    """Inverse of :func:`emit`."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if format == "json":
        payload = json.loads(text)
        return ResultTable(tuple(payload["columns"]), tuple(tuple(r) for r in payload["rows"]))
    if format == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        return ResultTable(tuple(header), tuple(tuple(float(v) for v in row) for row in reader))
    raise UnsupportedFormat(f"unsupported output format {format!r} (csv or json)")
