"""Scenario files: a small sectioned ``key = value`` format.

Example::

    [model]
    builtin = am
    r = 1 + 0.1*sin(t)
    beta = 0.3*t

    [metric]
    closed_form_Z = pi/2 + 0.2*sin(t)

    [evolution]
    t0 = 0
    t1 = 10
    steps = 10000
    initial_ket = (1, 0), (0, 0)

The full key reference is in the README.  Every failure is reported as a
:class:`ScenarioError` carrying the 1-based line and column.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConflictingMetricModes,
    EvaluationError,
    ExpressionSyntaxError,
    MissingSection,
    ScenarioError,
    ScenarioSyntaxError,
)
from .expressions import RESERVED, Expression

SECTIONS = ("model", "parameters", "metric", "evolution", "tolerances", "output")
REQUIRED_SECTIONS = ("model", "metric", "evolution")
METRIC_MODES = ("closed_form_Z", "mu_series", "nullspace_coeffs")
AM_OBSERVABLE_KEYS = ("a", "p", "q", "d")
QUANTITIES = ("norm", "generator_gap", "expectation", "consistency")
TOLERANCE_DEFAULTS = {
    "compatibility": 1e-8,
    "hermiticity": 1e-8,
    "reality": 1e-8,
    "nullspace": 1e-10,
}

_SECTION_RE = re.compile(r"^\s*\[\s*([^\]]*?)\s*\]\s*$")
_KEY_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)(\s*\[\s*(\d+)\s*,\s*(\d+)\s*\])?\s*=")


@dataclass(frozen=True)
class Entry:
    value: str
    line: int
    column: int  # 1-based column where the value text starts


@dataclass
class ModelSpec:
    builtin: str | None = None
    dim: int = 2
    am: dict = field(default_factory=dict)        # r, beta, f, a, p, q, d -> Expression
    hamiltonian: dict = field(default_factory=dict)  # (j, k) -> Expression
    observable: dict = field(default_factory=dict)

    @property
    def has_observable(self):
        if self.builtin == "am":
            return all(k in self.am for k in AM_OBSERVABLE_KEYS)
        return bool(self.observable)


@dataclass
class MetricSpec:
    mode: str
    Z: Expression | None = None
    from_lambda: bool = False
    mu: tuple = ()
    coeffs: tuple = ()


@dataclass
class EvolutionSpec:
    t0: float
    t1: float
    steps: int
    initial_ket: np.ndarray
    stepper: str = "rk4"
    derivative: str = "auto"
    derivative_step: float | None = None


@dataclass
class OutputSpec:
    path: str | None = None
    format: str = "csv"
    quantities: tuple | None = None
    stride: int = 1


@dataclass
class ScenarioFile:
    model: ModelSpec
    metric: MetricSpec
    evolution: EvolutionSpec
    parameters: dict
    tolerances: dict
    output: OutputSpec
    lines: dict = field(default_factory=dict, repr=False)  # (section, key) -> Entry


# ---------------------------------------------------------------- raw structure

def _strip_comment(line):
    k = line.find("#")
    return line if k < 0 else line[:k]


def _read_sections(text):
    sections = {}
    current = None
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group(1)
            if name not in SECTIONS:
                raise ScenarioSyntaxError(f"unknown section [{name}]", lineno, line.index("[") + 1)
            if name in sections:
                raise ScenarioSyntaxError(f"section [{name}] appears twice", lineno, line.index("[") + 1)
            sections[name] = {}
            current = name
            continue
        m = _KEY_RE.match(line)
        if not m:
            col = len(line) - len(line.lstrip()) + 1
            raise ScenarioSyntaxError("expected 'key = value' or '[section]'", lineno, col)
        if current is None:
            raise ScenarioSyntaxError("key outside of any section", lineno, m.start(1) + 1)
        key = m.group(1)
        if m.group(2):
            key = (key, int(m.group(3)), int(m.group(4)))
        value = line[m.end():]
        lead = len(value) - len(value.lstrip())
        value = value.strip()
        if key in sections[current]:
            raise ScenarioSyntaxError(f"duplicate key {_key_name(key)!r}", lineno, m.start(1) + 1)
        if not value:
            raise ScenarioSyntaxError(f"empty value for {_key_name(key)!r}", lineno, m.end() + 1)
        sections[current][key] = Entry(value, lineno, m.end() + lead + 1)
    return sections, len(lines)


def _key_name(key):
    return key if isinstance(key, str) else f"{key[0]}[{key[1]},{key[2]}]"


# ---------------------------------------------------------------- value parsers

def _expression(entry, text=None, offset=0):
    text = entry.value if text is None else text
    try:
        return Expression(text)
    except ExpressionSyntaxError as exc:
        raise ScenarioSyntaxError(exc.message, entry.line, entry.column + offset + exc.column - 1) from None


def _constant(entry, params, text=None, offset=0, real=True):
    expr = _expression(entry, text, offset)
    if expr.depends_on_time:
        raise ScenarioSyntaxError("value must not depend on t", entry.line, entry.column + offset)
    missing = expr.parameters - params.keys()
    if missing:
        raise ScenarioSyntaxError(
            f"unbound parameter(s): {', '.join(sorted(missing))}", entry.line, entry.column + offset
        )
    try:
        value = expr.evaluate(0.0, params)
    except EvaluationError as exc:
        raise ScenarioSyntaxError(str(exc), entry.line, entry.column + offset) from None
    if real:
        if value.imag != 0:
            raise ScenarioSyntaxError("value must be real", entry.line, entry.column + offset)
        return value.real
    return value


def _split_list(entry):
    parts = []
    start = 0
    for piece in entry.value.split(","):
        stripped = piece.strip()
        offset = start + (len(piece) - len(piece.lstrip()))
        if not stripped:
            raise ScenarioSyntaxError("empty list item", entry.line, entry.column + start)
        parts.append((stripped, offset))
        start += len(piece) + 1
    return parts


def _integer(entry, name, minimum=1):
    try:
        value = int(entry.value)
    except ValueError:
        raise ScenarioSyntaxError(f"{name} must be an integer", entry.line, entry.column) from None
    if value < minimum:
        raise ScenarioSyntaxError(f"{name} must be at least {minimum}", entry.line, entry.column)
    return value


def _top_level_split(text):
    """Split on commas outside parentheses; returns (piece, offset) pairs."""
    pieces, depth, start = [], 0, 0
    for k, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            pieces.append((text[start:k], start))
            start = k + 1
    pieces.append((text[start:], start))
    return pieces


def _ket(entry, params):
    text = entry.value
    values = []
    for piece, start in _top_level_split(text):
        body = piece.strip()
        off = start + len(piece) - len(piece.lstrip())
        if not (body.startswith("(") and body.endswith(")")) or len(body) < 2:
            raise ScenarioSyntaxError(
                "initial_ket must be a list of (re, im) pairs", entry.line, entry.column + off
            )
        inner = _top_level_split(body[1:-1])
        if len(inner) != 2:
            raise ScenarioSyntaxError(
                "each ket component is a (re, im) pair", entry.line, entry.column + off
            )
        parts = []
        for item, item_start in inner:
            item_off = off + 1 + item_start + len(item) - len(item.lstrip())
            if not item.strip():
                raise ScenarioSyntaxError("empty ket component", entry.line, entry.column + item_off)
            parts.append(_constant(entry, params, item.strip(), item_off))
        values.append(complex(parts[0], parts[1]))
    ket = np.array(values, dtype=complex)
    if not np.any(ket):
        raise ScenarioSyntaxError("initial ket must be nonzero", entry.line, entry.column)
    return ket


def _float(entry, params, name, positive=False):
    value = _constant(entry, params)
    if positive and not value > 0:
        raise ScenarioSyntaxError(f"{name} must be positive", entry.line, entry.column)
    return value


# ---------------------------------------------------------------- sections

def _parse_parameters(section):
    params = {}
    for key, entry in section.items():
        if not isinstance(key, str) or key in RESERVED:
            raise ScenarioSyntaxError(f"invalid parameter name {_key_name(key)!r}", entry.line, 1)
        params[key] = _constant(entry, params)
    return params


def _check_names(entry, expr, params):
    missing = expr.parameters - params.keys()
    if missing:
        raise ScenarioSyntaxError(
            f"unbound parameter(s): {', '.join(sorted(missing))}", entry.line, entry.column
        )
    return expr


def _unknown(key, entry, section):
    raise ScenarioSyntaxError(f"unknown key {_key_name(key)!r} in [{section}]", entry.line, 1)


def _parse_model(section, params, header_line):
    spec = ModelSpec()
    builtin = section.get("builtin")
    if builtin is not None:
        if builtin.value != "am":
            raise ScenarioSyntaxError(f"unknown builtin model {builtin.value!r}", builtin.line, builtin.column)
        spec.builtin = "am"
        spec.dim = 2
        for key, entry in section.items():
            if key == "builtin":
                continue
            if key not in ("r", "beta", "f", *AM_OBSERVABLE_KEYS):
                _unknown(key, entry, "model")
            spec.am[key] = _check_names(entry, _expression(entry), params)
        for key in ("r", "beta"):
            if key not in spec.am:
                raise ScenarioSyntaxError(f"builtin am model requires {key!r}", header_line, 1)
        given = [k for k in AM_OBSERVABLE_KEYS if k in spec.am]
        if given and len(given) != 4:
            entry = section[given[0]]
            raise ScenarioSyntaxError("observable needs all of a, p, q, d", entry.line, 1)
        return spec
    if "dim" not in section:
        raise ScenarioSyntaxError("model needs 'builtin = am' or 'dim'", header_line, 1)
    spec.dim = _integer(section["dim"], "dim")
    for key, entry in section.items():
        if key == "dim":
            continue
        if isinstance(key, tuple) and key[0] in ("H", "Lambda"):
            name, j, k = key
            if j >= spec.dim or k >= spec.dim:
                raise ScenarioSyntaxError(f"index ({j}, {k}) out of range for dim {spec.dim}", entry.line, 1)
            target = spec.hamiltonian if name == "H" else spec.observable
            target[(j, k)] = _check_names(entry, _expression(entry), params)
        else:
            _unknown(key, entry, "model")
    if not spec.hamiltonian:
        raise ScenarioSyntaxError("model defines no H[j,k] entries", header_line, 1)
    return spec


def _parse_metric(section, params, model, header_line):
    present = [k for k in METRIC_MODES if k in section]
    for key, entry in section.items():
        if key not in METRIC_MODES:
            _unknown(key, entry, "metric")
    if len(present) > 1:
        entry = section[present[1]]
        raise ConflictingMetricModes(
            f"metric modes {' and '.join(present)} are mutually exclusive", entry.line, 1
        )
    if not present:
        raise ScenarioSyntaxError(f"metric needs one of {', '.join(METRIC_MODES)}", header_line, 1)
    mode = present[0]
    entry = section[mode]
    if mode == "closed_form_Z":
        if model.builtin != "am":
            raise ScenarioSyntaxError("closed_form_Z requires 'builtin = am'", entry.line, 1)
        if entry.value == "from_lambda":
            if not model.has_observable:
                raise ScenarioSyntaxError("from_lambda requires a, p, q, d in [model]", entry.line, entry.column)
            return MetricSpec(mode, from_lambda=True)
        return MetricSpec(mode, Z=_check_names(entry, _expression(entry), params))
    items = _split_list(entry)
    if len(items) == 0:
        raise ScenarioSyntaxError("empty list", entry.line, entry.column)
    if mode == "mu_series":
        mu = tuple(_constant(entry, params, t, off, real=False) for t, off in items)
        if len(mu) != model.dim:
            raise ScenarioSyntaxError(f"mu_series needs {model.dim} values, got {len(mu)}", entry.line, entry.column)
        for (t, off), m in zip(items, mu):
            if m == 0:
                raise ScenarioSyntaxError("mu values must be nonzero", entry.line, entry.column + off)
        return MetricSpec(mode, mu=mu)
    coeffs = tuple(_constant(entry, params, t, off) for t, off in items)
    return MetricSpec(mode, coeffs=coeffs)


def _parse_evolution(section, params, model, header_line):
    for key, entry in section.items():
        if key not in ("t0", "t1", "steps", "initial_ket", "stepper", "derivative", "derivative_step"):
            _unknown(key, entry, "evolution")
    for key in ("t0", "t1", "steps", "initial_ket"):
        if key not in section:
            raise ScenarioSyntaxError(f"evolution requires {key!r}", header_line, 1)
    t0 = _float(section["t0"], params, "t0")
    t1 = _float(section["t1"], params, "t1")
    if t1 < t0:
        entry = section["t1"]
        raise ScenarioSyntaxError("t1 must not precede t0", entry.line, entry.column)
    steps = _integer(section["steps"], "steps")
    ket_entry = section["initial_ket"]
    ket = _ket(ket_entry, params)
    if ket.shape[0] != model.dim:
        raise ScenarioSyntaxError(
            f"initial_ket has {ket.shape[0]} components, model has dim {model.dim}",
            ket_entry.line, ket_entry.column,
        )
    spec = EvolutionSpec(t0, t1, steps, ket)
    if "stepper" in section:
        entry = section["stepper"]
        if entry.value != "rk4":
            raise ScenarioSyntaxError(f"unknown stepper {entry.value!r} (supported: rk4)", entry.line, entry.column)
    if "derivative" in section:
        entry = section["derivative"]
        if entry.value not in ("auto", "exact", "finite_difference"):
            raise ScenarioSyntaxError(
                "derivative must be auto, exact or finite_difference", entry.line, entry.column
            )
        spec.derivative = entry.value
    if "derivative_step" in section:
        spec.derivative_step = _float(section["derivative_step"], params, "derivative_step", positive=True)
    return spec


def _parse_tolerances(section, params):
    tolerances = dict(TOLERANCE_DEFAULTS)
    for key, entry in section.items():
        if key not in TOLERANCE_DEFAULTS:
            _unknown(key, entry, "tolerances")
        tolerances[key] = _float(entry, params, key, positive=True)
    return tolerances


def _parse_output(section):
    spec = OutputSpec()
    for key, entry in section.items():
        if key == "path":
            spec.path = entry.value
        elif key == "format":
            if entry.value not in ("csv", "json"):
                raise ScenarioSyntaxError("format must be csv or json", entry.line, entry.column)
            spec.format = entry.value
        elif key == "quantities":
            names = []
            for name, off in _split_list(entry):
                if name not in QUANTITIES:
                    raise ScenarioSyntaxError(f"unknown quantity {name!r}", entry.line, entry.column + off)
                names.append(name)
            spec.quantities = tuple(names)
        elif key == "stride":
            spec.stride = _integer(entry, "stride")
        else:
            _unknown(key, entry, "output")
    return spec


def parse_scenario(text):
    """Parse scenario text into a :class:`ScenarioFile`.

    Raises a :class:`ScenarioError` subclass (with line and column) for
    any problem; never anything else for string input.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioSyntaxError(f"file is not valid UTF-8 ({exc.reason})", 1, 1) from None
    sections, nlines = _read_sections(text)
    end_line = max(nlines, 1)
    for name in REQUIRED_SECTIONS:
        if name not in sections:
            raise MissingSection(f"missing required section [{name}]", end_line, 1)
    header = _section_lines(text)
    params = _parse_parameters(sections.get("parameters", {}))
    model = _parse_model(sections["model"], params, header["model"])
    metric = _parse_metric(sections["metric"], params, model, header["metric"])
    evolution = _parse_evolution(sections["evolution"], params, model, header["evolution"])
    tolerances = _parse_tolerances(sections.get("tolerances", {}), params)
    output = _parse_output(sections.get("output", {}))
    entries = {(s, k): e for s, sec in sections.items() for k, e in sec.items()}
    return ScenarioFile(model, metric, evolution, params, tolerances, output, entries)


def _section_lines(text):
    found = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(_strip_comment(raw))
        if m and m.group(1) not in found:
            found[m.group(1)] = lineno
    return found


def read_scenario(path):
    with open(path, "rb") as fh:
        return parse_scenario(fh.read())


__all__ = [
    "Entry",
    "EvolutionSpec",
    "MetricSpec",
    "ModelSpec",
    "OutputSpec",
    "ScenarioError",
    "ScenarioFile",
    "parse_scenario",
    "read_scenario",
]
