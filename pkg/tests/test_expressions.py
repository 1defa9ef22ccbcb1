import cmath
import math
import random

import numpy as np
import pytest

from quasiherm.errors import EvaluationError, ExpressionSyntaxError, UnboundParameter
from quasiherm.expressions import Expression, parse


def test_spec_examples():
    assert Expression("1 + 0.1*sin(t)").evaluate(0.0) == 1.0
    e = Expression("r*exp(i*beta)")
    for t in (0.0, 3.7):
        assert e.evaluate(t, {"r": 2.0, "beta": 0.0}) == 2.0


def test_vectorized_matches_scalar():
    e = Expression("cos(t)^2 + i*sin(2*t)/3")
    ts = np.linspace(-2, 2, 7)
    vec = e.evaluate(ts)
    assert vec.shape == (7,)
    for t, v in zip(ts, vec):
        assert v == e.evaluate(t)


@pytest.mark.parametrize(
    "text, value",
    [
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("2^-1", 0.5),
        ("(1+2)*3", 9.0),
        ("1 - 2 - 3", -4.0),
        ("8/4/2", 1.0),
        ("+3", 3.0),
        ("2*pi", 2 * math.pi),
        ("i*i", -1.0),
        ("1.5e2", 150.0),
        (".5", 0.5),
    ],
)
def test_precedence(text, value):
    assert Expression(text).evaluate() == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize(
    "text, column",
    [
        ("1 + * 2", 5),
        ("sin 2", 5),
        ("(1 + 2", 7),
        ("1 + 2)", 6),
        ("foo(1)", 1),
        ("1 $ 2", 3),
        ("", 1),
        ("2 3", 3),
        ("cos()", 5),
    ],
)
def test_syntax_errors_are_positioned(text, column):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse(text)
    assert info.value.column == column


def test_unbound_parameter():
    with pytest.raises(UnboundParameter, match="omega"):
        Expression("omega*t").evaluate(1.0)


@pytest.mark.parametrize(
    "text",
    ["1/0", "sqrt(-1)", "log(0)", "log(-2)", "arccos(1.5)", "(-8)^(1/3)", "0^-1", "1/(t - t)"],
)
def test_domain_faults(text):
    with pytest.raises(EvaluationError):
        Expression(text).evaluate(0.3)


def test_complex_arguments_use_principal_branch():
    assert Expression("sqrt(i)").evaluate() == pytest.approx(cmath.sqrt(1j))
    assert Expression("log(-1 + i)").evaluate() == pytest.approx(cmath.log(-1 + 1j))


def test_time_free_and_parameters():
    e = Expression("a*sin(b) + 3")
    assert not e.depends_on_time
    assert e.parameters == {"a", "b"}
    assert Expression("t").depends_on_time


def test_at_time_freezes():
    e = Expression("1 + 0.1*sin(t)").at_time(0.7)
    assert not e.depends_on_time
    assert e.evaluate(5.0) == pytest.approx(1 + 0.1 * math.sin(0.7), abs=1e-15)


DERIVATIVE_CASES = [
    "t^3 - 2*t",
    "sin(t)*cos(2*t)",
    "exp(-t^2)",
    "1/(1 + t^2)",
    "sqrt(1 + t^2)",
    "log(2 + sin(t))",
    "tan(t/3)",
    "arccos(0.5*sin(t))",
    "(1 + 0.1*sin(t))*exp(i*0.3*t)*cos(pi/2 + 0.2*sin(t))",
    "t^t",
    "(2 + cos(t))^(sin(t))",
    "-t",
    "a*t^2",
]


@pytest.mark.parametrize("text", DERIVATIVE_CASES)
def test_symbolic_derivative_against_central_difference(text):
    e = Expression(text)
    de = e.derivative()
    params = {"a": 1.7}
    h = 1e-5
    for t in (0.4, 1.1, 2.3):
        fd = (e.evaluate(t + h, params) - e.evaluate(t - h, params)) / (2 * h)
        assert abs(de.evaluate(t, params) - fd) < 1e-8 * max(1.0, abs(fd))


def test_derivative_of_constant_is_zero():
    assert Expression("3*a + sin(2)").derivative().evaluate(1.0, {"a": 1}) == 0


# ---------------------------------------------------------------- fuzz corpus
# Random trees rendered to text, then evaluated twice: by the library and by
# the scalar tree-walker below, which shares no code with it.

class _Domain(Exception):
    pass


def _ref_eval(tree, t, env):
    kind = tree[0]
    if kind == "num":
        return complex(tree[1])
    if kind == "t":
        return complex(t)
    if kind == "i":
        return 1j
    if kind == "var":
        return complex(env[tree[1]])
    if kind == "neg":
        return -_ref_eval(tree[1], t, env)
    if kind == "bin":
        op, a, b = tree[1], _ref_eval(tree[2], t, env), _ref_eval(tree[3], t, env)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise _Domain
            return a / b
        if op == "^":
            if a == 0 and b.imag == 0 and b.real < 0:
                raise _Domain
            if a.imag == 0 and a.real < 0 and b.imag == 0 and b.real != round(b.real):
                raise _Domain
            try:
                return a ** b
            except (OverflowError, ZeroDivisionError):
                raise _Domain
    if kind == "call":
        fn, x = tree[1], _ref_eval(tree[2], t, env)
        real = x.imag == 0
        try:
            if fn == "sin":
                return cmath.sin(x)
            if fn == "cos":
                return cmath.cos(x)
            if fn == "tan":
                if cmath.cos(x) == 0:
                    raise _Domain
                return cmath.sin(x) / cmath.cos(x)
            if fn == "exp":
                return cmath.exp(x)
            if fn == "log":
                if real and x.real <= 0:
                    raise _Domain
                return cmath.log(x)
            if fn == "sqrt":
                if real and x.real < 0:
                    raise _Domain
                return cmath.sqrt(x)
            if fn == "arccos":
                if real and abs(x.real) > 1:
                    raise _Domain
                return cmath.acos(x)
        except (OverflowError, ValueError):
            raise _Domain
    raise AssertionError(tree)


def _render(tree):
    kind = tree[0]
    if kind == "num":
        return repr(tree[1])
    if kind in ("t", "i"):
        return kind
    if kind == "var":
        return tree[1]
    if kind == "neg":
        return f"-({_render(tree[1])})"
    if kind == "bin":
        return f"({_render(tree[2])}){tree[1]}({_render(tree[3])})"
    return f"{tree[1]}({_render(tree[2])})"


def _random_tree(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        roll = rng.random()
        if roll < 0.45:
            return ("num", round(rng.uniform(0, 3), 3))
        if roll < 0.7:
            return ("t",)
        if roll < 0.9:
            return ("var", rng.choice(["a", "b"]))
        return ("i",)
    roll = rng.random()
    if roll < 0.15:
        return ("neg", _random_tree(rng, depth - 1))
    if roll < 0.55:
        op = rng.choice(["+", "-", "*", "/", "^"])
        right = _random_tree(rng, depth - 1)
        if op == "^":
            right = ("num", float(rng.choice([0.5, 1, 2, 3, -1])))
        return ("bin", op, _random_tree(rng, depth - 1), right)
    fn = rng.choice(["sin", "cos", "tan", "exp", "log", "sqrt", "arccos"])
    return ("call", fn, _random_tree(rng, depth - 1))


def test_fuzz_against_reference_evaluator():
    rng = random.Random(20240611)
    env = {"a": 0.7, "b": -1.3}
    compared = domain = 0
    for _ in range(1000):
        tree = _random_tree(rng, 4)
        text = _render(tree)
        t = rng.uniform(-2, 2)
        try:
            expected = _ref_eval(tree, t, env)
            if not cmath.isfinite(expected):
                raise _Domain
        except _Domain:
            with pytest.raises(EvaluationError):
                Expression(text).evaluate(t, env)
            domain += 1
            continue
        got = Expression(text).evaluate(t, env)
        assert abs(got - expected) <= 1e-12 * max(abs(expected), 1e-300), text
        compared += 1
    assert compared > 700
