"""Scalar expressions of time and named parameters.

Grammar (standard precedence, ``^`` right-associative, binds tighter than
unary minus)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | 't' | 'i' | 'pi' | NAME | FUNC '(' expr ')' | '(' expr ')'

``FUNC`` is one of sin, cos, tan, exp, log, sqrt, arccos. Evaluation is
vectorized: ``t`` may be a scalar or a numpy array of times.

Domain rules: an argument counts as real when its imaginary part is exactly
zero.  sqrt of a negative real, log of a non-positive real, arccos of a real
outside [-1, 1], division by zero, and a negative real base raised to a
non-integer real power all raise :class:`EvaluationError`.  Complex arguments
use the principal branch.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError, UnboundParameter

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "arccos")
RESERVED = {"t", "i", "pi", *FUNCTIONS}


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Time:
    pass


@dataclass(frozen=True)
class Imag:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.lastgroup is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.k = 0

    @property
    def tok(self):
        return self.tokens[self.k]

    def advance(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.tok
        raise ExpressionSyntaxError(message, tok[2])

    def expect(self, value):
        if self.tok[1] != value or self.tok[0] != "op":
            self.fail(f"expected {value!r}, found {self._describe(self.tok)}")
        return self.advance()

    @staticmethod
    def _describe(tok):
        return "end of expression" if tok[0] == "end" else repr(tok[1])

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            self.fail(f"unexpected {self._describe(self.tok)}")
        return node

    def expr(self):
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok[0] == "op" and self.tok[1] == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, value, col = self.tok
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "name":
            self.advance()
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if self.tok[0] == "op" and self.tok[1] == "(":
                self.fail(f"unknown function {value!r}", (kind, value, col))
            if value == "t":
                return Time()
            if value == "i":
                return Imag()
            if value == "pi":
                return Num(math.pi)
            return Var(value)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail(f"unexpected {self._describe(self.tok)}")


def parse(text):
    """Parse ``text`` into an AST; raises :class:`ExpressionSyntaxError`."""
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    return _Parser(text).parse()


# ---------------------------------------------------------------- evaluation

def _is_real(x):
    return np.imag(x) == 0


def _checked(fn, bad, message):
    def f(x):
        x = np.asarray(x, dtype=complex)
        if np.any(bad(x)):
            raise EvaluationError(message)
        return fn(x)
    return f


def _tan(x):
    c = np.cos(x)
    if np.any(c == 0):
        raise EvaluationError("tan: argument at a pole")
    return np.sin(x) / c


_FUNCS = {
    "sin": lambda x: np.sin(np.asarray(x, dtype=complex)),
    "cos": lambda x: np.cos(np.asarray(x, dtype=complex)),
    "tan": lambda x: _tan(np.asarray(x, dtype=complex)),
    "exp": lambda x: np.exp(np.asarray(x, dtype=complex)),
    "log": _checked(np.log, lambda x: _is_real(x) & (x.real <= 0), "log of a non-positive real"),
    "sqrt": _checked(np.sqrt, lambda x: _is_real(x) & (x.real < 0), "sqrt of a negative real"),
    "arccos": _checked(np.arccos, lambda x: _is_real(x) & (np.abs(x.real) > 1),
                       "arccos argument outside [-1, 1]"),
}


def _divide(a, b):
    b = np.asarray(b, dtype=complex)
    if np.any(b == 0):
        raise EvaluationError("division by zero")
    return a / b


def _power(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    b_real = _is_real(b)
    b_int = b_real & (b.real == np.round(b.real))
    if np.any((a == 0) & b_real & (b.real < 0)):
        raise EvaluationError("zero raised to a negative power")
    if np.any(_is_real(a) & (a.real < 0) & b_real & ~b_int):
        raise EvaluationError("negative base raised to a non-integer power")
    return np.power(a, b)


def _compile(node):
    if isinstance(node, Num):
        v = complex(node.value)
        return lambda t, p: v
    if isinstance(node, Time):
        return lambda t, p: t
    if isinstance(node, Imag):
        return lambda t, p: 1j
    if isinstance(node, Var):
        name = node.name
        return lambda t, p: p[name]
    if isinstance(node, Neg):
        f = _compile(node.arg)
        return lambda t, p: -f(t, p)
    if isinstance(node, Call):
        g = _FUNCS[node.fn]
        f = _compile(node.arg)
        return lambda t, p: g(f(t, p))
    if isinstance(node, BinOp):
        left, right = _compile(node.left), _compile(node.right)
        if node.op == "+":
            return lambda t, p: left(t, p) + right(t, p)
        if node.op == "-":
            return lambda t, p: left(t, p) - right(t, p)
        if node.op == "*":
            return lambda t, p: left(t, p) * right(t, p)
        if node.op == "/":
            return lambda t, p: _divide(left(t, p), right(t, p))
        if node.op == "^":
            return lambda t, p: _power(left(t, p), right(t, p))
    raise TypeError(f"not an expression node: {node!r}")


def free_names(node):
    """Names of the parameters an AST refers to."""
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Neg, Call)):
        return free_names(node.arg)
    if isinstance(node, BinOp):
        return free_names(node.left) | free_names(node.right)
    return set()


def depends_on_time(node):
    if isinstance(node, Time):
        return True
    if isinstance(node, (Neg, Call)):
        return depends_on_time(node.arg)
    if isinstance(node, BinOp):
        return depends_on_time(node.left) or depends_on_time(node.right)
    return False


# ---------------------------------------------------------------- d/dt

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _add(a, b):
    if a == _ZERO:
        return b
    if b == _ZERO:
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if b == _ZERO:
        return a
    if a == _ZERO:
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if a == _ZERO or b == _ZERO:
        return _ZERO
    if a == _ONE:
        return b
    if b == _ONE:
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if a == _ZERO:
        return _ZERO
    return BinOp("/", a, b)


def differentiate(node):
    """Symbolic time derivative of an AST (parameters are constants)."""
    if isinstance(node, Time):
        return _ONE
    if isinstance(node, (Num, Imag, Var)):
        return _ZERO
    if isinstance(node, Neg):
        d = differentiate(node.arg)
        return _ZERO if d == _ZERO else Neg(d)
    if isinstance(node, BinOp):
        u, v = node.left, node.right
        du, dv = differentiate(u), differentiate(v)
        if node.op == "+":
            return _add(du, dv)
        if node.op == "-":
            return _sub(du, dv)
        if node.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        if node.op == "/":
            # (du*v - u*dv) / v^2
            return _div(_sub(_mul(du, v), _mul(u, dv)), BinOp("^", v, Num(2.0)))
        if node.op == "^":
            if dv == _ZERO:
                return _mul(_mul(v, BinOp("^", u, _sub(v, _ONE))), du)
            # u^v * (dv*log(u) + v*du/u)
            return _mul(node, _add(_mul(dv, Call("log", u)), _div(_mul(v, du), u)))
    if isinstance(node, Call):
        u = node.arg
        du = differentiate(u)
        if du == _ZERO:
            return _ZERO
        fn = node.fn
        if fn == "sin":
            outer = Call("cos", u)
        elif fn == "cos":
            outer = Neg(Call("sin", u))
        elif fn == "tan":
            outer = BinOp("/", _ONE, BinOp("^", Call("cos", u), Num(2.0)))
        elif fn == "exp":
            outer = node
        elif fn == "log":
            return _div(du, u)
        elif fn == "sqrt":
            return _div(du, BinOp("*", Num(2.0), node))
        elif fn == "arccos":
            outer = Neg(BinOp("/", _ONE, Call("sqrt", BinOp("-", _ONE, BinOp("^", u, Num(2.0))))))
        else:  # pragma: no cover
            raise TypeError(fn)
        return _mul(outer, du)
    raise TypeError(f"not an expression node: {node!r}")


def substitute_time(node, value):
    """Replace every occurrence of ``t`` by the constant ``value``."""
    if isinstance(node, Time):
        return Num(float(value))
    if isinstance(node, Neg):
        return Neg(substitute_time(node.arg, value))
    if isinstance(node, Call):
        return Call(node.fn, substitute_time(node.arg, value))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute_time(node.left, value), substitute_time(node.right, value))
    return node


def to_text(node):
    """Render an AST back to (fully parenthesized) expression text."""
    if isinstance(node, Num):
        return repr(node.value) if node.value >= 0 else f"({node.value!r})"
    if isinstance(node, Time):
        return "t"
    if isinstance(node, Imag):
        return "i"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, Call):
        return f"{node.fn}({to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    raise TypeError(f"not an expression node: {node!r}")


class Expression:
    """A parsed, compiled scalar expression.

    >>> Expression("1 + 0.1*sin(t)").evaluate(0.0)
    (1+0j)
    """

    def __init__(self, source):
        if isinstance(source, str):
            self.text = source
            self.ast = parse(source)
        else:
            self.ast = source
            self.text = to_text(source)
        self._fn = _compile(self.ast)
        self.parameters = frozenset(free_names(self.ast))
        self.depends_on_time = depends_on_time(self.ast)

    def __repr__(self):
        return f"Expression({self.text!r})"

    def evaluate(self, t=0.0, params=None):
        """Value at time(s) ``t``; returns a complex scalar or an array shaped like ``t``."""
        params = params or {}
        missing = self.parameters - params.keys()
        if missing:
            raise UnboundParameter(f"unbound parameter(s): {', '.join(sorted(missing))}")
        t_arr = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            value = self._fn(t_arr, params)
        value = np.broadcast_to(np.asarray(value, dtype=complex), t_arr.shape)
        if not np.all(np.isfinite(value)):
            raise EvaluationError(f"expression {self.text!r} produced a non-finite value")
        return complex(value) if value.ndim == 0 else value.copy()

    def derivative(self):
        return Expression(differentiate(self.ast))

    def at_time(self, t0):
        return Expression(substitute_time(self.ast, t0))
