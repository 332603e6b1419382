"""Scalar expression language for metric and map components.

Grammar (loosest to tightest)::

    sum     := product (("+" | "-") product)*
    product := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # right-associative
    atom    := number | x1..x16 | pi | e | func "(" sum ")" | "(" sum ")"

so ``-x1^2`` is ``-(x1^2)`` and ``2^-x1`` is ``2^(-x1)``. Evaluation is
exact floating point; derivatives come from :class:`~chenricci.jets.Jet`
propagation, never from differencing.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ParseError, UnboundVariableError, UnknownFunctionError
from .jets import Jet

MAX_VARIABLES = 16
FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}
_VAR_RE = re.compile(r"x([1-9][0-9]?)\Z")


# --- AST -----------------------------------------------------------------


class Expr:
    """Base class of expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, slots=True)
class Var(Expr):
    name: str

    @property
    def index(self) -> int:
        """Zero-based coordinate index (``x1`` -> 0)."""
        return int(self.name[1:]) - 1


@dataclass(frozen=True, slots=True)
class Const(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True, slots=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Call(Expr):
    func: str
    arg: Expr


Expression = Expr


def free_variables(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    if isinstance(e, Call):
        return free_variables(e.arg)
    return frozenset()


def variable_name(i: int) -> str:
    """Name of the zero-based coordinate ``i``."""
    return f"x{i + 1}"


# --- tokenizer -----------------------------------------------------------

_NUMBER_RE = re.compile(r"(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OPERAND_START = frozenset({"number", "identifier", "'('", "'-'"})


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # "num", "ident", "op", "eof"
    text: str
    offset: int  # byte offset


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    byte = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            width = 1
        elif m := _NUMBER_RE.match(text, i):
            tokens.append(_Token("num", m.group(), byte))
            width = len(m.group())
        elif m := _IDENT_RE.match(text, i):
            tokens.append(_Token("ident", m.group(), byte))
            width = len(m.group())
        elif c in "+-*/^()":
            tokens.append(_Token("op", c, byte))
            width = 1
        else:
            raise ParseError(f"unexpected character {c!r}", byte, _OPERAND_START)
        byte += len(text[i : i + width].encode("utf-8"))
        i += width
    tokens.append(_Token("eof", "", byte))
    return tokens


# --- Pratt parser --------------------------------------------------------

# binding powers; ^ is right-associative and binds tighter than unary minus
_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_PREFIX_MINUS = 30


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.peek()
        if tok.text != text or tok.kind != "op":
            raise ParseError(f"unexpected {_describe(tok)}", tok.offset, frozenset({f"'{text}'"}))
        self.advance()

    def parse(self) -> Expr:
        e = self.expression(0)
        tok = self.peek()
        if tok.kind != "eof":
            expected = frozenset({"operator", "end of input"})
            raise ParseError(f"unexpected {_describe(tok)}", tok.offset, expected)
        return e

    def expression(self, rbp: int) -> Expr:
        left = self.nud(self.advance())
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _INFIX or _INFIX[tok.text] <= rbp:
                return left
            self.advance()
            if tok.text == "^":
                right = self.expression(_INFIX["^"] - 1)
            else:
                right = self.expression(_INFIX[tok.text])
            left = BinOp(tok.text, left, right)

    def nud(self, tok: _Token) -> Expr:
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal {tok.text!r} overflows", tok.offset)
            return Num(value)
        if tok.kind == "ident":
            return self.identifier(tok)
        if tok.kind == "op" and tok.text == "-":
            return Neg(self.expression(_PREFIX_MINUS))
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {_describe(tok)}", tok.offset, _OPERAND_START)

    def identifier(self, tok: _Token) -> Expr:
        name = tok.text
        nxt = self.peek()
        if nxt.kind == "op" and nxt.text == "(":
            if name not in FUNCTIONS:
                raise UnknownFunctionError(f"unknown function {name!r}", tok.offset)
            self.advance()
            arg = self.expression(0)
            self.expect(")")
            return Call(name, arg)
        if name in FUNCTIONS:
            raise ParseError(f"function {name!r} must be called", nxt.offset, frozenset({"'('"}))
        if name in CONSTANTS:
            return Const(name)
        m = _VAR_RE.match(name)
        if m and 1 <= int(m.group(1)) <= MAX_VARIABLES:
            return Var(name)
        raise ParseError(f"unknown identifier {name!r}", tok.offset, frozenset({"x1..x16", "pi", "e"}))


def _describe(tok: _Token) -> str:
    return "end of input" if tok.kind == "eof" else repr(tok.text)


@lru_cache(maxsize=4096)
def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""
    return _Parser(text).parse()


# --- printer -------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY_PREC = 3
_POW_PREC = 4
_ATOM_PREC = 5


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _POW_PREC if e.op == "^" else _PREC[e.op]
    if isinstance(e, Neg):
        return _UNARY_PREC
    return _ATOM_PREC


def to_text(e: Expr) -> str:
    """Print with the minimal parentheses that re-parse to the same tree."""
    if isinstance(e, Num):
        v = e.value
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.operand)
        return f"-({inner})" if _prec(e.operand) < _UNARY_PREC else f"-{inner}"
    assert isinstance(e, BinOp)
    lhs, rhs = to_text(e.left), to_text(e.right)
    if e.op == "^":
        if _prec(e.left) < _ATOM_PREC:
            lhs = f"({lhs})"
        if _prec(e.right) < _UNARY_PREC:
            rhs = f"({rhs})"
        return f"{lhs}^{rhs}"
    p = _PREC[e.op]
    if _prec(e.left) < p:
        lhs = f"({lhs})"
    if _prec(e.right) <= p:
        rhs = f"({rhs})"
    return f"{lhs} {e.op} {rhs}"


# --- evaluation ----------------------------------------------------------

MODES = ("value", "gradient", "hessian")


@dataclass(frozen=True)
class EvalContext:
    """Variable bindings plus differentiation mode.

    Derivatives are taken with respect to ``wrt`` (default: every bound
    variable, ordered by coordinate index).
    """

    bindings: Mapping[str, float]
    mode: str = "value"
    wrt: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @classmethod
    def at(cls, point: Sequence[float], mode: str = "value") -> "EvalContext":
        names = tuple(variable_name(i) for i in range(len(point)))
        return cls(dict(zip(names, map(float, point))), mode, names)

    def variables(self) -> tuple[str, ...]:
        if self.wrt is not None:
            return self.wrt
        return tuple(sorted(self.bindings, key=lambda s: (len(s), s)))


@dataclass(frozen=True)
class EvalResult:
    value: float
    gradient: np.ndarray | None = None
    hessian: np.ndarray | None = None


def _unary(func: str, u: float) -> tuple[float, float, float]:
    """Value, first and second derivative of ``func`` at ``u``."""
    if func == "sin":
        s, c = math.sin(u), math.cos(u)
        return s, c, -s
    if func == "cos":
        s, c = math.sin(u), math.cos(u)
        return c, -s, -c
    if func == "tan":
        c = math.cos(u)
        if c == 0.0:
            raise DomainError(f"tan undefined at {u!r}")
        t = math.tan(u)
        sec2 = 1.0 + t * t
        return t, sec2, 2.0 * t * sec2
    if func == "exp":
        try:
            v = math.exp(u)
        except OverflowError:
            raise DomainError(f"exp overflows at {u!r}") from None
        return v, v, v
    if func == "log":
        if u <= 0.0:
            raise DomainError(f"log of non-positive argument {u!r}")
        return math.log(u), 1.0 / u, -1.0 / (u * u)
    if func == "sqrt":
        if u < 0.0:
            raise DomainError(f"sqrt of negative argument {u!r}")
        r = math.sqrt(u)
        if r == 0.0:
            return 0.0, math.inf, -math.inf
        return r, 0.5 / r, -0.25 / (r * u)
    if func == "sinh" or func == "cosh":
        try:
            s, c = math.sinh(u), math.cosh(u)
        except OverflowError:
            raise DomainError(f"{func} overflows at {u!r}") from None
        return (s, c, s) if func == "sinh" else (c, s, c)
    if func == "tanh":
        t = math.tanh(u)
        d = 1.0 - t * t
        return t, d, -2.0 * t * d
    if func == "atan":
        d = 1.0 / (1.0 + u * u)
        return math.atan(u), d, -2.0 * u * d * d
    if func == "abs":
        return abs(u), math.copysign(1.0, u) if u != 0.0 else 0.0, 0.0
    raise UnknownFunctionError(f"unknown function {func!r}", 0)


def _apply(func: str, u):
    if isinstance(u, Jet):
        f0, f1, f2 = _unary(func, u.v)
        if not math.isfinite(f1) or (u.h is not None and not math.isfinite(f2)):
            raise DomainError(f"{func} is not differentiable at {u.v!r}")
        return u.chain(f0, f1, f2)
    return _unary(func, u)[0]


def _reciprocal(u):
    if isinstance(u, Jet):
        if u.v == 0.0:
            raise DomainError("division by zero")
        r = 1.0 / u.v
        return u.chain(r, -r * r, 2.0 * r * r * r)
    if u == 0.0:
        raise DomainError("division by zero")
    return 1.0 / u


def _power(base, exponent):
    if isinstance(exponent, Jet):
        bv = base.v if isinstance(base, Jet) else base
        if bv <= 0.0:
            raise DomainError(f"non-constant power of non-positive base {bv!r}")
        return _apply("exp", exponent * _apply("log", base))
    k = float(exponent)
    if isinstance(base, Jet):
        u = base.v
        if k == 0.0:
            return base * 0.0 + 1.0
        if not k.is_integer() and u < 0.0:
            raise DomainError(f"fractional power of negative base {u!r}")
        if u == 0.0 and (k < 0.0 or (not k.is_integer() and (k < 1.0 or (k < 2.0 and base.h is not None)))):
            raise DomainError(f"power {k!r} not differentiable at 0")
        if k.is_integer() and k >= 0:
            f0 = u ** int(k)
            f1 = k * u ** int(k - 1) if k >= 1 else 0.0
            f2 = k * (k - 1) * u ** int(k - 2) if k >= 2 else 0.0
        else:
            f0 = u**k
            f1 = k * u ** (k - 1)
            f2 = k * (k - 1) * u ** (k - 2)
        return base.chain(f0, f1, f2)
    if base == 0.0 and k < 0.0:
        raise DomainError("division by zero in negative power")
    if base < 0.0 and not k.is_integer():
        raise DomainError(f"fractional power of negative base {base!r}")
    try:
        return float(base) ** k
    except OverflowError:
        raise DomainError("power overflows") from None


Compiled = Callable[[Sequence], object]


@lru_cache(maxsize=4096)
def _compile(e: Expr) -> Compiled:
    if isinstance(e, Num):
        v = e.value
        return lambda env: v
    if isinstance(e, Const):
        v = CONSTANTS[e.name]
        return lambda env: v
    if isinstance(e, Var):
        i = e.index
        return lambda env: env[i]
    if isinstance(e, Neg):
        f = _compile(e.operand)
        return lambda env: -f(env)
    if isinstance(e, Call):
        f = _compile(e.arg)
        name = e.func
        return lambda env: _apply(name, f(env))
    assert isinstance(e, BinOp)
    a, b = _compile(e.left), _compile(e.right)
    if e.op == "+":
        return lambda env: a(env) + b(env)
    if e.op == "-":
        return lambda env: a(env) - b(env)
    if e.op == "*":
        return lambda env: a(env) * b(env)
    if e.op == "/":
        return lambda env: a(env) * _reciprocal(b(env))
    return lambda env: _power(a(env), b(env))


def _finite(result):
    v = result.v if isinstance(result, Jet) else result
    if not math.isfinite(v):
        raise DomainError("evaluation produced a non-finite value")
    if isinstance(result, Jet):
        if not np.all(np.isfinite(result.g)) or (result.h is not None and not np.all(np.isfinite(result.h))):
            raise DomainError("derivative evaluation produced a non-finite value")
    return result


def evaluate(e: Expr, ctx: EvalContext) -> EvalResult:
    """Evaluate ``e`` under ``ctx``; gradient/Hessian follow ``ctx.mode``."""
    missing = free_variables(e) - set(ctx.bindings)
    if missing:
        raise UnboundVariableError(f"unbound variable(s): {', '.join(sorted(missing))}")
    wrt = ctx.variables()
    env: list = [0.0] * MAX_VARIABLES
    for name, value in ctx.bindings.items():
        m = _VAR_RE.match(name)
        if m:
            env[int(m.group(1)) - 1] = float(value)
    if ctx.mode != "value":
        second = ctx.mode == "hessian"
        for k, name in enumerate(wrt):
            idx = int(name[1:]) - 1
            env[idx] = Jet.variable(ctx.bindings[name], k, len(wrt), second)
    out = _finite(_compile(e)(env))
    n = len(wrt)
    if ctx.mode == "value":
        return EvalResult(float(out.v if isinstance(out, Jet) else out))
    if not isinstance(out, Jet):  # constant expression
        return EvalResult(float(out), np.zeros(n), np.zeros((n, n)) if ctx.mode == "hessian" else None)
    return EvalResult(out.v, out.g.copy(), None if out.h is None else out.h.copy())


def evaluate_jet(e: Expr, env: Sequence) -> object:
    """Low-level evaluation on a prepared environment of floats or jets."""
    return _finite(_compile(e)(env))
