"""Expression language for ``F(s, z1, ..., zk)`` over complex scalars.

Grammar, loosest binding first::

    expr    := term (('+' | '-') term)*
    term    := power (('*' | '/') power)*
    power   := unary ('^' power)?          # right associative
    unary   := '-' unary | primary
    primary := NUMBER | 'i' | 's' | 'z' INDEX | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := exp | log | sin | cos

Unary minus binds tighter than ``^``, so ``-z1^2`` is ``(-z1)^2``.
Log and non-integer powers use principal branches.

Evaluation goes through generated Python code: one scalar version built on
``cmath`` and one vectorized version built on numpy.
"""

from __future__ import annotations

import cmath
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import TransferError


class ParseError(TransferError):
    kind = "parse"

    def __init__(self, position: int, message: str):
        super().__init__(f"{message} (at offset {position})")
        self.position = position
        self.message = message


class EvalError(TransferError):
    kind = "eval"


class Expr:
    """Base node. Subclasses are frozen dataclasses, so ``==`` is structural."""

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: complex


@dataclass(frozen=True)
class VarS(Expr):
    pass


@dataclass(frozen=True)
class VarZ(Expr):
    index: int


@dataclass(frozen=True)
class Binary(Expr):
    left: Expr
    right: Expr


class Add(Binary):
    pass


class Sub(Binary):
    pass


class Mul(Binary):
    pass


class Div(Binary):
    pass


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True)
class Unary(Expr):
    arg: Expr


class Neg(Unary):
    pass


class Exp(Unary):
    pass


class Log(Unary):
    pass


class Sin(Unary):
    pass


class Cos(Unary):
    pass


FUNCTIONS = {"exp": Exp, "log": Log, "sin": Sin, "cos": Cos}
_BINOPS = {Add: "+", Sub: "-", Mul: "*", Div: "/"}

_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(pos, f"unexpected character {text[pos]!r}")
        tokens.append((m.lastgroup, m.group(m.lastgroup), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, k: int):
        self.text = text
        self.k = k
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, op: str):
        kind, val, pos = self.tok
        if kind != "op" or val != op:
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(pos, f"expected {op!r}, found {what}")
        self.i += 1

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ParseError(pos, f"unexpected {val!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.power()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.take()[1]
            rhs = self.power()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def power(self) -> Expr:
        base = self.unary()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.take()
            return Pow(base, self.power())
        return base

    def unary(self) -> Expr:
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.primary()

    def primary(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(complex(float(val)))
        if kind == "name":
            if val == "i":
                return Const(1j)
            if val == "s":
                return VarS()
            m = re.fullmatch(r"z(\d+)", val)
            if m:
                idx = int(m.group(1))
                if not 1 <= idx <= self.k:
                    raise ParseError(pos, f"variable {val} outside z1..z{self.k}")
                return VarZ(idx)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[val](arg)
            raise ParseError(pos, f"unknown name {val!r}")
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise ParseError(pos, "unexpected end of input")
        raise ParseError(pos, f"unexpected {val!r}")


def parse(text: str, k: int) -> Expr:
    """Parse ``text`` as a function of ``s, z1..zk``."""
    if k < 1:
        raise ValueError("order k must be at least 1")
    if not text or not text.strip():
        raise ParseError(0, "empty expression")
    return _Parser(text, k).parse()


def _const_text(c: complex) -> str:
    if c == 1j:
        return "i"
    if c.imag == 0 and c.real >= 0:
        return repr(c.real)
    # Only reachable for trees built by hand; still valid input.
    return f"({c.real!r} + {c.imag!r}*i)"


def to_text(e: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, VarS):
        return "s"
    if isinstance(e, VarZ):
        return f"z{e.index}"
    if isinstance(e, Binary):
        return f"({to_text(e.left)} {_BINOPS[type(e)]} {to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)} ^ {to_text(e.exponent)})"
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    return f"{type(e).__name__.lower()}({to_text(e.arg)})"


def max_index(e: Expr) -> int:
    if isinstance(e, VarZ):
        return e.index
    if isinstance(e, Binary):
        return max(max_index(e.left), max_index(e.right))
    if isinstance(e, Pow):
        return max(max_index(e.base), max_index(e.exponent))
    if isinstance(e, Unary):
        return max_index(e.arg)
    return 0


def depends_on_z(e: Expr) -> bool:
    return max_index(e) > 0


def _integer_exponent(e: Expr) -> int | None:
    if isinstance(e, Const) and e.value.imag == 0 and e.value.real.is_integer():
        if abs(e.value.real) <= 64:
            return int(e.value.real)
    return None


def _codegen(e: Expr, lib: str) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, VarS):
        return "s"
    if isinstance(e, VarZ):
        return f"z{e.index}"
    if isinstance(e, Binary):
        return f"({_codegen(e.left, lib)} {_BINOPS[type(e)]} {_codegen(e.right, lib)})"
    if isinstance(e, Pow):
        n = _integer_exponent(e.exponent)
        if n is not None:
            return f"({_codegen(e.base, lib)} ** {n})"
        return f"_cpow({_codegen(e.base, lib)}, {_codegen(e.exponent, lib)})"
    if isinstance(e, Neg):
        return f"(-{_codegen(e.arg, lib)})"
    return f"{lib}.{type(e).__name__.lower()}({_codegen(e.arg, lib)})"


def _cpow_scalar(a, b):
    if a == 0:
        if b.real > 0:
            return 0j
        raise ZeroDivisionError("0 raised to a non-positive power")
    return cmath.exp(b * cmath.log(a))


def _cpow_array(a, b):
    return np.exp(b * np.log(a))


@dataclass(frozen=True, eq=False)
class Compiled:
    """An expression compiled for fast repeated evaluation."""

    expr: Expr
    k: int
    scalar: object = field(repr=False)
    vector: object = field(repr=False)

    def __call__(self, s: complex, z: Sequence[complex]) -> complex:
        return evaluate(self, s, z)


def compile_expr(e: Expr, k: int) -> Compiled:
    if max_index(e) > k:
        raise ValueError(f"expression uses z{max_index(e)} but order is {k}")
    args = ", ".join(["s"] + [f"z{i}" for i in range(1, k + 1)])
    ns_s = {"cmath": cmath, "_cpow": _cpow_scalar}
    ns_v = {"np": np, "_cpow": _cpow_array}
    exec(f"def f({args}):\n    return {_codegen(e, 'cmath')}\n", ns_s)
    exec(f"def f({args}):\n    return {_codegen(e, 'np')}\n", ns_v)
    return Compiled(e, k, ns_s["f"], ns_v["f"])


def evaluate(f: Compiled, s: complex, z: Sequence[complex]) -> complex:
    """Evaluate at one point; raises :class:`EvalError` on any failure."""
    if len(z) != f.k:
        raise ValueError(f"expected {f.k} z-values, got {len(z)}")
    try:
        v = complex(f.scalar(s, *z))
    except ZeroDivisionError as exc:
        raise EvalError(f"division by zero at s={s!r}, z={list(z)!r}") from exc
    except (ValueError, OverflowError) as exc:
        raise EvalError(f"{exc} at s={s!r}, z={list(z)!r}") from exc
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise EvalError(f"non-finite result {v!r} at s={s!r}, z={list(z)!r}")
    return v


def evaluate_many(f: Compiled, s, z: np.ndarray) -> np.ndarray:
    """Vectorized evaluation; ``z`` has shape ``(..., k)``, ``s`` broadcasts."""
    z = np.asarray(z, dtype=complex)
    s = np.asarray(s, dtype=complex)
    cols = [z[..., i] for i in range(f.k)]
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore")
        out = f.vector(s, *cols)
    # A z-free expression returns a scalar; give it the full sample shape.
    out = np.asarray(out, dtype=complex) + np.zeros(np.broadcast(s, *cols).shape)
    if not np.all(np.isfinite(out)):
        raise EvalError("non-finite value (division by zero, log 0 or overflow) in sampled evaluation")
    return out


def eval_expr(e: Expr, s: complex, z: Sequence[complex]) -> complex:
    """One-off evaluation of an uncompiled tree."""
    return evaluate(compile_expr(e, max(len(z), 1)), s, z)


def partial(f: Compiled, i: int, s: complex, z: Sequence[complex], h: float = 1e-6) -> complex:
    """Central difference for dF/dz_i (``i`` is 1-based)."""
    if not 1 <= i <= f.k:
        raise ValueError(f"partial index {i} outside 1..{f.k}")
    zp = list(z)
    zm = list(z)
    zp[i - 1] += h
    zm[i - 1] -= h
    return (evaluate(f, s, zp) - evaluate(f, s, zm)) / (2 * h)


def partials_many(f: Compiled, s, z: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """All k central differences at once; result has shape ``(..., k)``."""
    z = np.asarray(z, dtype=complex)
    out = []
    for i in range(f.k):
        step = np.zeros(f.k, dtype=complex)
        step[i] = h
        out.append((evaluate_many(f, s, z + step) - evaluate_many(f, s, z - step)) / (2 * h))
    return np.stack(out, axis=-1)
