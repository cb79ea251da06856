"""Coefficient mini-language: parsing, printing and evaluation of functions of t.

Grammar (EBNF, whitespace insignificant, identifiers case-sensitive)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | "+" unary | power ;
    power   = atom [ "^" unary ] ;              (* right-associative *)
    atom    = number | "t" | "pi" | "e"
            | func "(" expr { "," expr } ")"
            | "(" expr ")" ;
    func    = "exp" | "ln" | "sin" | "cos" | "abs" | "sqrt" | "min" | "max" ;
    number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
            | "." digits [ exponent ] ;

``^`` binds tighter than unary minus, so ``-t^2`` is ``-(t^2)`` while
``t^-2`` is ``t^(-2)``.
"""

from __future__ import annotations

import builtins
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "ParseError",
    "EvaluationError",
    "DomainError",
    "Singularity",
    "ScalarField",
    "parse",
    "pretty",
    "evaluate",
    "compile_expr",
    "eval",
]


class ParseError(ValueError):
    """Syntax error or unknown identifier, with the byte offset into the source."""

    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class EvaluationError(ArithmeticError):
    """Non-finite or undefined value at a point that is not a declared singularity."""


class DomainError(ValueError):
    """Evaluation requested outside the declared domain of a field."""


# --------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "t"


@dataclass(frozen=True)
class Const:
    name: str  # "pi" | "e"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "exp": 1,
    "ln": 1,
    "sin": 1,
    "cos": 1,
    "abs": 1,
    "sqrt": 1,
    "min": 2,
    "max": 2,
}

# ------------------------------------------------------------------ lexer


def _tokenize(text: str):
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            toks.append(("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("name", text[i:j], i))
            i = j
            continue
        if ch in "+-*/^(),":
            toks.append((ch, ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i, text)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def take(self, kind=None):
        tok = self.toks[self.pos]
        if kind is not None and tok[0] != kind:
            want = "end of input" if kind == "end" else repr(kind)
            got = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {want}, found {got}", tok[2], self.text)
        self.pos += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek()[0] in "+-":
            op = self.take()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind = self.peek()[0]
        if kind == "-":
            self.take()
            return Neg(self.unary())
        if kind == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, off = self.peek()
        if kind == "num":
            self.take()
            return Num(float(val))
        if kind == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if kind == "name":
            self.take()
            if val == "t":
                return Var()
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                self.take("(")
                args = [self.expr()]
                while self.peek()[0] == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                if len(args) != FUNCTIONS[val]:
                    raise ParseError(
                        f"{val} takes {FUNCTIONS[val]} argument(s), got {len(args)}", off, self.text
                    )
                return Call(val, tuple(args))
            raise ParseError(f"unknown identifier {val!r}", off, self.text)
        if kind == "end":
            raise ParseError("unexpected end of input", off, self.text)
        raise ParseError(f"unexpected token {val!r}", off, self.text)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises ParseError (carrying ``offset``) on malformed input or unknown names.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0, text or "")
    p = _Parser(text)
    node = p.expr()
    p.take("end")
    return node


# ---------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY, _POW, _ATOM = 3, 4, 5


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return _POW if e.op == "^" else _PREC[e.op]
    if isinstance(e, Neg):
        return _UNARY
    return _ATOM


def _wrap(s: str, cond: bool) -> str:
    return f"({s})" if cond else s


def _num(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def pretty(e: Expr) -> str:
    """Render an expression with the fewest parentheses that parse back to ``e``."""
    if isinstance(e, Num):
        return _num(e.value)
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(pretty(a) for a in e.args)})"
    if isinstance(e, Neg):
        return "-" + _wrap(pretty(e.operand), _prec(e.operand) < _UNARY)
    if isinstance(e, BinOp):
        if e.op == "^":
            left = _wrap(pretty(e.left), _prec(e.left) < _ATOM)
            right = _wrap(pretty(e.right), _prec(e.right) < _UNARY)
            return f"{left}^{right}"
        p = _PREC[e.op]
        left = _wrap(pretty(e.left), _prec(e.left) < p)
        right = _wrap(pretty(e.right), _prec(e.right) <= p)
        return f"{left} {e.op} {right}" if p == 1 else f"{left}*{right}" if e.op == "*" else f"{left}/{right}"
    raise TypeError(f"not an expression node: {e!r}")


# -------------------------------------------------------------- evaluation


def _pow(x: float, y: float) -> float:
    return math.pow(x, y)


_SCALAR_NS = {
    "exp": math.exp,
    "ln": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "abs": abs,
    "sqrt": math.sqrt,
    "min": min,
    "max": max,
    "_pow": _pow,
    "pi": math.pi,
    "e": math.e,
}


def _vpow(x, y):
    return np.power(np.asarray(x, dtype=float), y)


_ARRAY_NS = {
    "exp": np.exp,
    "ln": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "min": np.minimum,
    "max": np.maximum,
    "_pow": _vpow,
    "pi": math.pi,
    "e": math.e,
}


def _py(e) -> str:
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_py(e.operand)})"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(_py(a) for a in e.args)})"
    if e.op == "^":
        return f"_pow({_py(e.left)}, {_py(e.right)})"
    return f"({_py(e.left)} {e.op} {_py(e.right)})"


def compile_expr(e: Expr, vectorized: bool = False) -> Callable:
    """Compile to a Python function of ``t``; ``vectorized`` targets numpy arrays."""
    ns = dict(_ARRAY_NS if vectorized else _SCALAR_NS, __builtins__={})
    return builtins.eval(f"lambda t: {_py(e)}", ns)  # noqa: S307


def evaluate(e: Expr, t: float) -> float:
    """Evaluate ``e`` at ``t``; raises EvaluationError for undefined or non-finite values."""
    try:
        v = compile_expr(e)(float(t))
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise EvaluationError(f"{pretty(e)} undefined at t={t!r}: {exc}") from None
    if not math.isfinite(v):
        raise EvaluationError(f"{pretty(e)} is not finite at t={t!r}")
    return v


# ------------------------------------------------------------ scalar fields


@dataclass(frozen=True)
class Singularity:
    """A removable singular point: inside ``[point - half_width, point + half_width]``
    the ``replacement`` expression (or constant) is evaluated instead."""

    point: float
    half_width: float
    replacement: Expr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """An evaluable real function of t on ``[lo, hi]`` (``hi`` may be ``inf``)."""

    expr: Expr
    lo: float = 0.0
    hi: float = math.inf
    singularities: tuple = ()
    source: str = ""
    _fn: Callable = field(init=False, repr=False)
    _vfn: Callable = field(init=False, repr=False)
    _rep: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_fn", compile_expr(self.expr))
        object.__setattr__(self, "_vfn", compile_expr(self.expr, vectorized=True))
        reps = tuple(
            (s.point - s.half_width, s.point + s.half_width, compile_expr(s.replacement), compile_expr(s.replacement, True))
            for s in self.singularities
        )
        object.__setattr__(self, "_rep", reps)
        if not self.source:
            object.__setattr__(self, "source", pretty(self.expr))

    @classmethod
    def from_text(
        cls,
        text: str,
        lo: float = 0.0,
        hi: float = math.inf,
        singularities: Sequence = (),
    ) -> "ScalarField":
        """Build a field from source; singularities are ``(point, half_width, replacement)``
        with the replacement given as text or as a number."""
        sings = []
        for point, hw, rep in singularities:
            rep_expr = parse(rep) if isinstance(rep, str) else Num(float(rep))
            sings.append(Singularity(float(point), float(hw), rep_expr))
        return cls(parse(text), float(lo), float(hi), tuple(sings), source=text)

    @classmethod
    def constant(cls, value: float, lo: float = 0.0, hi: float = math.inf) -> "ScalarField":
        return cls(Num(float(value)), lo, hi)

    def __call__(self, t: float) -> float:
        if not (self.lo <= t <= self.hi):
            raise DomainError(f"t={t!r} outside domain [{self.lo}, {self.hi}] of {self.source}")
        fn = self._fn
        for left, right, rfn, _ in self._rep:
            if left <= t <= right:
                fn = rfn
                break
        try:
            v = fn(t)
        except (ValueError, ZeroDivisionError, OverflowError):
            v = math.nan
        if not math.isfinite(v):
            raise EvaluationError(f"{self.source} is not finite at t={t!r}")
        return v

    def vector(self, ts) -> np.ndarray:
        """Evaluate on an array of points with the same singularity handling."""
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < self.lo or ts.max() > self.hi):
            raise DomainError(f"points outside domain [{self.lo}, {self.hi}] of {self.source}")
        with np.errstate(all="ignore"):
            out = np.broadcast_to(np.asarray(self._vfn(ts), dtype=float), ts.shape).copy()
            for left, right, _, rvfn in self._rep:
                mask = (ts >= left) & (ts <= right)
                if mask.any():
                    out[mask] = np.broadcast_to(np.asarray(rvfn(ts[mask]), dtype=float), ts[mask].shape)
        if not np.all(np.isfinite(out)):
            bad = ts[~np.isfinite(out)][0]
            raise EvaluationError(f"{self.source} is not finite at t={bad!r}")
        return out

    def with_domain(self, lo: float, hi: float) -> "ScalarField":
        return ScalarField(self.expr, lo, hi, self.singularities, self.source)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        sings = self.singularities + other.singularities
        if sings:
            raise ValueError("cannot add fields carrying removable singularities")
        return ScalarField(BinOp("+", self.expr, other.expr), lo, hi)


def eval(f: ScalarField, t: float) -> float:  # noqa: A001 - mirrors the operation name
    """Evaluate a field at ``t`` (domain-checked, singularity-aware)."""
    return f(t)
