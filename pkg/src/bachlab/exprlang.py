"""Analytic expression language for metric and complex-structure components.

A small Pratt-parsed grammar over four chart coordinates and named scalar
parameters:

* binary ``+ - * /`` and ``^`` (literal exponent only, right-assoc, binds
  tightest), unary ``-``, parentheses;
* calls of the analytic catalog ``sqrt exp log sin cos sinh cosh tanh atan``;
* whitespace-insensitive; errors carry byte offsets.

Parsed expressions are immutable trees.  They evaluate to jets either one at
a time (:func:`eval_jet`) or, for whole component sets, through a compiled
instruction tape executed by the active kernel backend (:class:`Tape`).

The module also owns :class:`MetricDefinition` -- the JSON metric-file schema:

    {"name": str, "coords": [4 str], "params": {str: num},
     "g": {"ij": expr-str for 0<=i<=j<=3},
     "J": optional {"ij": expr-str for all 16},
     "domain": {"center": [4 num], "radius": num}}

``J`` components are the endomorphism entries J^i_j ((JX)^i = J^i_j X^j).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _ops
from .backend import kernels
from .jets import Jet, JetDomainError, ncoeff

FUNCTIONS = tuple(sorted(_ops.FN_NAMES))


class ExprError(ValueError):
    """Parse or validation failure; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


# ---------------------------------------------------------------------------
# expression trees


@dataclass(frozen=True)
class Expr:
    offset: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Lit(Expr):
    value: float = 0.0


@dataclass(frozen=True)
class Var(Expr):
    name: str = ""
    axis: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Param(Expr):
    name: str = ""


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr = None


@dataclass(frozen=True)
class Bin(Expr):
    op: str = ""
    lhs: Expr = None
    rhs: Expr = None


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr = None
    exponent: float = 1.0


@dataclass(frozen=True)
class Call(Expr):
    fn: str = ""
    arg: Expr = None


# ---------------------------------------------------------------------------
# lexer / Pratt parser

_TWO = ()


def _tokens(src: str):
    i, n = 0, len(src)
    out = []
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^()":
            out.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_e = False
            while j < n and (src[j].isdigit() or src[j] == "." or
                             (src[j] in "eE" and not seen_e) or
                             (src[j] in "+-" and j > i and src[j - 1] in "eE")):
                if src[j] in "eE":
                    seen_e = True
                j += 1
            try:
                val = float(src[i:j])
            except ValueError:
                raise ExprError(f"bad numeric literal {src[i:j]!r}", i) from None
            out.append(("num", val, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            out.append(("name", src[i:j], i))
            i = j
            continue
        raise ExprError(f"unexpected character {c!r}", i)
    out.append(("end", None, n))
    return out


class _Parser:
    def __init__(self, src: str, coords, param_names):
        self.toks = _tokens(src)
        self.pos = 0
        self.coords = tuple(coords)
        self.params = frozenset(param_names)

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t[0] != kind:
            raise ExprError(f"expected {kind!r}, found {t[1]!r}", t[2])
        return t

    # precedence: + - (10) < * / (20) < unary - (30) < ^ (40, right-assoc)
    def parse_expr(self, min_bp=0):
        lhs = self.parse_prefix()
        while True:
            kind, val, off = self.peek()
            if kind in "+-":
                bp = 10
            elif kind in "*/":
                bp = 20
            else:
                break
            if bp < min_bp:
                break
            self.next()
            rhs = self.parse_expr(bp + 1)
            lhs = Bin(off, kind, lhs, rhs)
        return lhs

    def parse_prefix(self):
        kind, val, off = self.next()
        if kind == "num":
            node = Lit(off, float(val))
        elif kind == "-":
            # unary minus binds looser than ^: -x^2 == -(x^2)
            arg = self.parse_prefix()
            node = arg.arg if isinstance(arg, Neg) else Neg(off, arg)
            return self._postfix_pow(node)
        elif kind == "(":
            node = self.parse_expr(0)
            self.expect(")")
        elif kind == "name":
            if self.peek()[0] == "(":
                if val not in _ops.FN_NAMES:
                    raise ExprError(f"unknown function {val!r}", off)
                self.next()
                arg = self.parse_expr(0)
                self.expect(")")
                node = Call(off, val, arg)
            elif val in self.coords:
                node = Var(off, val, self.coords.index(val))
            elif val in self.params:
                node = Param(off, val)
            else:
                raise ExprError(f"unknown identifier {val!r}", off)
        else:
            raise ExprError(f"unexpected token {val!r}", off)
        return self._postfix_pow(node)

    def _postfix_pow(self, node):
        kind, _val, off = self.peek()
        if kind != "^":
            return node
        self.next()
        exp = self._pow_exponent()
        return Pow(off, node, exp)

    def _pow_exponent(self):
        # literal exponent, optionally signed or parenthesized; right-assoc
        kind, val, off = self.next()
        sign = 1.0
        while kind == "-":
            sign = -sign
            kind, val, off = self.next()
        if kind == "(":
            e = self._pow_exponent()
            self.expect(")")
            return sign * e
        if kind != "num":
            raise ExprError("exponent must be a numeric literal", off)
        base = sign * float(val)
        if self.peek()[0] == "^":
            self.next()
            return base ** self._pow_exponent()
        return base


DEFAULT_COORDS = ("x", "y", "z", "w")


def parse(source: str, coords=DEFAULT_COORDS, params=()) -> Expr:
    """Parse a source string into an expression tree (with constant folding)."""
    p = _Parser(source, coords, params)
    e = p.parse_expr(0)
    kind, val, off = p.peek()
    if kind != "end":
        raise ExprError(f"trailing input {val!r}", off)
    return fold(e)


# ---------------------------------------------------------------------------
# printing, folding, calculus


def to_source(e: Expr) -> str:
    """Render a tree back to parseable source (canonical parenthesization)."""
    def prec(x):
        if isinstance(x, Bin):
            return 10 if x.op in "+-" else 20
        if isinstance(x, Neg):
            return 30
        if isinstance(x, Pow):
            return 40
        return 100

    def wrap(child, minp):
        s = to_source(child)
        return f"({s})" if prec(child) < minp else s

    if isinstance(e, Lit):
        v = e.value
        return repr(v) if v >= 0 else f"({v!r})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Neg):
        return f"-{wrap(e.arg, 31)}"
    if isinstance(e, Bin):
        lp = 10 if e.op in "+-" else 20
        return f"{wrap(e.lhs, lp)} {e.op} {wrap(e.rhs, lp + 1)}"
    if isinstance(e, Pow):
        ex = e.exponent
        es = repr(ex) if ex >= 0 else f"({ex!r})"
        return f"{wrap(e.base, 41)}^{es}"
    if isinstance(e, Call):
        return f"{e.fn}({to_source(e.arg)})"
    raise TypeError(f"not an Expr: {e!r}")


def fold(e: Expr) -> Expr:
    """Constant folding plus the identities with 0 and 1."""
    if isinstance(e, (Lit, Var, Param)):
        return e
    if isinstance(e, Neg):
        a = fold(e.arg)
        if isinstance(a, Lit):
            return Lit(e.offset, -a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(e.offset, a)
    if isinstance(e, Bin):
        l, r = fold(e.lhs), fold(e.rhs)
        if isinstance(l, Lit) and isinstance(r, Lit):
            if e.op == "+":
                return Lit(e.offset, l.value + r.value)
            if e.op == "-":
                return Lit(e.offset, l.value - r.value)
            if e.op == "*":
                return Lit(e.offset, l.value * r.value)
            if e.op == "/" and r.value != 0.0:
                return Lit(e.offset, l.value / r.value)
        if e.op == "+":
            if _is_zero(l):
                return r
            if _is_zero(r):
                return l
        elif e.op == "-":
            if _is_zero(r):
                return l
            if _is_zero(l):
                return fold(Neg(e.offset, r))
        elif e.op == "*":
            if _is_zero(l) or _is_zero(r):
                return Lit(e.offset, 0.0)
            if _is_one(l):
                return r
            if _is_one(r):
                return l
        elif e.op == "/":
            if _is_zero(l):
                return Lit(e.offset, 0.0)
            if _is_one(r):
                return l
        return Bin(e.offset, e.op, l, r)
    if isinstance(e, Pow):
        b = fold(e.base)
        if e.exponent == 1.0:
            return b
        if e.exponent == 0.0:
            return Lit(e.offset, 1.0)
        if isinstance(b, Lit):
            try:
                return Lit(e.offset, b.value**e.exponent)
            except (OverflowError, ValueError):
                pass
        return Pow(e.offset, b, e.exponent)
    if isinstance(e, Call):
        a = fold(e.arg)
        if isinstance(a, Lit):
            fn = getattr(math, e.fn if e.fn != "atan" else "atan")
            try:
                return Lit(e.offset, float(fn(a.value)))
            except ValueError:
                pass
        return Call(e.offset, e.fn, a)
    raise TypeError(f"not an Expr: {e!r}")


def _is_zero(e):
    return isinstance(e, Lit) and e.value == 0.0


def _is_one(e):
    return isinstance(e, Lit) and e.value == 1.0


def _add(a, b):
    return fold(Bin(0, "+", a, b))


def _sub(a, b):
    return fold(Bin(0, "-", a, b))


def _mul(a, b):
    return fold(Bin(0, "*", a, b))


def _div(a, b):
    return fold(Bin(0, "/", a, b))


def lit(v: float) -> Lit:
    return Lit(0, float(v))


def differentiate(e: Expr, var: str) -> Expr:
    """Exact symbolic d/d(var) of an expression tree."""
    if isinstance(e, (Lit, Param)):
        return lit(0.0)
    if isinstance(e, Var):
        return lit(1.0 if e.name == var else 0.0)
    if isinstance(e, Neg):
        return fold(Neg(0, differentiate(e.arg, var)))
    if isinstance(e, Bin):
        dl, dr = differentiate(e.lhs, var), differentiate(e.rhs, var)
        if e.op == "+":
            return _add(dl, dr)
        if e.op == "-":
            return _sub(dl, dr)
        if e.op == "*":
            return _add(_mul(dl, e.rhs), _mul(e.lhs, dr))
        # quotient rule
        num = _sub(_mul(dl, e.rhs), _mul(e.lhs, dr))
        return _div(num, Pow(0, e.rhs, 2.0))
    if isinstance(e, Pow):
        du = differentiate(e.base, var)
        return _mul(_mul(lit(e.exponent), Pow(0, e.base, e.exponent - 1.0)), du)
    if isinstance(e, Call):
        u, du = e.arg, differentiate(e.arg, var)
        table = {
            "sqrt": lambda: _div(du, _mul(lit(2.0), Call(0, "sqrt", u))),
            "exp": lambda: _mul(Call(0, "exp", u), du),
            "log": lambda: _div(du, u),
            "sin": lambda: _mul(Call(0, "cos", u), du),
            "cos": lambda: fold(Neg(0, _mul(Call(0, "sin", u), du))),
            "sinh": lambda: _mul(Call(0, "cosh", u), du),
            "cosh": lambda: _mul(Call(0, "sinh", u), du),
            "tanh": lambda: _mul(_sub(lit(1.0), Pow(0, Call(0, "tanh", u), 2.0)), du),
            "atan": lambda: _div(du, _add(lit(1.0), Pow(0, u, 2.0))),
        }
        return table[e.fn]()
    raise TypeError(f"not an Expr: {e!r}")


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace variables by expressions (chart pullbacks, rescalings)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, (Lit, Param)):
        return e
    if isinstance(e, Neg):
        return fold(Neg(e.offset, substitute(e.arg, mapping)))
    if isinstance(e, Bin):
        return fold(
            Bin(e.offset, e.op, substitute(e.lhs, mapping), substitute(e.rhs, mapping))
        )
    if isinstance(e, Pow):
        return fold(Pow(e.offset, substitute(e.base, mapping), e.exponent))
    if isinstance(e, Call):
        return fold(Call(e.offset, e.fn, substitute(e.arg, mapping)))
    raise TypeError(f"not an Expr: {e!r}")


# ---------------------------------------------------------------------------
# tape compilation


class Tape:
    """Flat instruction program evaluating a list of expressions as jets.

    Expression k's result lands in register k; scratch registers live above.
    The program is order-independent: the same tape runs at any jet order.
    """

    def __init__(self, exprs, coords, params: dict):
        self.coords = tuple(coords)
        self.param_names = tuple(sorted(params))
        self.param_values = np.array(
            [float(params[k]) for k in self.param_names], dtype=np.float64
        )
        self.n_out = len(exprs)
        instr: list[tuple[int, int, int, int]] = []
        consts: list[float] = []

        def cidx(v: float) -> int:
            consts.append(float(v))
            return len(consts) - 1

        maxdepth = [0]

        def emit(node, dst, depth):
            maxdepth[0] = max(maxdepth[0], depth)
            if isinstance(node, Lit):
                instr.append((_ops.OP_CONST, dst, cidx(node.value), 0))
            elif isinstance(node, Var):
                axis = node.axis if node.axis >= 0 else self.coords.index(node.name)
                instr.append((_ops.OP_VAR, dst, axis, 0))
            elif isinstance(node, Param):
                instr.append((_ops.OP_PARAM, dst, self.param_names.index(node.name), 0))
            elif isinstance(node, Neg):
                emit(node.arg, dst, depth)
                instr.append((_ops.OP_NEG, dst, dst, 0))
            elif isinstance(node, Bin):
                s = self.n_out + depth
                emit(node.lhs, dst, depth)
                emit(node.rhs, s, depth + 1)
                op = {
                    "+": _ops.OP_ADD,
                    "-": _ops.OP_SUB,
                    "*": _ops.OP_MUL,
                    "/": _ops.OP_DIV,
                }[node.op]
                instr.append((op, dst, dst, s))
            elif isinstance(node, Pow):
                emit(node.base, dst, depth)
                ex = node.exponent
                if float(ex).is_integer() and abs(ex) <= 32:
                    instr.append((_ops.OP_POW_INT, dst, dst, cidx(ex)))
                else:
                    instr.append((_ops.OP_POW_REAL, dst, dst, cidx(ex)))
            elif isinstance(node, Call):
                emit(node.arg, dst, depth)
                instr.append((_ops.OP_CALL, dst, dst, _ops.FN_NAMES[node.fn]))
            else:
                raise TypeError(f"not an Expr: {node!r}")

        for k, e in enumerate(exprs):
            emit(e, k, 0)
        self.instr = np.array(instr, dtype=np.int32).reshape(-1, 4)
        self.consts = np.array(consts, dtype=np.float64)
        self.nreg = self.n_out + maxdepth[0] + 1
        self.outputs = np.arange(self.n_out, dtype=np.int32)

    def evaluate(self, points: np.ndarray, order: int) -> np.ndarray:
        """Jets of every expression at a batch of points: (P, n_out, C)."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out, err = kernels.tape_eval(
            self.instr, self.consts, points, self.param_values,
            self.nreg, order, self.outputs,
        )
        if np.any(err):
            p = int(np.argmax(err != 0))
            code = int(err[p])
            if code == _ops.ERR_DIV_ZERO:
                raise ZeroDivisionError(
                    f"division by a jet with zero constant term at point {points[p]}"
                )
            fname = _ops.FN_ID_TO_NAME.get(code - _ops.ERR_DOMAIN_BASE, "?")
            raise JetDomainError(
                f"{fname}: argument outside the analytic domain at point {points[p]}"
            )
        return out


def eval_jet(e: Expr, point, params: dict | None = None, order: int = 4,
             coords=DEFAULT_COORDS) -> Jet:
    """Evaluate one expression to a jet at one chart point."""
    tape = Tape([e], coords, params or {})
    out = tape.evaluate(np.asarray(point, dtype=np.float64)[None, :], order)
    return Jet(order, out[0, 0])


def eval_scalar(e: Expr, point, params: dict | None = None) -> float:
    """Plain float evaluation (order-0 jet)."""
    return eval_jet(e, point, params, order=0).value


# ---------------------------------------------------------------------------
# metric definitions


class MetricDefinitionError(ValueError):
    pass


@dataclass
class Domain:
    center: tuple
    radius: float

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform points in the open ball (rejection-free radial sampling)."""
        d = rng.standard_normal((count, 4))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.radius * rng.random(count) ** 0.25
        return np.asarray(self.center) + d * r[:, None]


class MetricDefinition:
    """A chart, parameter table, metric components, and optional J."""

    def __init__(self, name, coords, params, g_exprs, j_exprs, domain):
        self.name = str(name)
        self.coords = tuple(coords)
        if len(self.coords) != 4 or len(set(self.coords)) != 4:
            raise MetricDefinitionError("coords must be 4 distinct names")
        self.params = dict(params)
        self.g_exprs = dict(g_exprs)      # (i, j) i<=j -> Expr
        self.j_exprs = dict(j_exprs) if j_exprs else None  # (i, j) -> Expr
        self.domain = domain
        for i in range(4):
            for j in range(i, 4):
                if (i, j) not in self.g_exprs:
                    raise MetricDefinitionError(f"missing g component {i}{j}")
        if self.j_exprs is not None and len(self.j_exprs) != 16:
            raise MetricDefinitionError("J needs all 16 components")
        self._tape = None
        self._full = None

    # -- construction ----------------------------------------------------
    @classmethod
    def from_dict(cls, d: dict) -> "MetricDefinition":
        coords = tuple(d["coords"])
        params = {str(k): float(v) for k, v in d.get("params", {}).items()}
        g = {}
        for key, src in d["g"].items():
            i, j = int(key[0]), int(key[1])
            if not 0 <= i <= j <= 3:
                raise MetricDefinitionError(f"bad g key {key!r}")
            g[(i, j)] = parse(src, coords, params)
        jmap = None
        if d.get("J"):
            jmap = {}
            for key, src in d["J"].items():
                i, j = int(key[0]), int(key[1])
                jmap[(i, j)] = parse(src, coords, params)
        dom = Domain(tuple(float(c) for c in d["domain"]["center"]),
                     float(d["domain"]["radius"]))
        return cls(d.get("name", "metric"), coords, params, g, jmap, dom)

    @classmethod
    def load(cls, path) -> "MetricDefinition":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "coords": list(self.coords),
            "params": dict(self.params),
            "g": {f"{i}{j}": to_source(e) for (i, j), e in sorted(self.g_exprs.items())},
            "domain": {"center": list(self.domain.center),
                       "radius": self.domain.radius},
        }
        if self.j_exprs is not None:
            d["J"] = {f"{i}{j}": to_source(e)
                      for (i, j), e in sorted(self.j_exprs.items())}
        return d

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    # -- evaluation --------------------------------------------------------
    def _ordered_exprs(self):
        gs = [self.g_exprs[(i, j)] for i in range(4) for j in range(i, 4)]
        js = ([self.j_exprs[(i, j)] for i in range(4) for j in range(4)]
              if self.j_exprs else [])
        return gs + js

    def tape(self) -> Tape:
        if self._tape is None:
            self._tape = Tape(self._ordered_exprs(), self.coords, self.params)
        return self._tape

    def component_jets(self, points: np.ndarray, order: int):
        """(g, J) jet arrays at a batch of points: (P,4,4,C), J or None."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = self.tape().evaluate(points, order)
        P, n = points.shape[0], ncoeff(order)
        g = np.zeros((P, 4, 4, n))
        k = 0
        for i in range(4):
            for j in range(i, 4):
                g[:, i, j] = out[:, k]
                g[:, j, i] = out[:, k]
                k += 1
        J = None
        if self.j_exprs:
            J = np.zeros((P, 4, 4, n))
            for i in range(4):
                for j in range(4):
                    J[:, i, j] = out[:, k]
                    k += 1
        return g, J

    def has_j(self) -> bool:
        return self.j_exprs is not None
