"""Scalar expression layer: parsing, printing, calculus, evaluation, zero tests.

Expressions are sympy trees whose symbols are all real.  The text front-end
is a small recursive-descent parser for the grammar

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | base ('^' exponent)?
    base   := number | ident | ident '(' expr ')' | '(' expr ')'
    exponent := ['-'] integer | '(' ['-'] number ['/' integer] ')'

with reserved function names sin cos sinh cosh tanh exp ln sqrt abs asin
asinh and the constant ``pi``.  Decimal literals are stored as exact
rationals.  ``to_text`` prints any expression back into the same grammar.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy
from scipy.stats import qmc

from .errors import EvalError, ExprSyntaxError, UnknownIdentifier

Expr = sympy.Expr
Point = Mapping[str, float]

FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "sinh": sympy.sinh,
    "cosh": sympy.cosh,
    "tanh": sympy.tanh,
    "exp": sympy.exp,
    "ln": sympy.log,
    "sqrt": sympy.sqrt,
    "abs": sympy.Abs,
    "asin": sympy.asin,
    "asinh": sympy.asinh,
}
CONSTANTS = {"pi": sympy.pi}
RESERVED = frozenset(FUNCTIONS) | frozenset(CONSTANTS)

_PRINT_NAMES = {
    sympy.sin: "sin",
    sympy.cos: "cos",
    sympy.sinh: "sinh",
    sympy.cosh: "cosh",
    sympy.tanh: "tanh",
    sympy.exp: "exp",
    sympy.log: "ln",
    sympy.Abs: "abs",
    sympy.asin: "asin",
    sympy.asinh: "asinh",
}

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def symbol(name: str) -> sympy.Symbol:
    """The real symbol used for coordinate or parameter ``name``."""
    return sympy.Symbol(name, real=True)


def as_expr(value) -> Expr:
    """Coerce ints, floats, strings of numbers and sympy objects to Expr.

    Floats become exact rationals through their shortest decimal repr so
    that ``0.1`` means 1/10.
    """
    if isinstance(value, sympy.Basic):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, np.integer)):
        return sympy.Integer(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite constant {value}")
        return sympy.Rational(repr(value))
    if isinstance(value, str):
        return sympy.Rational(value)
    return sympy.sympify(value)


@dataclass(frozen=True)
class Chart:
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coordinate names in {names}")
        for n in names:
            if not _IDENT.match(n) or n in RESERVED:
                raise ValueError(f"invalid coordinate name {n!r}")

    @property
    def dimension(self) -> int:
        return len(self.names)

    @property
    def symbols(self) -> tuple[sympy.Symbol, ...]:
        return tuple(symbol(n) for n in self.names)

    def index(self, var) -> int:
        name = var.name if isinstance(var, sympy.Symbol) else var
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"{name!r} is not a coordinate of {self.names}") from None


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, chart: Chart, params: Iterable[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = set(chart.names)
        self.params = set(params)
        clash = self.coords & self.params
        if clash:
            raise ValueError(f"names used both as coordinate and parameter: {sorted(clash)}")

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", self.text, pos)

    def fail(self, message: str):
        raise ExprSyntaxError(message, self.text, self.peek()[2])

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            e = e * rhs if op == "*" else e / rhs
        return e

    def factor(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return -self.factor()
        b = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return b ** self.exponent()
        return b

    def exponent(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "op" and val == "(":
            self.take()
            sign = 1
            if self.peek()[1] == "-" and self.peek()[0] == "op":
                self.take()
                sign = -1
            kind, val, pos = self.take()
            if kind != "num":
                raise ExprSyntaxError("exponent must be a rational constant", self.text, pos)
            q = sympy.Rational(val)
            if self.peek()[1] == "/" and self.peek()[0] == "op":
                self.take()
                kind, den, pos = self.take()
                if kind != "num" or not den.isdigit() or int(den) == 0:
                    raise ExprSyntaxError("bad exponent denominator", self.text, pos)
                q = q / int(den)
            self.expect(")")
            return sign * q
        sign = 1
        if kind == "op" and val == "-":
            self.take()
            sign = -1
            kind, val, pos = self.peek()
        if kind != "num" or not val.isdigit():
            raise ExprSyntaxError("exponent must be an integer or a parenthesised rational",
                                  self.text, pos)
        self.take()
        return sympy.Integer(sign * int(val))

    def base(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return sympy.Rational(val)
        if kind == "id":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise UnknownIdentifier(val, pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[val](arg)
            if val in self.coords or val in self.params:
                return symbol(val)
            if val in CONSTANTS:
                return CONSTANTS[val]
            if val in FUNCTIONS:
                raise ExprSyntaxError(f"function {val!r} needs an argument", self.text, pos)
            raise UnknownIdentifier(val, pos)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", self.text, pos)
        raise ExprSyntaxError(f"unexpected token {val!r}", self.text, pos)


def parse_expr(text: str, chart: Chart, params: Iterable[str] = ()) -> Expr:
    """Parse ``text`` into an expression over ``chart``.

    Identifiers must be chart coordinates, declared ``params`` or ``pi``.
    """
    return _Parser(text, chart, params).parse()


# ---------------------------------------------------------------- printing

_ADD, _MUL, _POW, _ATOM = 1, 2, 3, 4

_REWRITES = {
    sympy.tan: lambda a: sympy.sin(a) / sympy.cos(a),
    sympy.cot: lambda a: sympy.cos(a) / sympy.sin(a),
    sympy.sec: lambda a: 1 / sympy.cos(a),
    sympy.csc: lambda a: 1 / sympy.sin(a),
    sympy.coth: lambda a: sympy.cosh(a) / sympy.sinh(a),
    sympy.sech: lambda a: 1 / sympy.cosh(a),
    sympy.csch: lambda a: 1 / sympy.sinh(a),
    sympy.sign: lambda a: a / sympy.Abs(a),
}


def to_grammar(e: Expr) -> Expr:
    """Rewrite functions outside the grammar (tan, sec, sign, ...) into it."""
    funcs = {f.func for f in e.atoms(sympy.Function)}
    if not funcs & set(_REWRITES):
        return e
    return e.replace(lambda n: n.func in _REWRITES, lambda n: _REWRITES[n.func](n.args[0]))


def _wrap(pair, level):
    text, prec = pair
    return f"({text})" if prec < level else text


def _rational_text(q: sympy.Rational) -> tuple[str, int]:
    if q.q == 1:
        return (str(q.p), _ATOM) if q.p >= 0 else (str(q.p), _MUL)
    return (f"{q.p}/{q.q}", _MUL)


def _print(e) -> tuple[str, int]:
    if isinstance(e, sympy.Rational):
        return _rational_text(e)
    if isinstance(e, sympy.Float):
        return (repr(float(e)), _ATOM) if e >= 0 else (repr(float(e)), _MUL)
    if e is sympy.pi:
        return ("pi", _ATOM)
    if e is sympy.E:
        return ("exp(1)", _ATOM)
    if isinstance(e, sympy.Symbol):
        return (e.name, _ATOM)
    if isinstance(e, sympy.Add):
        terms = e.as_ordered_terms()
        out = _print(terms[0])[0]
        for t in terms[1:]:
            if t.could_extract_minus_sign():
                out += " - " + _wrap(_print(-t), _MUL)
            else:
                out += " + " + _wrap(_print(t), _MUL)
        return (out, _ADD)
    if isinstance(e, sympy.Mul):
        return _print_mul(e)
    if isinstance(e, sympy.Pow):
        b, x = e.args
        if not isinstance(x, sympy.Rational):
            if b is sympy.E:
                return _print(sympy.exp(x))
            raise ValueError(f"non-rational exponent cannot be printed: {e}")
        if x < 0:
            return ("1/" + _wrap(_print(b ** -x), _POW), _MUL)
        if x == sympy.Rational(1, 2):
            return (f"sqrt({_print(b)[0]})", _ATOM)
        xs = str(x.p) if x.q == 1 else f"({x.p}/{x.q})"
        return (f"{_wrap(_print(b), _ATOM)}^{xs}", _POW)
    if isinstance(e, sympy.Function):
        if e.func in _PRINT_NAMES:
            return (f"{_PRINT_NAMES[e.func]}({_print(e.args[0])[0]})", _ATOM)
        if e.func in _REWRITES:
            return _print(_REWRITES[e.func](e.args[0]))
    raise ValueError(f"expression cannot be printed in the grammar: {e}")


def _print_mul(e) -> tuple[str, int]:
    coeff, factors = e.as_coeff_mul()
    if coeff < 0:
        text, _ = _print(-e)
        return ("-" + text, _MUL)
    num, den = [], []
    if isinstance(coeff, sympy.Rational):
        if coeff.p != 1:
            num.append((str(coeff.p), _ATOM))
        if coeff.q != 1:
            den.append((str(coeff.q), _ATOM))
    elif coeff != 1:
        num.append(_print(coeff))
    for f in sympy.Mul(*factors).as_ordered_factors():
        if isinstance(f, sympy.Pow) and isinstance(f.exp, sympy.Rational) and f.exp < 0:
            den.append(_print(f.base ** -f.exp))
        else:
            num.append(_print(f))
    top = "*".join(_wrap(p, _POW) for p in num) if num else "1"
    if not den:
        return (top, _MUL)
    if len(den) == 1:
        bottom = _wrap(den[0], _POW)
    else:
        bottom = "(" + "*".join(_wrap(p, _POW) for p in den) + ")"
    return (f"{top}/{bottom}", _MUL)


def to_text(e) -> str:
    """Print ``e`` in the expression grammar; ``parse_expr`` inverts it."""
    return _print(as_expr(e))[0]


# ---------------------------------------------------------------- calculus


def _var_symbol(var) -> sympy.Symbol:
    if isinstance(var, sympy.Symbol):
        return var
    return symbol(var)


def differentiate(e: Expr, var, order: int = 1) -> Expr:
    """Exact partial derivative; sign() from abs is rewritten as u/abs(u)."""
    d = sympy.diff(as_expr(e), _var_symbol(var), order)
    return to_grammar(d)


def is_smooth(e: Expr) -> bool:
    """False when ``e`` contains abs, whose derivative has a kink."""
    return not as_expr(e).has(sympy.Abs)


SIMPLIFY_MAX_OPS = 80


def simplify(e: Expr, max_ops: int = SIMPLIFY_MAX_OPS) -> Expr:
    """Rewrite ``e`` into a simpler equal form.

    Expressions larger than ``max_ops`` operations are returned unchanged,
    which keeps the cost bounded; the numeric zero test covers those.
    Iterated to a fixed point so that the result is idempotent.
    """
    cur = to_grammar(as_expr(e))
    if cur.is_Number or cur.is_Symbol:
        return cur
    if sympy.count_ops(cur) > max_ops:
        return cur
    for _ in range(4):
        nxt = to_grammar(sympy.simplify(cur))
        if nxt == cur:
            break
        if sympy.count_ops(nxt) > sympy.count_ops(cur):
            break
        cur = nxt
    return cur


# ---------------------------------------------------------------- evaluation


def _bind(point, params) -> dict:
    env = dict(params or {})
    env.update(point or {})
    return env


def evaluate(e: Expr, point: Point, params: Mapping[str, float] | None = None) -> float:
    """Evaluate ``e`` in IEEE doubles by walking the tree.

    Raises EvalError instead of returning NaN or infinity.
    """
    env = _bind(point, params)
    try:
        v = _walk(as_expr(e), env, {})
    except EvalError as err:
        raise EvalError(err.kind, err.detail, env) from None
    except OverflowError:
        raise EvalError("DomainViolation", "overflow", env) from None
    if not math.isfinite(v):
        raise EvalError("DomainViolation", "non-finite result", env)
    return v


eval_expr = evaluate


def _pow(b: float, x) -> float:
    if isinstance(x, sympy.Integer) or (isinstance(x, float) and x.is_integer()):
        n = int(x)
        if b == 0.0 and n < 0:
            raise EvalError("DivisionByZero", "zero to a negative power")
        return b ** n
    x = float(x)
    if b < 0:
        raise EvalError("DomainViolation", "fractional power of a negative number")
    if b == 0.0:
        if x < 0:
            raise EvalError("DivisionByZero", "zero to a negative power")
        return 0.0
    return math.exp(x * math.log(b))


def _walk(e, env, memo) -> float:
    hit = memo.get(e)
    if hit is not None:
        return hit
    out = _walk_node(e, env, memo)
    memo[e] = out
    return out


def _walk_node(e, env, memo) -> float:
    if e.is_Number:
        return float(e)
    if isinstance(e, sympy.Symbol):
        if e.name not in env:
            raise EvalError("Unbound", e.name)
        return float(env[e.name])
    if e is sympy.pi:
        return math.pi
    if e is sympy.E:
        return math.e
    if isinstance(e, sympy.Add):
        return math.fsum(_walk(a, env, memo) for a in e.args)
    if isinstance(e, sympy.Mul):
        out = 1.0
        for a in e.args:
            out *= _walk(a, env, memo)
        return out
    if isinstance(e, sympy.Pow):
        b = _walk(e.base, env, memo)
        x = e.exp if isinstance(e.exp, sympy.Rational) else _walk(e.exp, env, memo)
        return _pow(b, x)
    if isinstance(e, sympy.Function):
        args = [_walk(a, env, memo) for a in e.args]
        return _call(e.func, args)
    raise EvalError("DomainViolation", f"cannot evaluate {type(e).__name__}")


def _call(func, args) -> float:
    (a,) = args
    if func is sympy.log:
        if a <= 0:
            raise EvalError("DomainViolation", "ln of a non-positive number")
        return math.log(a)
    if func is sympy.asin:
        if abs(a) > 1:
            raise EvalError("DomainViolation", "asin outside [-1, 1]")
        return math.asin(a)
    if func is sympy.sign:
        return 0.0 if a == 0 else math.copysign(1.0, a)
    table = {
        sympy.sin: math.sin, sympy.cos: math.cos, sympy.tan: math.tan,
        sympy.sinh: math.sinh, sympy.cosh: math.cosh, sympy.tanh: math.tanh,
        sympy.exp: math.exp, sympy.Abs: abs, sympy.asinh: math.asinh,
    }
    if func in table:
        return table[func](a)
    if func in _REWRITES:
        return _walk(_REWRITES[func](sympy.Float(a)), {}, {})
    raise EvalError("DomainViolation", f"unsupported function {func}")


@lru_cache(maxsize=4096)
def _lambdified(e: Expr, names: tuple[str, ...]):
    return sympy.lambdify([symbol(n) for n in names], e, modules="numpy")


_NP_FUNCS = {
    sympy.sin: np.sin, sympy.cos: np.cos, sympy.tan: np.tan,
    sympy.sinh: np.sinh, sympy.cosh: np.cosh, sympy.tanh: np.tanh,
    sympy.exp: np.exp, sympy.Abs: np.abs, sympy.sign: np.sign,
    sympy.asin: np.arcsin, sympy.asinh: np.arcsinh,
}


def _np_log(a):
    return np.log(np.where(a > 0, a, np.nan))


def _vec_walk(e, env: dict, memo: dict):
    """Evaluate over numpy arrays, visiting each shared subtree once."""
    hit = memo.get(e)
    if hit is not None:
        return hit
    if e.is_Number:
        out = float(e)
    elif isinstance(e, sympy.Symbol):
        out = env[e.name]
    elif e is sympy.pi:
        out = math.pi
    elif e is sympy.E:
        out = math.e
    elif isinstance(e, sympy.Add):
        out = 0.0
        for a in e.args:
            out = out + _vec_walk(a, env, memo)
    elif isinstance(e, sympy.Mul):
        out = 1.0
        for a in e.args:
            out = out * _vec_walk(a, env, memo)
    elif isinstance(e, sympy.Pow):
        b = _vec_walk(e.base, env, memo)
        x = e.exp
        if isinstance(x, sympy.Integer):
            n = int(x)
            out = np.power(np.asarray(b, dtype=float), n) if n >= 0 else 1.0 / np.power(b, -n)
        elif isinstance(x, sympy.Rational):
            out = np.power(np.where(np.asarray(b) >= 0, b, np.nan), float(x))
        else:
            xv = _vec_walk(x, env, memo)
            out = np.exp(xv * _np_log(b))
    elif isinstance(e, sympy.Function) and (e.func in _NP_FUNCS or e.func is sympy.log):
        a = _vec_walk(e.args[0], env, memo)
        if e.func is sympy.log:
            out = _np_log(a)
        elif e.func is sympy.asin:
            out = np.arcsin(np.where(np.abs(a) <= 1, a, np.nan))
        else:
            out = _NP_FUNCS[e.func](a)
    else:
        fn = _lambdified(e, tuple(sorted(s.name for s in e.free_symbols)))
        out = fn(*[env[n] for n in sorted(s.name for s in e.free_symbols)])
    memo[e] = out
    return out


def evaluate_many(e: Expr, names: Sequence[str], points: np.ndarray,
                  params: Mapping[str, float] | None = None) -> np.ndarray:
    """Vectorised evaluation at the rows of ``points`` (columns follow ``names``).

    Entries where evaluation fails come back as NaN.
    """
    e = as_expr(e)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    params = dict(params or {})
    env = {k: float(v) for k, v in params.items()}
    for i, name in enumerate(names):
        env[name] = points[:, i]
    if not {s.name for s in e.free_symbols} <= set(env):
        return np.full(n, np.nan)
    with np.errstate(all="ignore"):
        try:
            raw = _vec_walk(e, env, {})
            vals = np.array(np.broadcast_to(np.asarray(raw), (n,)))
        except (ZeroDivisionError, OverflowError, ValueError, TypeError):
            vals = np.full(n, np.nan, dtype=complex)
    if np.iscomplexobj(vals):
        vals = np.where(np.abs(vals.imag) == 0, vals.real, np.nan)
    vals = vals.astype(float)
    bad = np.flatnonzero(~np.isfinite(vals))
    for i in bad[:16]:
        point = dict(zip(names, points[i]))
        try:
            vals[i] = evaluate(e, point, params)
        except EvalError:
            vals[i] = np.nan
    return vals


def numeric_function(e: Expr, names: Sequence[str], params: Mapping[str, float] | None = None):
    """Scalar callable ``f(point_sequence) -> float`` raising EvalError on failure."""
    e = as_expr(e)
    names = tuple(names)
    params = dict(params or {})
    pnames = tuple(sorted(k for k in params if k not in names))
    fn = _lambdified(e, names + pnames)
    extra = [float(params[k]) for k in pnames]

    def f(p) -> float:
        with np.errstate(all="ignore"):
            try:
                v = complex(fn(*[float(x) for x in p], *extra))
            except (ZeroDivisionError, OverflowError, ValueError):
                v = complex("nan")
        if v.imag == 0 and math.isfinite(v.real):
            return v.real
        return evaluate(e, dict(zip(names, p)), params)

    return f


# ---------------------------------------------------------------- zero testing


@dataclass(frozen=True)
class Box:
    """Axis-aligned sampling region; ``fixed`` binds parameters (or frozen coordinates)."""

    bounds: tuple[tuple[str, float, float], ...]
    fixed: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        bounds = tuple((str(n), float(lo), float(hi)) for n, lo, hi in self.bounds)
        for n, lo, hi in bounds:
            if not lo <= hi:
                raise ValueError(f"empty range for {n}: [{lo}, {hi}]")
        fixed = self.fixed
        if isinstance(fixed, Mapping):
            fixed = tuple(sorted(fixed.items()))
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "fixed", tuple((str(k), float(v)) for k, v in fixed))

    @classmethod
    def around(cls, center: Point, halfwidth: float, fixed: Mapping[str, float] | None = None) -> "Box":
        return cls(tuple((n, c - halfwidth, c + halfwidth) for n, c in center.items()),
                   tuple(sorted((fixed or {}).items())))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(b[0] for b in self.bounds)

    @property
    def params(self) -> dict[str, float]:
        return dict(self.fixed)

    @property
    def center(self) -> dict[str, float]:
        return {n: 0.5 * (lo + hi) for n, lo, hi in self.bounds}

    def with_fixed(self, extra: Mapping[str, float]) -> "Box":
        merged = dict(self.fixed)
        merged.update(extra)
        return Box(self.bounds, tuple(sorted(merged.items())))


Domain = Box


@dataclass(frozen=True)
class SampleSpec:
    count: int = 256
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("sample count must be positive")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


def sample_points(box: Box, spec: SampleSpec) -> np.ndarray:
    """Deterministic scrambled-Halton points filling ``box``."""
    d = len(box.bounds)
    if d == 0:
        return np.zeros((spec.count, 0))
    u = qmc.Halton(d=d, scramble=True, seed=spec.seed).random(spec.count)
    lo = np.array([b[1] for b in box.bounds])
    hi = np.array([b[2] for b in box.bounds])
    return lo + u * (hi - lo)


class ZeroStatus(str, Enum):
    SYMBOLIC_ZERO = "SymbolicZero"
    NUMERICALLY_ZERO = "NumericallyZero"
    NON_ZERO = "NonZero"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ZeroVerdict:
    status: ZeroStatus
    witness: dict | None = None
    residual: float | None = None
    samples_used: int = 0
    tolerance: float = 0.0
    max_abs: float | None = None
    failed_samples: int = 0

    @property
    def is_zero(self) -> bool:
        return self.status in (ZeroStatus.SYMBOLIC_ZERO, ZeroStatus.NUMERICALLY_ZERO)

    @property
    def is_nonzero(self) -> bool:
        return self.status is ZeroStatus.NON_ZERO

    @property
    def flag(self) -> bool | None:
        """True for zero, False for nonzero, None when inconclusive."""
        if self.is_zero:
            return True
        if self.is_nonzero:
            return False
        return None

    def as_dict(self) -> dict:
        out = {"status": self.status.value, "samples": self.samples_used,
               "tolerance": self.tolerance,
               "provenance": "symbolic" if self.status is ZeroStatus.SYMBOLIC_ZERO else "sampled"}
        if self.max_abs is not None:
            out["max_abs"] = self.max_abs
        if self.witness is not None:
            out["witness"] = dict(self.witness)
            out["residual"] = self.residual
        if self.failed_samples:
            out["failed_samples"] = self.failed_samples
        return out


def is_identically_zero(e: Expr, box: Box, spec: SampleSpec = SampleSpec(),
                        simplify_first: bool = True) -> ZeroVerdict:
    """Layered zero test: symbolic rewrite, then seeded sampling over ``box``."""
    e = as_expr(e)
    if e == 0 or (simplify_first and simplify(e) == 0):
        return ZeroVerdict(ZeroStatus.SYMBOLIC_ZERO, samples_used=0, tolerance=spec.tol)
    pts = sample_points(box, spec)
    vals = evaluate_many(e, box.names, pts, box.params)
    ok = np.isfinite(vals)
    n_fail = int((~ok).sum())
    if not ok.any():
        return ZeroVerdict(ZeroStatus.INCONCLUSIVE, samples_used=len(vals),
                           tolerance=spec.tol, failed_samples=n_fail)
    mags = np.where(ok, np.abs(vals), 0.0)
    big = np.flatnonzero(mags > spec.tol)
    max_abs = float(mags.max())
    if big.size:
        i = int(big[0])
        witness = {n: float(x) for n, x in zip(box.names, pts[i])}
        return ZeroVerdict(ZeroStatus.NON_ZERO, witness, float(vals[i]), len(vals),
                           spec.tol, max_abs, n_fail)
    return ZeroVerdict(ZeroStatus.NUMERICALLY_ZERO, None, None, len(vals), spec.tol,
                       max_abs, n_fail)
