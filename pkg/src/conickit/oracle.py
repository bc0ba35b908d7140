"""Finite-difference oracle used to cross-check symbolic results.

Everything here works on plain numeric callables; no symbolic derivative is
ever consulted, so agreement with the symbolic layer is an independent check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import EvalError, StencilEvalError
from .symexpr import Expr, as_expr, evaluate, evaluate_many

# central-difference weights, offsets -m..m, second-order accurate
_STENCILS = {
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
    5: {-3: -0.5, -2: 2.0, -1: -2.5, 1: 2.5, 2: -2.0, 3: 0.5},
}


def default_step(order: int) -> float:
    return 1e-3 if order <= 2 else 5e-2


def _call(fn, q) -> float:
    try:
        v = float(fn(q))
    except (EvalError, ZeroDivisionError, ValueError, OverflowError) as err:
        raise StencilEvalError(q, err) from None
    if not math.isfinite(v):
        raise StencilEvalError(q)
    return v


def _central(fn, p: np.ndarray, var: int, order: int, h: float) -> float:
    total = 0.0
    for k, c in _STENCILS[order].items():
        q = p.copy()
        q[var] += k * h
        total += c * _call(fn, q)
    return total / h ** order


def fd_partial(fn: Callable, p: Sequence[float], var: int, order: int = 1,
               step: float | None = None) -> float:
    """Partial derivative of ``fn`` along coordinate ``var`` at ``p``.

    Central differences at steps h and 2h combined by one Richardson step,
    so the error is O(h^4) for smooth ``fn``.
    """
    if order == 0:
        return _call(fn, np.asarray(p, dtype=float))
    if order not in _STENCILS:
        raise ValueError("order must be between 0 and 5")
    h = default_step(order) if step is None else float(step)
    p = np.asarray(p, dtype=float)
    d1 = _central(fn, p, var, order, h)
    d2 = _central(fn, p, var, order, 2 * h)
    return (4.0 * d1 - d2) / 3.0


def fd_jacobian(F: Callable, p: Sequence[float], step: float = 1e-3) -> np.ndarray:
    """Jacobian dF_i/dx_j of a vector function by Richardson central differences."""
    p = np.asarray(p, dtype=float)
    n = len(p)

    def column(j, h):
        qp, qm = p.copy(), p.copy()
        qp[j] += h
        qm[j] -= h
        return (_vec(F, qp) - _vec(F, qm)) / (2 * h)

    cols = [(4 * column(j, step) - column(j, 2 * step)) / 3 for j in range(n)]
    return np.column_stack(cols)


def _vec(F, q) -> np.ndarray:
    try:
        v = np.asarray(F(q), dtype=float)
    except (EvalError, ZeroDivisionError, ValueError, OverflowError) as err:
        raise StencilEvalError(q, err) from None
    if not np.isfinite(v).all():
        raise StencilEvalError(q)
    return v


def fd_lie_bracket(V: Callable, W: Callable, p: Sequence[float], step: float = 1e-3) -> np.ndarray:
    """Numeric [V, W] = (dW/dx) V - (dV/dx) W at ``p``."""
    p = np.asarray(p, dtype=float)
    return fd_jacobian(W, p, step) @ _vec(V, p) - fd_jacobian(V, p, step) @ _vec(W, p)


def fd_affine_structure(f: Callable, g: Callable, p: Sequence[float],
                        step: float = 1e-2) -> dict[str, float]:
    """rho, tau and chi at ``p`` from numeric f, g by nested finite differences.

    ad_g^k f is built by repeated numeric brackets, ad_g^3 f is solved in the
    frame (g, ad_g f, ad_g^2 f) and L_g rho is a central difference along g.
    """
    p = np.asarray(p, dtype=float)
    ads = [f]
    for _ in range(3):
        prev = ads[-1]
        ads.append(lambda q, prev=prev: fd_lie_bracket(g, prev, q, step))

    def coeffs(q):
        m = np.column_stack([_vec(g, q), _vec(ads[1], q), _vec(ads[2], q)])
        return np.linalg.solve(m, _vec(ads[3], q))

    c = coeffs(p)
    tau, rho = float(c[1]), float(c[2])
    gp = _vec(g, p)
    rho_line = lambda t: float(coeffs(p + t[0] * gp)[2])
    lg_rho = fd_partial(rho_line, [0.0], 0, 1, step)
    return {"rho": rho, "tau": tau, "chi": 3 * lg_rho - 2 * rho ** 2 - 9 * tau}


@dataclass(frozen=True)
class Grid:
    """Tensor grid; ``axes`` holds (name, lo, hi, count) per coordinate."""

    axes: tuple[tuple[str, float, float, int], ...]
    exclude: Callable[[dict], bool] | None = None
    fixed: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        axes = tuple((str(n), float(lo), float(hi), int(k)) for n, lo, hi, k in self.axes)
        for n, lo, hi, k in axes:
            if k < 1 or hi < lo:
                raise ValueError(f"bad axis {n}: [{lo}, {hi}] x {k}")
        object.__setattr__(self, "axes", axes)
        fixed = self.fixed
        if isinstance(fixed, Mapping):
            fixed = tuple(sorted(fixed.items()))
        object.__setattr__(self, "fixed", tuple((str(k), float(v)) for k, v in fixed))

    @classmethod
    def uniform(cls, ranges: Mapping[str, tuple[float, float]], count: int, **kw) -> "Grid":
        return cls(tuple((n, lo, hi, count) for n, (lo, hi) in ranges.items()), **kw)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a[0] for a in self.axes)

    @property
    def params(self) -> dict[str, float]:
        return dict(self.fixed)

    def points(self) -> np.ndarray:
        lines = [np.linspace(lo, hi, k) if k > 1 else np.array([0.5 * (lo + hi)])
                 for _, lo, hi, k in self.axes]
        pts = np.array(list(itertools.product(*lines)), dtype=float).reshape(-1, len(lines))
        if self.exclude is not None:
            keep = [not self.exclude(dict(zip(self.names, row))) for row in pts]
            pts = pts[np.array(keep, dtype=bool)]
        if len(pts) == 0:
            raise ValueError("grid is empty after exclusions")
        return pts


@dataclass(frozen=True)
class ResidualReport:
    max_abs: float
    mean_abs: float
    argmax: dict
    samples: int
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"max_abs": self.max_abs, "mean_abs": self.mean_abs,
               "argmax": dict(self.argmax), "samples": self.samples,
               "tolerance": self.tolerance, "pass": self.passed}
        if self.details:
            out["details"] = dict(self.details)
        return out


def residual_report(residuals: np.ndarray, points: np.ndarray, names: Sequence[str],
                    tol: float, extra_ok: bool = True, details: dict | None = None) -> ResidualReport:
    """Summarise absolute residuals; a reduction in fixed order for determinism."""
    r = np.abs(np.asarray(residuals, dtype=float))
    i = int(np.argmax(r))
    mx = float(r[i])
    return ResidualReport(mx, float(np.mean(r)), {n: float(x) for n, x in zip(names, points[i])},
                          int(len(r)), float(tol), bool(mx <= tol and extra_ok), details or {})


def crosscheck(sym: Expr, recipe: Callable[[np.ndarray], float], grid: Grid,
               tol: float = 1e-6) -> ResidualReport:
    """Compare a symbolic expression against a numeric recomputation on a grid."""
    sym = as_expr(sym)
    pts = grid.points()
    s = evaluate_many(sym, grid.names, pts, grid.params)
    bad = np.flatnonzero(~np.isfinite(s))
    if bad.size:
        p = dict(zip(grid.names, pts[bad[0]]))
        evaluate(sym, p, grid.params)
        raise EvalError("DomainViolation", "symbolic side failed", p)
    num = np.array([recipe(p) for p in pts], dtype=float)
    return residual_report(s - num, pts, grid.names, tol)
