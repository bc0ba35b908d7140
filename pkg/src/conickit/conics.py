"""Conic submanifolds S(x, xdot) = xdot^T g xdot + 2 omega xdot + h of TX, X of dimension 2."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import sympy

from .affine import AffineSystem
from .errors import EvalError, NotInNormalForm, SingularJacobian
from .fields import VectorField
from .oracle import Grid, ResidualReport, residual_report
from .quadnl import QuadraticNLSystem
from .symexpr import (
    Box,
    Chart,
    Expr,
    SampleSpec,
    ZeroVerdict,
    as_expr,
    differentiate,
    evaluate,
    evaluate_many,
    is_identically_zero,
    simplify,
    symbol,
)

CONIC_TAGS = ("Elliptic", "Hyperbolic", "Parabolic", "Degenerate", "Empty", "Transitional")
DEFAULT_CHART = Chart(("z", "y"))


def velocity_names(chart: Chart) -> tuple[str, str]:
    return tuple(n + "dot" for n in chart.names)


@dataclass(frozen=True)
class ConicSubmanifold:
    chart: Chart
    g11: Expr
    g12: Expr
    g22: Expr
    omega: tuple[Expr, Expr]
    h: Expr

    def __post_init__(self):
        if self.chart.dimension != 2:
            raise ValueError("conics live over a 2-dimensional chart")
        for k in ("g11", "g12", "g22", "h"):
            object.__setattr__(self, k, as_expr(getattr(self, k)))
        om = tuple(as_expr(o) for o in self.omega)
        if len(om) != 2:
            raise ValueError("omega needs two components")
        object.__setattr__(self, "omega", om)

    @classmethod
    def from_matrices(cls, g, omega, h, chart: Chart = DEFAULT_CHART) -> "ConicSubmanifold":
        g = [[as_expr(x) for x in row] for row in g]
        if simplify(g[0][1] - g[1][0]) != 0:
            raise ValueError("g must be symmetric")
        return cls(chart, g[0][0], g[0][1], g[1][1], tuple(omega), h)

    @classmethod
    def from_expr(cls, e, chart: Chart = DEFAULT_CHART) -> "ConicSubmanifold":
        """Read off (g, omega, h) from a polynomial of degree <= 2 in the velocities."""
        vz, vy = (symbol(n) for n in velocity_names(chart))
        poly = sympy.Poly(sympy.expand(as_expr(e)), vz, vy)
        if poly.total_degree() > 2:
            raise NotInNormalForm("not quadratic in the velocities")
        c = lambda i, j: poly.coeff_monomial(vz ** i * vy ** j)
        return cls(chart, c(2, 0), c(1, 1) / 2, c(0, 2), (c(1, 0) / 2, c(0, 1) / 2), c(0, 0))

    @property
    def g(self) -> sympy.Matrix:
        return sympy.Matrix([[self.g11, self.g12], [self.g12, self.g22]])

    def bordered(self) -> sympy.Matrix:
        """M_q = [[g, omega^T], [omega, h]]."""
        o1, o2 = self.omega
        return sympy.Matrix([[self.g11, self.g12, o1], [self.g12, self.g22, o2], [o1, o2, self.h]])

    def expr(self) -> Expr:
        """S as an expression over the chart coordinates and their velocities."""
        v = sympy.Matrix([symbol(n) for n in velocity_names(self.chart)])
        om = sympy.Matrix([list(self.omega)])
        return (v.T * self.g * v)[0, 0] + 2 * (om * v)[0, 0] + self.h

    def at_velocity(self, xdot) -> Expr:
        """S(x, xdot) for a velocity given as two expressions."""
        names = velocity_names(self.chart)
        return self.expr().xreplace({symbol(n): as_expr(v) for n, v in zip(names, xdot)})


@dataclass(frozen=True)
class Diffeomorphism:
    """x_tilde = phi(x), components written in the coordinates of ``chart_in``."""

    chart_in: Chart
    chart_out: Chart
    components: tuple[Expr, ...]

    def __post_init__(self):
        comps = tuple(as_expr(c) for c in self.components)
        if len(comps) != self.chart_out.dimension or self.chart_in.dimension != self.chart_out.dimension:
            raise ValueError("phi must map between charts of equal dimension")
        object.__setattr__(self, "components", comps)

    @classmethod
    def identity(cls, chart: Chart = DEFAULT_CHART) -> "Diffeomorphism":
        return cls(chart, chart, chart.symbols)

    @property
    def jacobian(self) -> sympy.Matrix:
        return sympy.Matrix([[differentiate(c, x) for x in self.chart_in.names]
                             for c in self.components])

    @property
    def theta(self) -> Expr:
        return simplify(self.jacobian.det())

    def substitution(self) -> dict:
        return {s: c for s, c in zip(self.chart_out.symbols, self.components)}


@dataclass(frozen=True)
class EquivalenceWitness:
    phi: Diffeomorphism
    delta: Expr

    def __post_init__(self):
        object.__setattr__(self, "delta", as_expr(self.delta))


@dataclass(frozen=True)
class ConicClass:
    tag: str
    delta1_at_x0: float
    delta2_at_x0: float
    delta1_verdict: ZeroVerdict
    delta2_verdict: ZeroVerdict
    point: dict

    def as_dict(self) -> dict:
        return {"tag": self.tag, "delta1_at_x0": self.delta1_at_x0,
                "delta2_at_x0": self.delta2_at_x0, "point": dict(self.point),
                "delta1_verdict": self.delta1_verdict.as_dict(),
                "delta2_verdict": self.delta2_verdict.as_dict()}


def conic_determinants(S: ConicSubmanifold) -> tuple[Expr, Expr]:
    """(Delta1, Delta2) = (det M_q, det g)."""
    return simplify(S.bordered().det()), simplify(S.g11 * S.g22 - S.g12 ** 2)


def _matrix_at(m: sympy.Matrix, point, params) -> np.ndarray:
    return np.array([[evaluate(x, point, params) for x in row] for row in m.tolist()])


def classify_conic(S: ConicSubmanifold, x0: Mapping[str, float], box: Box,
                   spec: SampleSpec = SampleSpec()) -> ConicClass:
    d1, d2 = conic_determinants(S)
    params = box.params
    d1v = evaluate(d1, x0, params)
    d2v = evaluate(d2, x0, params)
    ver1 = is_identically_zero(d1, box, spec)
    ver2 = is_identically_zero(d2, box, spec)
    point = {k: float(v) for k, v in x0.items()}

    def out(tag):
        return ConicClass(tag, d1v, d2v, ver1, ver2, point)

    if abs(d1v) <= spec.tol:
        return out("Degenerate")
    if ver2.is_zero:
        return out("Parabolic")
    if abs(d2v) <= spec.tol:
        return out("Transitional")
    if d2v < 0:
        return out("Hyperbolic")
    eig = np.linalg.eigvalsh(_matrix_at(S.bordered(), x0, params))
    if (eig > 0).all() or (eig < 0).all():
        return out("Empty")
    return out("Elliptic")


def pullback_conic(S: ConicSubmanifold, phi: Diffeomorphism, box: Box | None = None,
                   spec: SampleSpec = SampleSpec()) -> ConicSubmanifold:
    """phi^* of a conic given in the target coordinates: g = J^T g(phi) J, omega = omega(phi) J."""
    if S.chart != phi.chart_out:
        raise ValueError(f"conic chart {S.chart.names} is not the target chart {phi.chart_out.names}")
    J = phi.jacobian
    theta = phi.theta
    if theta == 0:
        raise SingularJacobian("det D(phi) is identically zero")
    if box is not None and is_identically_zero(theta, box, spec).is_zero:
        raise SingularJacobian("det D(phi) samples to zero on the box")
    sub = phi.substitution()
    g = (J.T * S.g.xreplace(sub) * J).applyfunc(simplify)
    om = sympy.Matrix([list(S.omega)]).xreplace(sub) * J
    return ConicSubmanifold(phi.chart_in, g[0, 0], g[0, 1], g[1, 1],
                            (simplify(om[0, 0]), simplify(om[0, 1])), simplify(S.h.xreplace(sub)))


def _conic_expr(S, chart: Chart) -> Expr:
    return S.expr() if isinstance(S, ConicSubmanifold) else as_expr(S)


def transported_expr(S_tilde, phi: Diffeomorphism) -> Expr:
    """S_tilde(phi(x), D phi(x) xdot) over the source chart and its velocities."""
    e = _conic_expr(S_tilde, phi.chart_out)
    v = sympy.Matrix([symbol(n) for n in velocity_names(phi.chart_in)])
    vt = phi.jacobian * v
    sub = phi.substitution()
    sub.update({symbol(n): vt[i] for i, n in enumerate(velocity_names(phi.chart_out))})
    return e.xreplace(sub)


def _raise_first_bad(e, vals, names, pts, params):
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        p = dict(zip(names, pts[bad[0]]))
        evaluate(e, p, params)
        raise EvalError("DomainViolation", "evaluation failed", p)


def verify_equivalence(S, S_tilde, w: EquivalenceWitness, grid: Grid,
                       tol: float = 1e-9) -> ResidualReport:
    """Residual of S_tilde(phi, D phi xdot) - delta S on a grid over (x, xdot).

    Either conic may be a ConicSubmanifold or a raw expression in the
    coordinates and velocities of its chart.  ``details`` records whether
    delta stays away from zero on the grid.
    """
    phi = w.phi
    lhs = transported_expr(S_tilde, phi)
    rhs = w.delta * _conic_expr(S, phi.chart_in)
    resid = lhs - rhs
    names, pts, params = grid.names, grid.points(), grid.params
    vals = evaluate_many(resid, names, pts, params)
    _raise_first_bad(resid, vals, names, pts, params)
    dvals = evaluate_many(w.delta, names, pts, params)
    _raise_first_bad(w.delta, dvals, names, pts, params)
    dmin = float(np.min(np.abs(dvals)))
    ok = dmin > tol
    return residual_report(vals, pts, names, tol, extra_ok=ok,
                           details={"delta_min_abs": dmin, "delta_nonvanishing": ok})


def _sign_at(e: Expr, point, params) -> int:
    v = evaluate(e, point, params)
    return 0 if v == 0 else (1 if v > 0 else -1)


def parametrize_conic(S: ConicSubmanifold, cls: ConicClass,
                      params: Mapping[str, float] | None = None) -> QuadraticNLSystem:
    """Regular parametrisation of a conic already in a diagonal normal form.

    E: lam (a^2 (zdot - c0)^2 + b^2 (ydot - c1)^2 - 1); H: the same with a minus
    on the ydot term; P: lam (a ydot^2 - zdot + b ydot + c).  Any nonzero
    overall factor lam is allowed.
    """
    chart = S.chart
    if simplify(S.g12) != 0:
        raise NotInNormalForm("g is not diagonal")
    pt = cls.point
    z, y = (VectorField.coordinate(chart, n) for n in chart.names)
    if cls.tag == "Parabolic":
        if simplify(S.g11) != 0:
            raise NotInNormalForm("parabolic normal form needs g11 = 0")
        lam = -2 * S.omega[0]
        if _sign_at(lam, pt, params) == 0:
            raise NotInNormalForm("the zdot coefficient vanishes")
        a = simplify(S.g22 / lam)
        b = simplify(2 * S.omega[1] / lam)
        c = simplify(S.h / lam)
        return QuadraticNLSystem("P", z.scale(a), z.scale(b) + y, z.scale(c))
    if cls.tag not in ("Elliptic", "Hyperbolic"):
        raise NotInNormalForm(f"no parametrisation for a {cls.tag} conic")
    c0 = simplify(-S.omega[0] / S.g11)
    c1 = simplify(-S.omega[1] / S.g22)
    lam = simplify(S.g11 * c0 ** 2 + S.g22 * c1 ** 2 - S.h)
    s11 = _sign_at(S.g11 / lam, pt, params)
    s22 = _sign_at(S.g22 / lam, pt, params)
    if cls.tag == "Elliptic":
        if s11 <= 0 or s22 <= 0:
            raise NotInNormalForm("elliptic conic is not of the form a^2 zdot^2 + b^2 ydot^2 = 1")
        kind = "E"
        bsq = S.g22 / lam
    else:
        if s11 <= 0 or s22 >= 0:
            raise NotInNormalForm("hyperbolic conic needs the positive square on zdot")
        kind = "H"
        bsq = -S.g22 / lam
    a = simplify(sympy.sqrt(simplify(S.g11 / lam)))
    b = simplify(sympy.sqrt(simplify(bsq)))
    return QuadraticNLSystem(kind, z.scale(simplify(1 / a)), y.scale(simplify(1 / b)),
                             z.scale(c0) + y.scale(c1))


def constraint_residual(S: ConicSubmanifold, Xi: QuadraticNLSystem, w: str = "w") -> Expr:
    """S(x, f(x, w)); vanishes identically when Xi parametrises S."""
    return S.at_velocity(Xi.drift(w))


def extend(Xi: QuadraticNLSystem, w: str = "w") -> AffineSystem:
    """xdot = f(x, w), wdot = u as a control-affine system on (x, w)."""
    chart = Chart(Xi.chart.names + (w,))
    fz, fy = Xi.drift(w)
    f = VectorField(chart, (fz, fy, 0))
    return AffineSystem(f, VectorField.coordinate(chart, w))
