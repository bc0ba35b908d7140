"""Quadratic nonlinear systems x' = A f1(w) + B f2(w) + C on a 2-chart.

The fibre functions are (cos, sin) for kind E, (cosh, sinh) for kind H and
(w^2, w) for kind P.  Structure functions come from

    [A, B] = mu0 A + mu1 B,      C = gamma0 A + gamma1 B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import sympy

from .errors import DegenerateAB, DegenerateFrame, KindMismatch, VanishingBeta
from .fields import VectorField, decompose_in_frame, lie_bracket, lie_derivative, vanishes_somewhere, wedge_det
from .oracle import Grid, ResidualReport, residual_report
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
    numeric_function,
    simplify,
    symbol,
)

KINDS = ("E", "H", "P")


def _pm(kind: str) -> int:
    """+1 for the elliptic (upper) sign, -1 for the hyperbolic (lower) sign."""
    if kind == "E":
        return 1
    if kind == "H":
        return -1
    raise KindMismatch(f"kind {kind!r} has no elliptic/hyperbolic sign")


def fibre_functions(kind: str, w) -> tuple[Expr, Expr]:
    w = as_expr(w)
    if kind == "E":
        return sympy.cos(w), sympy.sin(w)
    if kind == "H":
        return sympy.cosh(w), sympy.sinh(w)
    if kind == "P":
        return w ** 2, w
    raise KindMismatch(f"unknown kind {kind!r}")


@dataclass(frozen=True)
class QuadraticNLSystem:
    kind: str
    A: VectorField
    B: VectorField
    C: VectorField

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KindMismatch(f"unknown kind {self.kind!r}")
        for v in (self.B, self.C):
            if v.chart != self.A.chart:
                raise ValueError("A, B, C must share a chart")
        if self.A.chart.dimension != 2:
            raise ValueError("quadratic systems live on a 2-dimensional chart")

    @property
    def chart(self) -> Chart:
        return self.A.chart

    def drift(self, w="w") -> tuple[Expr, Expr]:
        """Components of A f1(w) + B f2(w) + C."""
        f1, f2 = fibre_functions(self.kind, symbol(w) if isinstance(w, str) else w)
        return tuple(a * f1 + b * f2 + c for a, b, c in zip(self.A, self.B, self.C))


@dataclass(frozen=True)
class QNLStructure:
    system: QuadraticNLSystem
    mu0: Expr
    mu1: Expr
    gamma0: Expr
    gamma1: Expr
    Gamma: Expr
    kappa: Expr | None
    antigamma: tuple[Expr, Expr] | None
    det: Expr

    @property
    def kind(self) -> str:
        return self.system.kind

    def values(self) -> dict[str, Expr]:
        out = {"mu0": self.mu0, "mu1": self.mu1, "gamma0": self.gamma0,
               "gamma1": self.gamma1, "Gamma": self.Gamma}
        if self.kappa is not None:
            out["kappa"] = self.kappa
        return out


def gamma_invariant(kind: str, g0, g1) -> Expr:
    if kind == "E":
        return g0 ** 2 + g1 ** 2
    if kind == "H":
        return g0 ** 2 - g1 ** 2
    return g0 + g1 ** 2


def _curvature(kind, A, B, mu0, mu1, simplified=True) -> Expr:
    s = _pm(kind)
    k = (-lie_derivative(B, mu0, simplified) + s * lie_derivative(A, mu1, simplified)
         - mu0 ** 2 - s * mu1 ** 2)
    return simplify(k) if simplified else k


def qnl_structure(Xi: QuadraticNLSystem, box: Box | None = None, spec: SampleSpec = SampleSpec(),
                  simplified: bool = True, curvature: bool = True) -> QNLStructure:
    """Structure functions, the invariant Gamma and (for E/H) the curvature kappa.

    ``curvature=False`` skips kappa, the costly second-order part.
    """
    A, B = Xi.A, Xi.B
    frame = (A, B)
    try:
        mu = decompose_in_frame(lie_bracket(A, B, simplified), frame, box, spec, simplified)
        gam = decompose_in_frame(Xi.C, frame, None, spec, simplified)
    except DegenerateFrame as err:
        raise DegenerateAB(str(err)) from None
    mu0, mu1 = mu
    g0, g1 = gam
    Gamma = gamma_invariant(Xi.kind, g0, g1)
    if simplified:
        Gamma = simplify(Gamma)
    kappa = anti = None
    if Xi.kind in ("E", "H"):
        if curvature:
            kappa = _curvature(Xi.kind, A, B, mu0, mu1, simplified)
        anti = (g1, -_pm(Xi.kind) * g0)
    return QNLStructure(Xi, mu0, mu1, g0, g1, Gamma, kappa, anti, mu.determinant)


def gaussian_curvature(Xi, simplified: bool = True) -> Expr:
    """kappa = -L_B mu0 +- L_A mu1 - mu0^2 -+ mu1^2 (upper signs for E)."""
    s = Xi if isinstance(Xi, QNLStructure) else None
    system = s.system if s else Xi
    if system.kind not in ("E", "H"):
        raise KindMismatch("curvature is defined for E and H kinds only")
    if s is None:
        s = qnl_structure(system, simplified=simplified)
    return _curvature(system.kind, system.A, system.B, s.mu0, s.mu1, simplified)


# ---------------------------------------------------------------- reparametrisations


@dataclass(frozen=True)
class Reparam:
    """Control reparametrisation w = sign*w' + alpha (EH) or w = beta*w' + alpha (P)."""

    family: str
    alpha: Expr = sympy.Integer(0)
    sign: int = 1
    beta: Expr = sympy.Integer(1)

    def __post_init__(self):
        if self.family not in ("EH", "P"):
            raise ValueError("family must be 'EH' or 'P'")
        object.__setattr__(self, "alpha", as_expr(self.alpha))
        object.__setattr__(self, "beta", as_expr(self.beta))
        if self.family == "EH":
            if self.sign not in (1, -1):
                raise ValueError("sign must be +1 or -1")
            if self.beta != 1:
                raise ValueError("EH reparametrisations have no beta")
        elif self.sign != 1:
            raise ValueError("P reparametrisations carry beta instead of a sign")

    @classmethod
    def eh(cls, alpha=0, sign: int = 1) -> "Reparam":
        return cls("EH", alpha, sign)

    @classmethod
    def p(cls, alpha=0, beta=1) -> "Reparam":
        return cls("P", alpha, 1, beta)

    def control_map(self, wt="wt") -> Expr:
        """Old control in terms of the new one."""
        wt = symbol(wt) if isinstance(wt, str) else wt
        if self.family == "EH":
            return self.sign * wt + self.alpha
        return self.beta * wt + self.alpha


def _family(kind: str) -> str:
    return "P" if kind == "P" else "EH"


def _check_kind(kind: str, r: Reparam):
    if _family(kind) != r.family:
        raise KindMismatch(f"{r.family} reparametrisation applied to kind {kind}")


def compose_reparams(r1: Reparam, r2: Reparam) -> Reparam:
    """Single reparametrisation equal to applying r1 and then r2."""
    if r1.family != r2.family:
        raise KindMismatch("cannot compose EH and P reparametrisations")
    if r1.family == "EH":
        return Reparam.eh(r1.alpha + r1.sign * r2.alpha, r1.sign * r2.sign)
    return Reparam.p(r1.alpha + r1.beta * r2.alpha, r1.beta * r2.beta)


def reparametrize(Xi: QuadraticNLSystem, r: Reparam, box: Box | None = None,
                  spec: SampleSpec = SampleSpec()) -> QuadraticNLSystem:
    """Transformed triple (A~, B~, C~) for the control change ``r``."""
    _check_kind(Xi.kind, r)
    A, B, C = Xi.A, Xi.B, Xi.C
    a = r.alpha
    if Xi.kind == "E":
        c, s = sympy.cos(a), sympy.sin(a)
        At = A.scale(c) + B.scale(s)
        Bt = (A.scale(-s) + B.scale(c)).scale(r.sign)
        Ct = C
    elif Xi.kind == "H":
        c, s = sympy.cosh(a), sympy.sinh(a)
        At = A.scale(c) + B.scale(s)
        Bt = (A.scale(s) + B.scale(c)).scale(r.sign)
        Ct = C
    else:
        b = r.beta
        if simplify(b) == 0:
            raise VanishingBeta("beta is identically zero")
        if box is not None and vanishes_somewhere(b, box, spec):
            raise VanishingBeta("beta vanishes inside the box")
        At = A.scale(b ** 2)
        Bt = A.scale(2 * a * b) + B.scale(b)
        Ct = C + A.scale(a ** 2) + B.scale(a)
    return QuadraticNLSystem(Xi.kind, At, Bt, Ct)


def rotation_matrix(kind: str, alpha, sign: int = 1) -> sympy.Matrix:
    """Right-acting matrix on row vectors (mu or gamma) for an EH reparametrisation."""
    a = as_expr(alpha)
    if kind == "E":
        c, s = sympy.cos(a), sympy.sin(a)
        if sign == 1:
            return sympy.Matrix([[c, -s], [s, c]])
        return sympy.Matrix([[c, s], [s, -c]])
    if kind == "H":
        c, s = sympy.cosh(a), sympy.sinh(a)
        if sign == 1:
            return sympy.Matrix([[c, -s], [-s, c]])
        return sympy.Matrix([[c, s], [-s, -c]])
    raise KindMismatch(f"no rotation matrix for kind {kind!r}")


def struct_transform_law(s: QNLStructure, r: Reparam, kind: str | None = None,
                         simplified: bool = False) -> QNLStructure:
    """Structure functions of the reparametrised system from closed-form laws.

    Uses only the old structure functions and Lie derivatives of alpha, beta
    along the old frame; it never forms the new frame's brackets.
    """
    kind = kind or s.kind
    if kind != s.kind:
        raise KindMismatch(f"structure is of kind {s.kind}, not {kind}")
    _check_kind(kind, r)
    Xi = s.system
    A, B = Xi.A, Xi.B
    a = r.alpha
    LA = lambda e: lie_derivative(A, e, simplified)
    LB = lambda e: lie_derivative(B, e, simplified)
    if kind in ("E", "H"):
        pm = _pm(kind)
        R = rotation_matrix(kind, a, r.sign)
        m = sympy.Matrix([[s.mu0 - pm * LA(a), s.mu1 - LB(a)]]) * R
        if r.sign == -1:
            m = -m
        g = sympy.Matrix([[s.gamma0, s.gamma1]]) * R
        mu0, mu1, g0, g1 = m[0], m[1], g[0], g[1]
    else:
        b = r.beta
        mu1 = b ** 2 * s.mu1 + b * LA(b)
        mu0 = (b * s.mu0 - 2 * LB(b) + 2 * b * LA(a) - 2 * a * LA(b)
               - 2 * a * (b * s.mu1 + LA(b)))
        g0 = (s.gamma0 - 2 * a * s.gamma1 - a ** 2) / b ** 2
        g1 = (s.gamma1 + a) / b
    if simplified:
        mu0, mu1, g0, g1 = (simplify(x) for x in (mu0, mu1, g0, g1))
    new_system = reparametrize(Xi, r)
    Gamma = gamma_invariant(kind, g0, g1)
    kappa = anti = None
    if kind in ("E", "H"):
        kappa = _curvature(kind, new_system.A, new_system.B, mu0, mu1, simplified)
        anti = (g1, -_pm(kind) * g0)
    det = s.det
    if kind == "P":
        det = s.det * r.beta ** 3
    elif r.sign == -1:
        det = -s.det
    return QNLStructure(new_system, mu0, mu1, g0, g1, Gamma, kappa, anti, det)


# ---------------------------------------------------------------- canonical forms


@dataclass(frozen=True)
class CanonicalForm:
    kind: str
    Gamma: float
    epsilon: int | None
    tag: str
    pair: tuple[float, float]

    def as_dict(self) -> dict:
        return {"kind": self.kind, "Gamma": self.Gamma, "epsilon": self.epsilon,
                "tag": self.tag, "canonical_C": list(self.pair)}


def _is_zero(x: float, scale: float, tol: float) -> bool:
    return abs(x) <= tol * max(1.0, scale)


def canonical_eh(c0: float, c1: float, kind: str, tol: float = 1e-12) -> CanonicalForm:
    """Canonical constant-form representative for C = c0 A + c1 B."""
    c0, c1 = float(c0), float(c1)
    scale = c0 * c0 + c1 * c1
    if kind == "E":
        G = c0 * c0 + c1 * c1
        return CanonicalForm("E", G, None, "Xi_E^{Gamma}", (math.sqrt(G), 0.0))
    if kind != "H":
        raise KindMismatch("canonical_eh handles E and H kinds")
    G = c0 * c0 - c1 * c1
    if _is_zero(G, scale, tol):
        if _is_zero(c0, math.sqrt(scale), tol):
            return CanonicalForm("H", 0.0, 0, "Xi_H^{0,0}", (0.0, 0.0))
        eps = 1 if c0 > 0 else -1
        return CanonicalForm("H", 0.0, eps, f"Xi_H^{{0,{eps:+d}}}", (float(eps), 1.0))
    if G > 0:
        eps = 1 if c0 > 0 else -1
        return CanonicalForm("H", G, eps, f"Xi_H^{{Gamma,{eps:+d}}}", (eps * math.sqrt(G), 0.0))
    return CanonicalForm("H", G, None, "Xi_H^{-Gamma}", (0.0, math.sqrt(-G)))


def _act(kind: str, c, alpha: float, sign: int) -> np.ndarray:
    if kind == "E":
        co, si = math.cos(alpha), math.sin(alpha)
        M = [[co, -si], [si, co]] if sign == 1 else [[co, si], [si, -co]]
    else:
        co, si = math.cosh(alpha), math.sinh(alpha)
        M = [[co, -si], [-si, co]] if sign == 1 else [[co, si], [-si, -co]]
    return np.asarray(c, dtype=float) @ np.array(M)


def eh_orbit_alpha(c, c_tilde, kind: str, tol: float = 1e-9) -> tuple[float, int] | None:
    """Constant (alpha, sign) moving the constant pair ``c`` to ``c_tilde``, or None.

    E uses atan2 angles.  H works on light-cone coordinates u = c0 + c1 and
    v = c0 - c1, which scale by exp(-alpha) and exp(alpha).
    """
    c = np.asarray(c, dtype=float)
    ct = np.asarray(c_tilde, dtype=float)
    scale = max(1.0, float(np.abs(c).max()), float(np.abs(ct).max()))
    cands: list[tuple[float, int]] = []
    if kind == "E":
        th = math.atan2(c[1], c[0])
        tht = math.atan2(ct[1], ct[0])
        cands = [(th - tht, 1), (th + tht, -1)]
    elif kind == "H":
        u, v = c[0] + c[1], c[0] - c[1]
        for sign in (1, -1):
            if sign == 1:
                ut, vt = ct[0] + ct[1], ct[0] - ct[1]
            else:
                ut, vt = ct[0] - ct[1], ct[0] + ct[1]
            if u != 0 and ut / u > 0:
                cands.append((-math.log(ut / u), sign))
            if v != 0 and vt / v > 0:
                cands.append((math.log(vt / v), sign))
            cands.append((0.0, sign))
    else:
        raise KindMismatch("orbit search handles E and H kinds")
    for alpha, sign in cands:
        if np.abs(_act(kind, c, alpha, sign) - ct).max() <= tol * scale:
            return alpha, sign
    return None


# ---------------------------------------------------------------- ladder


@dataclass(frozen=True)
class LadderLabel:
    kind: str
    flags: dict
    residuals: dict
    residuals_at_x0: dict
    verdicts: dict
    canonical: CanonicalForm | None
    tag: str | None

    def as_dict(self) -> dict:
        from .symexpr import to_text
        return {
            "kind": self.kind,
            "flags": dict(self.flags),
            "residuals": {k: to_text(v) for k, v in self.residuals.items()},
            "residuals_at_x0": dict(self.residuals_at_x0),
            "verdicts": {k: v.as_dict() for k, v in self.verdicts.items()},
            "canonical": None if self.canonical is None else self.canonical.as_dict(),
            "tag": self.tag,
        }


def _and(*flags):
    """Three-valued conjunction: False dominates, then None."""
    if any(f is False for f in flags):
        return False
    if any(f is None for f in flags):
        return None
    return True


def _safe_eval(e: Expr, point, params) -> float | None:
    try:
        return evaluate(e, point, params)
    except Exception:
        return None


def ladder_residuals(s: QNLStructure, simplified: bool = True) -> dict[str, Expr]:
    """The expressions whose vanishing defines each rung of the ladder."""
    Xi = s.system
    A, B = Xi.A, Xi.B
    LA = lambda e: lie_derivative(A, e, simplified)
    LB = lambda e: lie_derivative(B, e, simplified)
    g0, g1, m0, m1 = s.gamma0, s.gamma1, s.mu0, s.mu1
    out: dict[str, Expr] = {}
    if Xi.kind in ("E", "H"):
        pm = _pm(Xi.kind)
        ag0, ag1 = s.antigamma
        out["kappa"] = s.kappa
        out["const_A0"] = LA(g0) + ag0 * m0
        out["const_A1"] = LA(g1) + ag1 * m0
        out["const_B0"] = LB(g0) + pm * ag0 * m1
        out["const_B1"] = LB(g1) + pm * ag1 * m1
        out["gamma0"] = g0
        out["gamma1"] = g1
    else:
        G = s.Gamma
        out["strongly_flat"] = (LA(LA(g1)) + g1 * (LA(m1) - m1 ** 2)
                                - (m0 * m1 / 2 + LA(m0) / 2 + LB(m1)))
        out["const_A"] = LA(G) + 2 * m1 * G
        out["const_B"] = LB(G) + 2 * G * LA(g1) - G * m0 + 2 * G * g1 * m1
        out["Gamma"] = G
    if simplified:
        out = {k: simplify(v) for k, v in out.items()}
    return out


def ladder_classify(Xi: QuadraticNLSystem, x0: Mapping[str, float], box: Box,
                    spec: SampleSpec = SampleSpec()) -> LadderLabel:
    """Decide the classification ladder flags by zero tests on ``box``."""
    s = qnl_structure(Xi, box, spec)
    params = box.params
    x0 = dict(x0)
    res = ladder_residuals(s)
    verdicts = {k: is_identically_zero(v, box, spec) for k, v in res.items()}
    at_x0 = {k: _safe_eval(v, x0, params) for k, v in res.items()}
    flag = lambda k: verdicts[k].flag
    canonical = None
    tag = None
    if Xi.kind in ("E", "H"):
        flat = flag("kappa")
        const = _and(flat, flag("const_A0"), flag("const_A1"), flag("const_B0"), flag("const_B1"))
        null = _and(const, flag("gamma0"), flag("gamma1"))
        flags = {"conformally_flat": True, "flat": flat, "constant_form": const, "null_form": null}
        if const:
            g0 = _safe_eval(s.gamma0, x0, params)
            g1 = _safe_eval(s.gamma1, x0, params)
            if g0 is not None and g1 is not None:
                canonical = canonical_eh(g0, g1, Xi.kind)
                tag = canonical.tag
    else:
        strong = flag("strongly_flat")
        null = _and(strong, flag("Gamma"))
        G0 = at_x0["Gamma"]
        gamma_nonzero = G0 is not None and abs(G0) > spec.tol
        # the null form is the Gamma = 0 end of the constant-form rung
        if gamma_nonzero:
            const = _and(strong, flag("const_A"), flag("const_B"))
        else:
            const = null
        flags = {"weakly_flat": True, "strongly_flat": strong, "constant_form": const,
                 "null_form": null}
        if null:
            tag = "Xi_P^0"
        elif const and G0 is not None:
            tag = "Xi_P^+" if G0 > 0 else "Xi_P^-"
    return LadderLabel(Xi.kind, flags, res, at_x0, verdicts, canonical, tag)


# ---------------------------------------------------------------- conformal frames


@dataclass(frozen=True)
class ConformalCheck:
    kind: str
    conformal: bool | None
    r: Expr | None
    cauchy_riemann: ResidualReport | None = None
    ratio_sq: Expr | None = None
    ratio: ResidualReport | None = None

    def as_dict(self) -> dict:
        from .symexpr import to_text
        out = {"kind": self.kind, "conformal": self.conformal,
               "r": None if self.r is None else to_text(self.r)}
        if self.cauchy_riemann is not None:
            out["cauchy_riemann"] = self.cauchy_riemann.as_dict()
        if self.ratio_sq is not None:
            out["ratio_sq"] = to_text(self.ratio_sq)
        if self.ratio is not None:
            out["ratio"] = self.ratio.as_dict()
        return out


def conformal_factor(Xi: QuadraticNLSystem, box: Box | None = None,
                     spec: SampleSpec = SampleSpec()) -> tuple[bool | None, Expr | None]:
    """Whether (A, B) = (r d/dz, r d/dy) and, if so, r."""
    A, B = Xi.A, Xi.B
    tests = [A[1], B[0], A[0] - B[1]]
    flags = []
    for t in tests:
        t = simplify(t)
        if t == 0:
            flags.append(True)
        elif box is None:
            flags.append(False)
        else:
            flags.append(is_identically_zero(t, box, spec).flag)
    ok = _and(*flags)
    return ok, (simplify(A[0]) if ok else None)


def check_conformal_frame(Xi: QuadraticNLSystem, phi=None, target: QuadraticNLSystem | None = None,
                          grid: Grid | None = None, box: Box | None = None,
                          spec: SampleSpec = SampleSpec(), tol: float = 1e-9) -> ConformalCheck:
    """Test whether the frame is conformal and, for a supplied map phi, the
    Cauchy-Riemann-type system and the scale relation against ``target``.

    ``phi`` is a pair of expressions over the chart of ``Xi``; ``target`` is a
    conformal system on the image chart.
    """
    if Xi.kind not in ("E", "H"):
        raise KindMismatch("conformal frames are defined for E and H kinds")
    conformal, r = conformal_factor(Xi, box, spec)
    if phi is None:
        return ConformalCheck(Xi.kind, conformal, r)
    if grid is None:
        raise ValueError("checking a map needs a grid")
    names = Xi.chart.names
    p1, p2 = (as_expr(c) for c in phi)
    d = lambda e, v: differentiate(e, v)
    z, y = names
    upper = Xi.kind == "E"
    cr1 = d(p1, z) - d(p2, y)
    cr2 = d(p1, y) + d(p2, z) if upper else d(p1, y) - d(p2, z)
    pts = grid.points()
    v1 = evaluate_many(cr1, grid.names, pts, grid.params)
    v2 = evaluate_many(cr2, grid.names, pts, grid.params)
    cr_report = residual_report(np.maximum(np.abs(v1), np.abs(v2)), pts, grid.names, tol)
    ratio_sq = simplify(d(p1, z) ** 2 + (1 if upper else -1) * d(p1, y) ** 2)
    ratio_report = None
    if target is not None:
        tconf, rt = conformal_factor(target)
        if not tconf or not conformal:
            raise ValueError("both systems must be in conformal form to compare scales")
        rt_at = rt.xreplace(dict(zip(target.chart.symbols, (p1, p2))))
        diff = ratio_sq - (rt_at / r) ** 2
        vals = evaluate_many(diff, grid.names, pts, grid.params)
        ratio_report = residual_report(vals, pts, grid.names, tol)
    return ConformalCheck(Xi.kind, conformal, r, cr_report, ratio_sq, ratio_report)


# ---------------------------------------------------------------- commutative P-frame (numeric)


@dataclass(frozen=True)
class NumericPFrame:
    """alpha(z, y), beta(z, y) from fixed-step RK4 along z, starting at z0."""

    solve: Callable
    z0: float

    def alpha(self, p) -> float:
        return self.solve(p[0], p[1])[2]

    def beta(self, p) -> float:
        return self.solve(p[0], p[1])[0]


def commutative_p_frame(Xi: QuadraticNLSystem, x0: Mapping[str, float], step: float = 1e-3,
                        params: Mapping[str, float] | None = None) -> NumericPFrame:
    """Reparametrisation making a rectified P-frame (A = d/dz) commutative.

    Integrates, along z at fixed y,

        beta'   = -beta mu1
        beta_y' = -beta_y mu1 - beta d(mu1)/dy
        alpha'  = (L_B beta)/beta - mu0/2 - alpha mu1

    with beta = 1, beta_y = 0, alpha = 0 at z = z0.  These make mu1~ and
    mu0~ vanish.
    """
    if Xi.kind != "P":
        raise KindMismatch("commutative P-frame construction needs kind P")
    if simplify(Xi.A[0] - 1) != 0 or simplify(Xi.A[1]) != 0:
        raise ValueError("the numeric path needs a rectified frame with A = d/dz")
    s = qnl_structure(Xi)
    z, y = Xi.chart.names
    names = (z, y)
    f_mu0 = numeric_function(s.mu0, names, params)
    f_mu1 = numeric_function(s.mu1, names, params)
    f_mu1y = numeric_function(differentiate(s.mu1, y), names, params)
    f_bz = numeric_function(Xi.B[0], names, params)
    f_by = numeric_function(Xi.B[1], names, params)
    z0 = float(x0[z])

    def rhs(zz, yy, state):
        beta, beta_y, alpha = state
        p = (zz, yy)
        m0, m1 = f_mu0(p), f_mu1(p)
        beta_z = -beta * m1
        lb_beta = f_bz(p) * beta_z + f_by(p) * beta_y
        return np.array([beta_z, -beta_y * m1 - beta * f_mu1y(p),
                         lb_beta / beta - m0 / 2 - alpha * m1])

    def solve(zz: float, yy: float) -> np.ndarray:
        n = max(1, int(math.ceil(abs(zz - z0) / step)))
        h = (zz - z0) / n
        state = np.array([1.0, 0.0, 0.0])
        t = z0
        for _ in range(n):
            k1 = rhs(t, yy, state)
            k2 = rhs(t + h / 2, yy, state + h / 2 * k1)
            k3 = rhs(t + h / 2, yy, state + h / 2 * k2)
            k4 = rhs(t + h, yy, state + h * k3)
            state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        return state

    return NumericPFrame(solve, z0)
