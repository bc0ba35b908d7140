"""Control-affine systems xi' = f(xi) + g(xi) u on a 3-chart.

Structure functions come from ad_g^3 f = rho ad_g^2 f + tau ad_g f (mod g);
the obstruction is chi = 3 L_g rho - 2 rho^2 - 9 tau, and quadratisability
needs the frame (g, ad_g f, ad_g^2 f) to be independent and
L_g chi - (2/3) rho chi = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np
import sympy

from .errors import EvalError, DegenerateAB, DegenerateFrame, MixedSign, OdeViolated, SecondDerivativeVanishes
from .fields import (
    VectorField,
    decompose_in_frame,
    iterated_ad,
    lie_derivative,
    vanishes_somewhere,
    wedge_det,
)
from .oracle import Grid, ResidualReport, fd_partial, residual_report
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
    sample_points,
    simplify,
    symbol,
)

TAGS = ("Elliptic", "Hyperbolic", "Parabolic", "NotQuadratizable", "C1Fails",
        "Transitional", "Inconclusive")


@dataclass(frozen=True)
class AffineSystem:
    f: VectorField
    g: VectorField

    def __post_init__(self):
        if self.f.chart != self.g.chart:
            raise ValueError("f and g must share a chart")
        if self.f.chart.dimension != 3:
            raise ValueError("affine systems here live on a 3-dimensional chart")

    @property
    def chart(self) -> Chart:
        return self.f.chart

    def feedback(self, alpha, beta) -> "AffineSystem":
        """The system (f + alpha g, beta g)."""
        return AffineSystem(self.f + self.g.scale(alpha), self.g.scale(beta))


@dataclass(frozen=True)
class AffineStructure:
    system: AffineSystem
    rho: Expr
    tau: Expr
    chi: Expr
    c2_residual: Expr
    frame_det: Expr
    c1_value_at_xi0: float
    c1_pass: bool
    chi_at_xi0: float | None
    chi_verdict: ZeroVerdict
    c2_verdict: ZeroVerdict
    frame_singular: bool = False


def _chi(g, rho, tau, simplified):
    chi = 3 * lie_derivative(g, rho, simplified) - 2 * rho ** 2 - 9 * tau
    return simplify(chi) if simplified else chi


class AffineInvariants(NamedTuple):
    rho: Expr
    tau: Expr
    chi: Expr
    c2_residual: Expr
    frame_det: Expr


def affine_invariants(S: AffineSystem, simplified: bool = True) -> AffineInvariants:
    """rho, tau, chi, the second quadratisability residual and the frame determinant."""
    f, g = S.f, S.g
    ad1 = iterated_ad(g, f, 1, simplified)
    ad2 = iterated_ad(g, ad1, 1, simplified)
    ad3 = iterated_ad(g, ad2, 1, simplified)
    dec = decompose_in_frame(ad3, (g, ad1, ad2), None, SampleSpec(), simplified)
    _, tau, rho = dec
    chi = _chi(g, rho, tau, simplified)
    c2 = lie_derivative(g, chi, simplified) - sympy.Rational(2, 3) * rho * chi
    if simplified:
        c2 = simplify(c2)
    return AffineInvariants(rho, tau, chi, c2, dec.determinant)


def affine_structure(S: AffineSystem, xi0: Mapping[str, float], box: Box,
                     spec: SampleSpec = SampleSpec(), simplified: bool = True) -> AffineStructure:
    """Invariants of S with C1 checked at xi0 and zero verdicts for chi and C2 on the box."""
    rho, tau, chi, c2, det = affine_invariants(S, simplified)
    params = box.params
    try:
        c1_val = evaluate(det, xi0, params)
    except EvalError:
        c1_val = float("nan")
    c1_pass = math.isfinite(c1_val) and abs(c1_val) > spec.tol
    chi_v = is_identically_zero(chi, box, spec, simplify_first=simplified)
    c2_v = is_identically_zero(c2, box, spec, simplify_first=simplified)
    try:
        chi0 = evaluate(chi, xi0, params)
    except EvalError:
        chi0 = None
    singular = vanishes_somewhere(det, box, spec)
    return AffineStructure(S, rho, tau, chi, c2, det, c1_val, c1_pass, chi0, chi_v, c2_v, singular)


@dataclass(frozen=True)
class AffineClassification:
    tag: str
    structure: AffineStructure | None
    reason: str


def classify_affine(S: AffineSystem, xi0: Mapping[str, float], box: Box,
                    spec: SampleSpec = SampleSpec(), simplified: bool = True) -> AffineClassification:
    """Elliptic / Hyperbolic / Parabolic / NotQuadratizable / C1Fails.

    Transitional marks chi(xi0) = 0 without chi vanishing on the box.
    Inconclusive is reported when the sampled verdicts could not decide.
    """
    try:
        st = affine_structure(S, xi0, box, spec, simplified)
    except DegenerateFrame:
        return AffineClassification("C1Fails", None, "frame determinant is identically zero")
    if not st.c1_pass:
        return AffineClassification("C1Fails", st, "frame determinant vanishes at the base point")
    if st.chi_verdict.is_zero:
        return AffineClassification("Parabolic", st, "chi vanishes on the box")
    if st.c2_verdict.is_nonzero:
        return AffineClassification("NotQuadratizable", st, "L_g chi - (2/3) rho chi is nonzero")
    if st.c2_verdict.flag is None or st.chi_at_xi0 is None:
        return AffineClassification("Inconclusive", st, "sampling failed on the box")
    if abs(st.chi_at_xi0) <= spec.tol:
        return AffineClassification("Transitional", st, "chi(xi0) = 0 but chi is not identically zero")
    if st.chi_at_xi0 > 0:
        return AffineClassification("Elliptic", st, "chi(xi0) > 0")
    return AffineClassification("Hyperbolic", st, "chi(xi0) < 0")


# ---------------------------------------------------------------- the h family

W = "w"
H_CHART = Chart(("z", "y", "w"))


@dataclass(frozen=True)
class HFamily:
    """Parameters of z' = h(x, w), y' = w + epsilon, w' = u."""

    a: Expr
    b: Expr
    c: Expr
    d: Expr
    e: Expr
    epsilon: int = 0

    def __post_init__(self):
        for k in "abcde":
            object.__setattr__(self, k, as_expr(getattr(self, k)))
        if self.epsilon not in (0, 1):
            raise ValueError("epsilon must be 0 or 1")

    @property
    def p(self) -> Expr:
        w = symbol(W)
        return self.d * w ** 2 + self.e * w + 1

    @property
    def h(self) -> Expr:
        return build_h_normal_form(self)

    def system(self, epsilon: int | None = None) -> AffineSystem:
        eps = self.epsilon if epsilon is None else epsilon
        f = VectorField(H_CHART, (self.h, symbol(W) + eps, 0))
        return AffineSystem(f, VectorField.coordinate(H_CHART, W))


def build_h_normal_form(fam: HFamily) -> Expr:
    """h = 2 a w^2 / ((sqrt(p) + 1)^2 - d w^2) + b w + c."""
    w = symbol(W)
    p = fam.d * w ** 2 + fam.e * w + 1
    return 2 * fam.a * w ** 2 / ((sympy.sqrt(p) + 1) ** 2 - fam.d * w ** 2) + fam.b * w + fam.c


def h_prime_closed_form(fam: HFamily) -> Expr:
    """h' = 2 a w (sqrt(p) + 1) / (sqrt(p) (e w + 2 + 2 sqrt(p))) + b."""
    w = symbol(W)
    sp = sympy.sqrt(fam.p)
    return 2 * fam.a * w * (sp + 1) / (sp * (fam.e * w + 2 + 2 * sp)) + fam.b


class HOdeResidual(NamedTuple):
    residual: Expr
    h2_at_w0: Expr
    terms: tuple[Expr, Expr, Expr]


def h_ode_residual(h, w: str = W, simplified: bool = True) -> HOdeResidual:
    """9 h5 h2^2 - 45 h4 h3 h2 + 40 h3^3 for w-derivatives of h."""
    h = as_expr(h)
    d = [h]
    for _ in range(5):
        d.append(differentiate(d[-1], w))
    h2, h3, h4, h5 = d[2], d[3], d[4], d[5]
    terms = (9 * h5 * h2 ** 2, -45 * h4 * h3 * h2, 40 * h3 ** 3)
    res = sum(terms, sympy.Integer(0))
    if simplified:
        res = simplify(res)
    return HOdeResidual(res, h2.subs(symbol(w), 0), terms)


# stencil half-width as a fraction of |h''/h'''|; the outermost order-5 nodes sit 6 steps out
SCALE_FRACTION = 0.03


def h_ode_check(h, x: Mapping[str, float], w_values, params: Mapping[str, float] | None = None,
                rel_tol: float = 1e-7, fd_rel_tol: float = 1e-3,
                step: float = 2e-2) -> tuple[ResidualReport, ResidualReport]:
    """The h ODE at (x, w) for each w, relative to the size of its terms.

    The first report uses symbolic derivatives, the second finite differences
    of h alone, with the step capped at a tenth of the local scale |h''/h'''|.
    Points where h cannot be evaluated are skipped.
    """
    h = as_expr(h)
    names = ("z", "y", W)
    terms = h_ode_residual(h, simplified=False).terms
    fn = numeric_function(h, names, params)
    pts, sym, fd = [], [], []
    for wv in w_values:
        q = {"z": x["z"], "y": x["y"], W: float(wv)}
        try:
            vals = [evaluate(t, q, params) for t in terms]
            p = np.array([q[n] for n in names])
            # shrink the stencil where h'' varies on a short length scale
            r2 = fd_partial(fn, p, 2, 2, 1e-3)
            r3 = fd_partial(fn, p, 2, 3, 1e-3)
            hw = min(step, SCALE_FRACTION * abs(r2 / r3)) if r3 != 0 else step
            d2, d3, d4, d5 = (fd_partial(fn, p, 2, k, hw) for k in (2, 3, 4, 5))
        except Exception:
            continue
        scale = max(abs(v) for v in vals)
        sym.append(abs(sum(vals)) / scale if scale > 0 else 0.0)
        fterms = (9 * d5 * d2 ** 2, -45 * d4 * d3 * d2, 40 * d3 ** 3)
        fscale = max(abs(v) for v in fterms)
        fd.append(abs(sum(fterms)) / fscale if fscale > 1e-12 else abs(sum(fterms)))
        pts.append([q[n] for n in names])
    if not pts:
        raise OdeViolated("h could not be evaluated at any requested point")
    pts = np.array(pts)
    return (residual_report(np.array(sym), pts, names, rel_tol, details={"relative": True}),
            residual_report(np.array(fd), pts, names, fd_rel_tol, details={"relative": True}))


class DEA(NamedTuple):
    d: float
    e: float
    a: float


def _rho_parts(h, w=W):
    h2 = differentiate(h, w, 2)
    h3 = differentiate(h, w, 3)
    rho = h3 / h2
    return h2, rho, differentiate(rho, w)


def extract_de(h, x0: Mapping[str, float], params: Mapping[str, float] | None = None,
               check_ode: bool = True, tol: float = 1e-12) -> DEA:
    """Recover (d, e, a) at x0 from rho = h'''/h'' and its w-derivative at w = 0."""
    h = as_expr(h)
    point = dict(x0)
    point[W] = 0.0
    h2, rho, drho = _rho_parts(h)
    a = evaluate(h2, point, params)
    if abs(a) <= tol:
        raise SecondDerivativeVanishes(f"h''(x0, 0) = {a}")
    if check_ode:
        terms = h_ode_residual(h, simplified=False).terms
        for wv in (-0.05, 0.0, 0.05):
            q = dict(point, w=wv)
            vals = [evaluate(t, q, params) for t in terms]
            scale = max(abs(v) for v in vals)
            if abs(sum(vals)) > 1e-7 * max(scale, 1e-300) and abs(sum(vals)) > 1e-12:
                raise OdeViolated(f"ODE residual {sum(vals):.3e} at w = {wv}")
    r0 = evaluate(rho, point, params)
    r1 = evaluate(drho, point, params)
    e = -2.0 / 3.0 * r0
    d = e * e / 2.0 - r1 / 3.0
    return DEA(d, e, a)


@dataclass(frozen=True)
class HClass:
    tag: str
    d_at_x0: float
    chi_at_x0: float
    consistent: bool


def h_chi(h) -> Expr:
    """chi of the h system: 3 rho' - 2 rho^2 with rho = h'''/h''."""
    _, rho, drho = _rho_parts(as_expr(h))
    return 3 * drho - 2 * rho ** 2


def classify_h(fam, x0: Mapping[str, float], box: Box | None = None,
               spec: SampleSpec = SampleSpec()) -> HClass:
    """Sign of d decides; chi computed from h alone is the cross-check."""
    params = box.params if box is not None else None
    h = fam.h if isinstance(fam, HFamily) else as_expr(fam)
    point = dict(x0)
    point[W] = 0.0
    chi0 = evaluate(h_chi(h), point, params)
    if isinstance(fam, HFamily):
        d_expr = fam.d
        d0 = evaluate(d_expr, point, params)
        if simplify(d_expr) == 0:
            zero = True
        elif box is not None:
            xbox = Box(tuple(b for b in box.bounds if b[0] != W), box.fixed)
            zero = is_identically_zero(d_expr, xbox, spec).is_zero
        else:
            zero = False
    else:
        d0 = extract_de(h, x0, params).d
        zero = False
        if box is not None:
            zero = is_identically_zero(h_chi(h), box, spec, simplify_first=False).is_zero
    if zero:
        return HClass("Parabolic", 0.0, chi0, abs(chi0) <= 1e-8)
    if abs(d0) <= spec.tol:
        raise MixedSign("d vanishes at x0 without vanishing identically")
    tag = "Elliptic" if d0 < 0 else "Hyperbolic"
    return HClass(tag, d0, chi0, chi0 * d0 < 0)


@dataclass(frozen=True)
class ReparamSpec:
    """Control change w -> wbar that brings the h system to its normal form.

    ``wbar`` maps (x, w) to the new control, ``w_of_wbar`` is its inverse,
    ``relation`` is the defining identity as (lhs, rhs), ``tau`` the constant-
    in-w coefficient of the normal form and ``p`` must stay positive.
    """

    kind: str
    wbar: Expr
    w_of_wbar: Expr
    relation: tuple[Expr, Expr]
    tau: Expr
    p: Expr
    family: HFamily

    def validate(self, grid: Grid, step: float = 1e-2, tol: float = 1e-6) -> ResidualReport:
        """Finite-difference check of d3F/dwbar3 = tau dF/dwbar for F(wbar) = drift.

        ``grid`` ranges over the chart coordinates z, y and ``wbar``.
        """
        fam = self.family
        sub = {symbol(W): self.w_of_wbar}
        drift = (fam.h.xreplace(sub), (symbol(W) + fam.epsilon).xreplace(sub))
        names = grid.names
        params = grid.params
        fns = [numeric_function(c, names, params) for c in drift]
        tau_fn = numeric_function(self.tau, names, params)
        k = names.index("wbar")
        pts = grid.points()
        res = []
        for p in pts:
            t = tau_fn(p)
            worst = 0.0
            for fn in fns:
                d3 = fd_partial(fn, p, k, 3, step)
                d1 = fd_partial(fn, p, k, 1, step)
                worst = max(worst, abs(d3 - t * d1))
            res.append(worst)
        return residual_report(np.array(res), pts, names, tol)


def normalizing_reparam(fam: HFamily, box: Box | None = None,
                        spec: SampleSpec = SampleSpec()) -> ReparamSpec:
    """Branch P (d = 0), E (d < 0) or H (d > 0) of the normalising control change."""
    w = symbol(W)
    wb = symbol("wbar")
    d, e = fam.d, fam.e
    p = fam.p
    if simplify(d) == 0:
        kind = "P"
    elif d.is_number:
        kind = "E" if d < 0 else "H"
    else:
        if box is None:
            raise MixedSign("a non-constant d needs a box to fix its sign")
        xbox = Box(tuple(b for b in box.bounds if b[0] != W), box.fixed)
        vals = evaluate_many(d, xbox.names, sample_points(xbox, spec), xbox.params)
        if np.isfinite(vals).all() and (np.abs(vals) <= spec.tol).all():
            kind = "P"
        elif np.isfinite(vals).all() and (vals < -spec.tol).all():
            kind = "E"
        elif np.isfinite(vals).all() and (vals > spec.tol).all():
            kind = "H"
        else:
            raise MixedSign("d changes sign (or vanishes) on the box")
    denom = e * w + 2 + 2 * sympy.sqrt(p)
    if kind == "P":
        wbar = w / (1 + sympy.sqrt(e * w + 1))
        inverse = 2 * wb + e * wb ** 2
        relation = (wb, wbar)
        tau = sympy.Integer(0)
        pp = e * w + 1
    else:
        s = sympy.sqrt(-d) if kind == "E" else sympy.sqrt(d)
        wt = w / sympy.sqrt(denom)
        if kind == "E":
            wbar = sympy.asin(s * wt) / s
            wt_of = sympy.sin(s * wb) / s
            relation = (sympy.sin(s * wb) ** 2, -d * w ** 2 / denom)
        else:
            wbar = sympy.asinh(s * wt) / s
            wt_of = sympy.sinh(s * wb) / s
            relation = (sympy.sinh(s * wb) ** 2, d * w ** 2 / denom)
        inverse = wt_of * (e * wt_of + 2 * sympy.sqrt(d * wt_of ** 2 + 1))
        tau = 4 * d
        pp = p
    return ReparamSpec(kind, wbar, inverse, relation, tau, pp, fam)


# ---------------------------------------------------------------- series form


def _series_sums(tau, K: int, u):
    sa = sum((u ** (2 * k + 2) / sympy.factorial(2 * k + 2) * tau ** k for k in range(K)),
             sympy.Integer(0))
    sb = sum((u ** (2 * k + 1) / sympy.factorial(2 * k + 1) * tau ** k for k in range(K)),
             sympy.Integer(0))
    return sa, sb


def series_fq(A: VectorField, B: VectorField, C: VectorField, tau, K: int, w0=0,
              w: str = W) -> VectorField:
    """Truncated power-series drift A S_A + B S_B + C, extended by a zero w-component."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if wedge_det((A, B)) == 0:
        raise DegenerateAB("A and B are parallel")
    chart = Chart(A.chart.names + (w,))
    u = symbol(w) - as_expr(w0)
    sa, sb = _series_sums(as_expr(tau), K, u)
    comps = tuple(a * sa + b * sb + c for a, b, c in zip(A, B, C)) + (sympy.Integer(0),)
    return VectorField(chart, comps)


def series_residual(f: VectorField, tau, w: str = W) -> tuple[Expr, ...]:
    """d3f/dw3 - tau df/dw, componentwise."""
    tau = as_expr(tau)
    return tuple(sympy.expand(differentiate(c, w, 3) - tau * differentiate(c, w))
                 for c in f.components[:-1])


def cauchy_identity_check(a, b, c0, c1, tau, K: int, grid: Grid,
                          tol: float = 1e-9) -> ResidualReport:
    """((y' - c1)/b)^2 - tau ((z' - c0)/a)^2 - 2 (z' - c0)/a on the series drift."""
    a, b, c0, c1, tau = (as_expr(v) for v in (a, b, c0, c1, tau))
    chart = Chart(("z", "y"))
    A = VectorField(chart, (a, 0))
    B = VectorField(chart, (0, b))
    C = VectorField(chart, (c0, c1))
    f = series_fq(A, B, C, tau, K)
    zd, yd = f[0], f[1]
    ident = ((yd - c1) / b) ** 2 - tau * ((zd - c0) / a) ** 2 - 2 * (zd - c0) / a
    pts = grid.points()
    vals = evaluate_many(ident, grid.names, pts, grid.params)
    if not np.isfinite(vals).all():
        i = int(np.flatnonzero(~np.isfinite(vals))[0])
        evaluate(ident, dict(zip(grid.names, pts[i])), grid.params)
    return residual_report(vals, pts, grid.names, tol)
