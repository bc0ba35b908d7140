import random

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from conickit.affine import classify_affine
from conickit.conics import (
    ConicSubmanifold,
    Diffeomorphism,
    EquivalenceWitness,
    classify_conic,
    conic_determinants,
    constraint_residual,
    extend,
    parametrize_conic,
    pullback_conic,
    verify_equivalence,
)
from conickit.errors import EvalError, NotInNormalForm, SingularJacobian
from conickit.oracle import Grid
from conickit.symexpr import (
    Box,
    Chart,
    SampleSpec,
    differentiate,
    evaluate,
    is_identically_zero,
    parse_expr,
    simplify,
    symbol,
)

XY = Chart(("z", "y"))
VEL = Chart(("z", "y", "zdot", "ydot"))
PARAMS = ["a", "b", "c", "c0", "c1", "tau", "r"]
X0 = {"z": 0.0, "y": 0.0}
BOX = Box.around(X0, 0.5)
z, y = XY.symbols


def conic(text):
    return ConicSubmanifold.from_expr(parse_expr(text, VEL, PARAMS))


def test_bordered_matrix_layout():
    S = conic("2*zdot^2 + 3*zdot*ydot + 5*ydot^2 + 4*zdot - 6*ydot + 7")
    assert S.bordered() == sympy.Matrix([[2, sympy.Rational(3, 2), 2],
                                         [sympy.Rational(3, 2), 5, -3],
                                         [2, -3, 7]])


def test_from_expr_rejects_cubic():
    with pytest.raises(NotInNormalForm):
        conic("zdot^3 - 1")


def test_determinants_unit_circle():
    assert conic_determinants(conic("zdot^2 + ydot^2 - 1")) == (-1, 1)


def test_determinants_normal_form():
    S = conic("(ydot - c1)^2/b^2 - tau*((zdot - c0)/a)^2 - 2*(zdot - c0)/a")
    d1, d2 = conic_determinants(S)
    a, b, tau = symbol("a"), symbol("b"), symbol("tau")
    assert simplify(d1 + 1 / (a ** 2 * b ** 2)) == 0
    assert simplify(d2 + tau / (a ** 2 * b ** 2)) == 0


def test_parabolic_delta1_matches_brute_force():
    S = conic("a*ydot^2 - zdot + b*ydot + c")
    d1, d2 = conic_determinants(S)
    assert d2 == 0
    assert simplify(d1 + symbol("a") / 4) == 0
    # independent numeric determinant of g = diag(0, a), omega = (-1/2, b/2), h = c
    for a, b, c in [(1.0, 0.0, 0.0), (3.0, 2.0, 1.0), (-0.7, 0.4, 5.0)]:
        M = np.array([[0, 0, -0.5], [0, a, b / 2], [-0.5, b / 2, c]])
        assert np.linalg.det(M) == pytest.approx(-a / 4)
        assert evaluate(d1, {}, {"a": a}) == pytest.approx(np.linalg.det(M))


@pytest.mark.parametrize("text,tag", [
    ("zdot^2 + ydot^2 - 1", "Elliptic"),
    ("zdot^2 - ydot^2 - 1", "Hyperbolic"),
    ("ydot^2 - zdot", "Parabolic"),
    ("3*ydot^2 - zdot + 2*ydot + 1", "Parabolic"),
    ("zdot^2 + ydot^2 + 1", "Empty"),
    ("zdot^2", "Degenerate"),
    ("zdot^2 + y*ydot^2 + ydot - 1", "Transitional"),
])
def test_classify(text, tag):
    cls = classify_conic(conic(text), X0, BOX)
    assert cls.tag == tag
    if tag == "Elliptic":
        assert cls.delta2_at_x0 > 0
    if tag == "Hyperbolic":
        assert cls.delta2_at_x0 < 0
    if tag == "Parabolic":
        assert cls.delta2_verdict.is_zero and abs(cls.delta1_at_x0) > 0
    if tag == "Degenerate":
        assert cls.delta1_at_x0 == 0


def test_pullback_identity():
    S = conic("zdot^2 + y*ydot^2 + z*zdot - 1")
    T = pullback_conic(S, Diffeomorphism.identity(XY))
    assert T == S


def test_pullback_linear_shear():
    S = conic("zdot^2 + ydot^2 - 1")
    phi = Diffeomorphism(XY, XY, (z, y - z))
    T = pullback_conic(S, phi)
    assert T.g == sympy.Matrix([[2, -1], [-1, 1]])
    assert conic_determinants(T) == (-1, 1)


def test_pullback_scaling_multiplies_by_theta_squared():
    S = conic("zdot^2 + ydot^2 - 1")
    T = pullback_conic(S, Diffeomorphism(XY, XY, (2 * z, 2 * y)))
    assert conic_determinants(T) == (-16, 16)


def test_pullback_singular_jacobian():
    with pytest.raises(SingularJacobian):
        pullback_conic(conic("zdot^2 - 1"), Diffeomorphism(XY, XY, (z + y, z + y)))


def _diffeo(rng, quadratic):
    def coef():
        return sympy.Rational(rng.randint(-5, 5), 10)
    p1 = z + coef() * y
    p2 = y + coef() * z
    if quadratic:
        p1 += coef() * z * y + coef() * y ** 2
        p2 += coef() * z ** 2
    return Diffeomorphism(XY, XY, (p1, p2))


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("quadratic", [False, True])
def test_determinants_transform_with_theta_squared(seed, quadratic):
    rng = random.Random(seed)
    phi = _diffeo(rng, quadratic)
    S = conic("(1 + z^2)*zdot^2 + y*zdot*ydot - (2 + y)*ydot^2 + z*ydot - 1")
    T = pullback_conic(S, phi)
    theta = phi.theta
    sub = phi.substitution()
    box = Box.around(X0, 0.2)
    for dt, ds in zip(conic_determinants(T), conic_determinants(S)):
        assert is_identically_zero(dt - theta ** 2 * ds.xreplace(sub), box, simplify_first=False).is_zero
        assert np.sign(evaluate(dt, X0)) == np.sign(evaluate(ds.xreplace(sub), X0))


def _example1():
    S = parse_expr("zdot - (-1 + sqrt(1 + ydot))^2", VEL)
    St = parse_expr("zdot - (ydot/2)^2", VEL)
    delta = parse_expr("-(zdot - ydot - 2 - 2*sqrt(1 + ydot))/4", VEL)
    return S, St, Diffeomorphism(XY, XY, (z, y - z)), delta


GRID = Grid((("z", -1, 1, 4), ("y", -1, 1, 4), ("zdot", -1, 1, 6), ("ydot", -0.8, 1, 6)))


def test_example1_witness():
    S, St, phi, delta = _example1()
    rep = verify_equivalence(S, St, EquivalenceWitness(phi, delta), GRID)
    assert rep.passed and rep.max_abs < 1e-12
    assert rep.details["delta_nonvanishing"]


def test_identity_witness():
    S = conic("zdot^2 + ydot^2 - 1")
    rep = verify_equivalence(S, S, EquivalenceWitness(Diffeomorphism.identity(XY), 1), GRID)
    assert rep.max_abs == 0.0 and rep.passed


def test_wrong_delta_fails_with_witness():
    S, St, phi, _ = _example1()
    rep = verify_equivalence(S, St, EquivalenceWitness(phi, 1), GRID)
    assert not rep.passed
    assert set(rep.argmax) == {"z", "y", "zdot", "ydot"}
    assert rep.max_abs > 0.1


def test_grid_outside_domain_raises_with_point():
    S, St, phi, delta = _example1()
    grid = Grid((("z", 0, 0, 1), ("y", 0, 0, 1), ("zdot", 0, 0, 1), ("ydot", -2, -2, 1)))
    with pytest.raises(EvalError) as info:
        verify_equivalence(S, St, EquivalenceWitness(phi, delta), grid)
    assert info.value.point["ydot"] == -2.0


def test_parametrize_dubins():
    S = conic("zdot^2/r^2 + ydot^2/r^2 - 1")
    box = Box.around(X0, 0.5, {"r": 2.0})
    cls = classify_conic(S, X0, box)
    Xi = parametrize_conic(S, cls, {"r": 2.0})
    w = symbol("w")
    r = symbol("r")
    fz, fy = Xi.drift()
    assert simplify(fz - sympy.Abs(r) * sympy.cos(w)) == 0
    assert simplify(fy - sympy.Abs(r) * sympy.sin(w)) == 0


@pytest.mark.parametrize("text,kind,drift", [
    ("ydot^2 - zdot", "P", ("w^2", "w")),
    ("zdot^2 - ydot^2 - 1", "H", ("cosh(w)", "sinh(w)")),
    ("zdot^2 + ydot^2 - 1", "E", ("cos(w)", "sin(w)")),
    ("4*(zdot - 1)^2 + 9*(ydot + z)^2 - 1", "E", ("1 + cos(w)/2", "-z + sin(w)/3")),
    ("2*ydot^2 - zdot + 3*ydot + y", "P", ("2*w^2 + 3*w + y", "w")),
])
def test_parametrize_normal_forms(text, kind, drift):
    S = conic(text)
    cls = classify_conic(S, X0, BOX)
    Xi = parametrize_conic(S, cls)
    assert Xi.kind == kind
    ch = Chart(("z", "y", "w"))
    for got, want in zip(Xi.drift(), drift):
        assert simplify(got - parse_expr(want, ch)) == 0
    assert simplify(constraint_residual(S, Xi)) == 0


def test_parametrize_constraint_residual_sampled():
    S = conic("(1 + z^2)*zdot^2 + (2 + y^2)*ydot^2 - 1")
    Xi = parametrize_conic(S, classify_conic(S, X0, BOX))
    res = constraint_residual(S, Xi)
    box = Box.around({"z": 0.0, "y": 0.0, "w": 0.0}, 3.0)
    assert is_identically_zero(res, box, simplify_first=False).is_zero


def test_parametrize_rejects_general_conics():
    with pytest.raises(NotInNormalForm):
        parametrize_conic(conic("zdot^2 + zdot*ydot + ydot^2 - 1"),
                          classify_conic(conic("zdot^2 + zdot*ydot + ydot^2 - 1"), X0, BOX))
    S = conic("ydot^2 - zdot^2 - 1")
    with pytest.raises(NotInNormalForm):
        parametrize_conic(S, classify_conic(S, X0, BOX))


def test_extend():
    S = conic("zdot^2 + ydot^2 - 1")
    sig = extend(parametrize_conic(S, classify_conic(S, X0, BOX)))
    w = symbol("w")
    assert sig.f.components == (sympy.cos(w), sympy.sin(w), 0)
    assert sig.g.components == (0, 0, 1)
    assert sig.chart.names == ("z", "y", "w")


@pytest.mark.parametrize("text,tag", [
    ("zdot^2 + ydot^2 - 1", "Elliptic"),
    ("4*(zdot - 1)^2 + 9*(ydot + z)^2 - 1", "Elliptic"),
    ("zdot^2 - ydot^2 - 1", "Hyperbolic"),
    ("ydot^2 - zdot", "Parabolic"),
    ("2*ydot^2 - zdot + 3*ydot + y", "Parabolic"),
])
def test_extend_parametrize_chi_sign(text, tag):
    S = conic(text)
    sig = extend(parametrize_conic(S, classify_conic(S, X0, BOX)))
    xi0 = {"z": 0.0, "y": 0.0, "w": 0.3}
    res = classify_affine(sig, xi0, Box.around(xi0, 0.5))
    assert res.tag == tag


@pytest.mark.parametrize("text", ["zdot^2 + ydot^2 - 1", "zdot^2 - ydot^2 - 1", "ydot^2 - zdot"])
def test_regular_parametrisation(text):
    S = conic(text)
    Xi = parametrize_conic(S, classify_conic(S, X0, BOX))
    fz, fy = Xi.drift()
    speed = differentiate(fz, "w") ** 2 + differentiate(fy, "w") ** 2
    box = Box.around({"z": 0.0, "y": 0.0, "w": 0.0}, 2.0)
    from conickit.fields import vanishes_somewhere
    assert not vanishes_somewhere(speed, box, SampleSpec())
