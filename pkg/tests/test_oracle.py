import math

import numpy as np
import pytest

from conickit.errors import StencilEvalError
from conickit.oracle import (
    Grid,
    crosscheck,
    default_step,
    fd_affine_structure,
    fd_jacobian,
    fd_partial,
    residual_report,
)
from conickit.symexpr import Chart, parse_expr


@pytest.mark.parametrize("order,expected", [
    (1, math.cos(0.3)), (2, -math.sin(0.3)), (3, -math.cos(0.3)),
    (4, math.sin(0.3)), (5, math.cos(0.3)),
])
def test_fd_partial_sin(order, expected):
    fn = lambda p: math.sin(p[0])
    assert abs(fd_partial(fn, [0.3], 0, order) - expected) < 1e-5


def test_fd_partial_polynomial_is_exact():
    # w^5 has fifth derivative 120; central stencils are exact on it up to rounding
    fn = lambda p: p[0] ** 5
    assert abs(fd_partial(fn, [0.7], 0, 5, 0.05) - 120.0) < 1e-6


def test_default_steps():
    assert default_step(1) == 1e-3 and default_step(5) == 5e-2


def test_stencil_failure_reports_point():
    fn = lambda p: math.log(p[0])
    with pytest.raises(StencilEvalError) as info:
        fd_partial(fn, [0.001], 0, 1, 1e-3)
    assert info.value.point is not None


def test_bad_order():
    with pytest.raises(ValueError):
        fd_partial(lambda p: 0.0, [0.0], 0, 6)


def test_fd_jacobian_linear():
    A = np.array([[1.0, 2.0], [3.0, -1.0]])
    J = fd_jacobian(lambda p: A @ p, [0.2, 0.5])
    assert np.allclose(J, A, atol=1e-10)


def test_grid_points_and_exclusion():
    g = Grid((("a", 0, 1, 3), ("b", -1, 1, 2)))
    assert g.points().shape == (6, 2)
    g2 = Grid((("a", 0, 1, 3), ("b", -1, 1, 2)), exclude=lambda p: p["a"] == 0.5)
    assert g2.points().shape == (4, 2)
    with pytest.raises(ValueError):
        Grid((("a", 0, 1, 1),), exclude=lambda p: True).points()
    with pytest.raises(ValueError):
        Grid((("a", 1, 0, 3),))


def test_residual_report_fields():
    pts = np.array([[0.0], [1.0], [2.0]])
    rep = residual_report(np.array([1e-12, -3e-10, 2e-11]), pts, ("x",), 1e-9)
    assert rep.passed and rep.argmax == {"x": 1.0} and rep.samples == 3
    assert rep.max_abs == pytest.approx(3e-10)
    assert rep.as_dict()["pass"] is True


def test_crosscheck_against_numeric_recipe():
    ch = Chart(("x", "y"))
    e = parse_expr("sin(x)*y", ch)
    rep = crosscheck(e, lambda p: math.sin(p[0]) * p[1], Grid.uniform({"x": (0, 1), "y": (0, 1)}, 4))
    assert rep.passed


@pytest.mark.parametrize("f,chi", [
    (lambda q: np.array([math.cos(q[2]), math.sin(q[2]), 0.0]), 9.0),
    (lambda q: np.array([math.cosh(q[2]), math.sinh(q[2]), 0.0]), -9.0),
    (lambda q: np.array([q[2] ** 2, q[2], 0.0]), 0.0),
])
def test_fd_affine_structure_fixtures(f, chi):
    g = lambda q: np.array([0.0, 0.0, 1.0])
    out = fd_affine_structure(f, g, [0.1, -0.2, 0.3])
    assert abs(out["chi"] - chi) < 1e-5
    assert abs(out["rho"]) < 1e-6


def test_fd_affine_structure_h_family():
    # h = cosh(w): rho = tanh(w), chi = 5/cosh(w)^2 - 2
    f = lambda q: np.array([math.cosh(q[2]), q[2], 0.0])
    g = lambda q: np.array([0.0, 0.0, 1.0])
    out = fd_affine_structure(f, g, [0.0, 0.0, 0.4])
    assert abs(out["rho"] - math.tanh(0.4)) < 1e-6
    assert abs(out["chi"] - (5 / math.cosh(0.4) ** 2 - 2)) < 1e-5
