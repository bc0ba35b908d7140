"""Seeded random systems and reparametrisations shared by the test modules."""

import random

import sympy

from conickit.fields import VectorField
from conickit.quadnl import QuadraticNLSystem, Reparam
from conickit.symexpr import Box, Chart, SampleSpec

XY = Chart(("z", "y"))
XYW = Chart(("z", "y", "w"))
BOX_XY = Box.around({"z": 0.1, "y": -0.2}, 0.5)


def rpoly(rng: random.Random, syms, scale=0.3, degree=2):
    """Random polynomial of degree <= 2 with tenth-rational coefficients."""
    monos = [sympy.Integer(1)] + list(syms)
    if degree >= 2:
        monos += [a * b for i, a in enumerate(syms) for b in syms[i:]]
    return sum(sympy.Rational(rng.randint(-10, 10), 10) * scale * m for m in monos)


def random_qnl(rng: random.Random, kind: str) -> QuadraticNLSystem:
    """A, B near (dz, dy) so the frame stays nondegenerate on BOX_XY."""
    s = XY.symbols
    A = VectorField(XY, (1 + rpoly(rng, s), rpoly(rng, s)))
    B = VectorField(XY, (rpoly(rng, s), 1 + rpoly(rng, s)))
    C = VectorField(XY, (rpoly(rng, s, 3), rpoly(rng, s, 3)))
    return QuadraticNLSystem(kind, A, B, C)


def random_reparam(rng: random.Random, kind: str) -> Reparam:
    s = XY.symbols
    if kind == "P":
        return Reparam.p(rpoly(rng, s, 1), 1 + rpoly(rng, s, 0.2))
    return Reparam.eh(rpoly(rng, s, 1), rng.choice([1, -1]))


FAST = SampleSpec(count=64)

# criterion number -> (passed, title, note); filled by the acceptance tests
ACCEPTANCE = {}
