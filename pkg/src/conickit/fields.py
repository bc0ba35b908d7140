"""Vector fields on a chart: brackets, Lie derivatives, frames and Cramer decomposition."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np
import sympy

from .errors import ArityMismatch, ChartMismatch, DegenerateFrame
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
    sample_points,
    simplify,
)


@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: tuple[Expr, ...]

    def __post_init__(self):
        comps = tuple(as_expr(c) for c in self.components)
        if len(comps) != self.chart.dimension:
            raise ArityMismatch(
                f"{len(comps)} components on a {self.chart.dimension}-dimensional chart")
        object.__setattr__(self, "components", comps)

    @classmethod
    def coordinate(cls, chart: Chart, var) -> "VectorField":
        """The coordinate field d/d(var)."""
        i = chart.index(var)
        return cls(chart, tuple(1 if j == i else 0 for j in range(chart.dimension)))

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, (0,) * chart.dimension)

    def __iter__(self) -> Iterator[Expr]:
        return iter(self.components)

    def __getitem__(self, i) -> Expr:
        return self.components[i]

    def __len__(self) -> int:
        return len(self.components)

    def _check(self, other: "VectorField"):
        if other.chart != self.chart:
            raise ChartMismatch(f"{self.chart.names} vs {other.chart.names}")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.chart, tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.chart, tuple(a - b for a, b in zip(self, other)))

    def __neg__(self) -> "VectorField":
        return VectorField(self.chart, tuple(-a for a in self))

    def scale(self, factor) -> "VectorField":
        factor = as_expr(factor)
        return VectorField(self.chart, tuple(factor * a for a in self))

    __rmul__ = scale

    def map(self, fn) -> "VectorField":
        return VectorField(self.chart, tuple(fn(a) for a in self))

    def simplified(self) -> "VectorField":
        return self.map(simplify)

    def subs(self, mapping) -> "VectorField":
        return self.map(lambda a: a.subs(mapping))

    def at(self, point: Mapping[str, float], params: Mapping[str, float] | None = None) -> np.ndarray:
        return np.array([evaluate(c, point, params) for c in self])

    def jacobian(self) -> sympy.Matrix:
        """Matrix of partials d(V_i)/d(x_j)."""
        return sympy.Matrix([[differentiate(c, x) for x in self.chart.names] for c in self])

    def is_zero(self) -> bool:
        return all(simplify(c) == 0 for c in self)


def _same_chart(*fields: VectorField) -> Chart:
    chart = fields[0].chart
    for f in fields[1:]:
        if f.chart != chart:
            raise ChartMismatch(f"{chart.names} vs {f.chart.names}")
    return chart


def lie_bracket(V: VectorField, W: VectorField, simplified: bool = True) -> VectorField:
    """[V, W] = (dW/dx) V - (dV/dx) W."""
    chart = _same_chart(V, W)
    names = chart.names
    comps = []
    for i in range(chart.dimension):
        c = sum((V[j] * differentiate(W[i], names[j]) - W[j] * differentiate(V[i], names[j])
                 for j in range(chart.dimension)), sympy.Integer(0))
        comps.append(simplify(c) if simplified else c)
    return VectorField(chart, tuple(comps))


def iterated_ad(g: VectorField, f: VectorField, k: int, simplified: bool = True) -> VectorField:
    """ad_g^k f with ad_g^0 f = f."""
    if k < 0:
        raise ValueError("k must be non-negative")
    _same_chart(g, f)
    out = f
    for _ in range(k):
        out = lie_bracket(g, out, simplified)
    return out


def lie_derivative(V: VectorField, e, simplified: bool = True) -> Expr:
    """Sum of V_i de/dx_i."""
    e = as_expr(e)
    out = sum((V[i] * differentiate(e, x) for i, x in enumerate(V.chart.names)),
              sympy.Integer(0))
    return simplify(out) if simplified else out


@dataclass(frozen=True)
class Frame:
    fields: tuple[VectorField, ...]
    expected_rank: int | None = None

    def __post_init__(self):
        fields = tuple(self.fields)
        if not fields:
            raise ArityMismatch("empty frame")
        _same_chart(*fields)
        object.__setattr__(self, "fields", fields)
        if self.expected_rank is None:
            object.__setattr__(self, "expected_rank", len(fields))

    @property
    def chart(self) -> Chart:
        return self.fields[0].chart

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def matrix(self) -> sympy.Matrix:
        """Component matrix with the frame fields as columns."""
        return sympy.Matrix([[f[i] for f in self.fields] for i in range(self.chart.dimension)])


def _as_frame(fields) -> Frame:
    return fields if isinstance(fields, Frame) else Frame(tuple(fields))


def _det(m: sympy.Matrix) -> Expr:
    """Cofactor expansion for n <= 3; sympy's det would try to cancel large entries."""
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    if n == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if n == 3:
        return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
                - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
                + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    return m.det(method="berkowitz")


def wedge_det(fields, simplified: bool = True) -> Expr:
    """Determinant of the component matrix of a square frame."""
    frame = _as_frame(fields)
    if len(frame) != frame.chart.dimension:
        raise ArityMismatch(f"{len(frame)} fields on a {frame.chart.dimension}-dimensional chart")
    d = _det(frame.matrix())
    return simplify(d) if simplified else d


@dataclass(frozen=True)
class Decomposition:
    """Coefficients of a field in a frame, with the frame determinant."""

    coefficients: tuple[Expr, ...]
    determinant: Expr
    pointwise_singular: bool = False
    determinant_verdict: ZeroVerdict | None = None

    def __iter__(self):
        return iter(self.coefficients)

    def __getitem__(self, i):
        return self.coefficients[i]

    def __len__(self):
        return len(self.coefficients)


def vanishes_somewhere(e: Expr, box: Box, spec: SampleSpec) -> bool:
    """Sampled check that ``e`` has a zero (or a failure point) inside ``box``."""
    vals = evaluate_many(e, box.names, sample_points(box, spec), box.params)
    if not np.isfinite(vals).all():
        return True
    if (np.abs(vals) <= spec.tol).any():
        return True
    return bool(vals.min() < 0 < vals.max())


def decompose_in_frame(v: VectorField, fields, box: Box | None = None,
                       spec: SampleSpec = SampleSpec(), simplified: bool = True) -> Decomposition:
    """Coefficients c with v = sum c_i e_i, by Cramer's rule.

    With a ``box``, a determinant that samples to zero raises DegenerateFrame,
    and a determinant vanishing somewhere in the box sets ``pointwise_singular``.
    """
    frame = _as_frame(fields)
    _same_chart(v, *frame.fields)
    m = frame.matrix()
    if m.shape[0] != m.shape[1]:
        raise ArityMismatch("decomposition needs a square frame")
    det = _det(m)
    det = simplify(det) if simplified else det
    if det == 0:
        raise DegenerateFrame("frame determinant is identically zero")
    verdict = None
    singular = False
    if box is not None:
        verdict = is_identically_zero(det, box, spec, simplify_first=False)
        if verdict.is_zero:
            raise DegenerateFrame(f"frame determinant samples to zero on the box ({verdict.status})")
        singular = vanishes_somewhere(det, box, spec)
    coeffs = []
    for i in range(m.shape[1]):
        mi = m.copy()
        mi[:, i] = sympy.Matrix(list(v.components))
        num = _det(mi)
        if simplified:
            c = simplify(simplify(num) / det)
        else:
            c = num / det
        coeffs.append(c)
    return Decomposition(tuple(coeffs), det, singular, verdict)


def recombine(coefficients: Sequence, fields) -> VectorField:
    frame = _as_frame(fields)
    out = VectorField.zero(frame.chart)
    for c, f in zip(coefficients, frame.fields):
        out = out + f.scale(c)
    return out
