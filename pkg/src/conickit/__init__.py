"""Conic submanifolds, quadratisable control systems and their invariants."""

from .affine import (
    AffineStructure,
    AffineSystem,
    HFamily,
    affine_structure,
    build_h_normal_form,
    cauchy_identity_check,
    classify_affine,
    classify_h,
    extract_de,
    h_ode_residual,
    normalizing_reparam,
    series_fq,
)
from .conics import (
    ConicClass,
    ConicSubmanifold,
    Diffeomorphism,
    EquivalenceWitness,
    classify_conic,
    conic_determinants,
    extend,
    parametrize_conic,
    pullback_conic,
    verify_equivalence,
)
from .fields import VectorField, decompose_in_frame, iterated_ad, lie_bracket, lie_derivative
from .quadnl import (
    QuadraticNLSystem,
    Reparam,
    canonical_eh,
    gaussian_curvature,
    ladder_classify,
    qnl_structure,
    reparametrize,
    struct_transform_law,
)
from .symexpr import Box, Chart, SampleSpec, ZeroStatus, differentiate, evaluate, is_identically_zero, parse_expr, simplify, to_text

__version__ = "0.1.0"
