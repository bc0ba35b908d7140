"""Exception types shared across the toolkit."""


class ConicKitError(Exception):
    """Base class for toolkit errors."""


class ExprSyntaxError(SyntaxError, ConicKitError):
    """Malformed expression text. ``position`` is the 0-based offset."""

    def __init__(self, message: str, text: str, position: int):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.text = text
        self.position = position


class UnknownIdentifier(ConicKitError, NameError):
    def __init__(self, name: str, position: int | None = None):
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown identifier {name!r}{where}")
        self.name = name
        self.position = position


class EvalError(ConicKitError, ArithmeticError):
    """Numeric evaluation failure.

    ``kind`` is one of ``DivisionByZero``, ``DomainViolation`` or ``Unbound``.
    """

    KINDS = ("DivisionByZero", "DomainViolation", "Unbound")

    def __init__(self, kind: str, detail: str = "", point=None):
        if kind not in self.KINDS:
            raise ValueError(f"bad EvalError kind {kind!r}")
        msg = kind if not detail else f"{kind}: {detail}"
        if point is not None:
            msg += f" at {dict(point)}"
        super().__init__(msg)
        self.kind = kind
        self.detail = detail
        self.point = point


class ChartMismatch(ConicKitError, ValueError):
    pass


class ArityMismatch(ConicKitError, ValueError):
    pass


class DegenerateFrame(ConicKitError, ValueError):
    pass


class DegenerateAB(DegenerateFrame):
    """The pair (A, B) fails to span the tangent plane."""


class SingularJacobian(ConicKitError, ValueError):
    pass


class NotInNormalForm(ConicKitError, ValueError):
    pass


class KindMismatch(ConicKitError, ValueError):
    pass


class VanishingBeta(ConicKitError, ValueError):
    pass


class SecondDerivativeVanishes(ConicKitError, ValueError):
    pass


class OdeViolated(ConicKitError, ValueError):
    pass


class MixedSign(ConicKitError, ValueError):
    pass


class StencilEvalError(ConicKitError, ArithmeticError):
    def __init__(self, point, cause: Exception | None = None):
        super().__init__(f"function not finite on stencil point {tuple(point)}"
                         + (f" ({cause})" if cause else ""))
        self.point = tuple(point)
        self.cause = cause
