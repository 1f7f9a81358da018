"""Exception hierarchy shared by every floatlab module."""


__all__ = [
    "FloatLabError",
    "UnboundedBody",
    "EmptyBody",
    "FlatPoint",
    "OriginNotInterior",
    "InvalidBody",
    "DomainError",
    "InvalidShell",
    "DeltaOutOfRange",
    "PointOutsideBody",
    "NotSmoothEnough",
    "InvalidExponent",
    "DivergentIntegral",
    "PoleError",
    "ChartOverflow",
    "EPolarDomainError",
    "InconclusiveSweep",
]


class FloatLabError(Exception):
    """Base class; the CLI maps these to exit code 2."""


class UnboundedBody(FloatLabError):
    pass


class EmptyBody(FloatLabError):
    pass


class FlatPoint(FloatLabError):
    """Gauss-Kronecker curvature vanished at the evaluated direction."""


class OriginNotInterior(FloatLabError):
    pass


class InvalidBody(FloatLabError):
    pass


class DomainError(FloatLabError):
    pass


class InvalidShell(FloatLabError):
    pass


class DeltaOutOfRange(FloatLabError):
    pass


class PointOutsideBody(FloatLabError):
    pass


class NotSmoothEnough(FloatLabError):
    pass


class InvalidExponent(FloatLabError):
    pass


class DivergentIntegral(FloatLabError):
    pass


class PoleError(FloatLabError):
    pass


class ChartOverflow(FloatLabError):
    pass


class EPolarDomainError(FloatLabError):
    pass


class InconclusiveSweep(FloatLabError):
    """Raised when a sweep hits its noise floor before converging (exit code 3)."""

    def __init__(self, message: str, diagnostic: dict | None = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}
