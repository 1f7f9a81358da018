"""Closed-form reference values.

Everything here is scalar and independent of the body/quadrature pipeline,
so the acceptance tests can compare pipeline output against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.integrate import quad

from .errors import DivergentIntegral, DomainError

__all__ = [
    "OracleValue",
    "a_d",
    "c_d",
    "unit_ball_volume",
    "sphere_volume",
    "ball_cap_volume_exact",
    "as_bp_closed_form",
    "omega_s_ball",
    "cap_angle_integrals",
    "hyperbolic_cap_angle_integrals",
    "halfspace_float_volumes",
    "wedge_volume",
    "geodesic_ball_volume",
    "evaluate",
    "ORACLES",
]


@dataclass(frozen=True)
class OracleValue:
    name: str
    parameters: dict = field(default_factory=dict)
    value: float = float("nan")
    provenance: str = ""


def _check_dim(d: int) -> None:
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d}")


def a_d(d: int) -> float:
    """Volume of the parabolic cap {1 >= z >= |y|^2 / 2} in R^d."""
    _check_dim(d)
    if d < 2:
        raise DomainError("a_d needs d >= 2")
    return (2.0 * math.pi) ** ((d - 1) / 2) / math.gamma((d + 1) / 2 + 1)


def c_d(d: int) -> float:
    """Normalising constant of the mean-width illumination limit."""
    _check_dim(d)
    return 0.5 * (d + 1) ** (2.0 / (d + 1))


def unit_ball_volume(k: int) -> float:
    """Volume of the k-dimensional Euclidean unit ball (k = 0 gives 1)."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def sphere_volume(k: int) -> float:
    """k-dimensional measure of the unit sphere S^k in R^{k+1}."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def ball_cap_volume_exact(d: int, r: float, h: float) -> float:
    """Volume of a cap of height h cut from a Euclidean ball of radius r."""
    if d not in (2, 3):
        raise DomainError("exact cap volumes are provided for d in {2, 3}")
    if not 0 <= h <= 2 * r:
        raise DomainError(f"cap height {h} outside [0, 2r]")
    if d == 2:
        c = r - h
        return r * r * math.acos(c / r) - c * math.sqrt(max(2 * r * h - h * h, 0.0))
    return math.pi * h * h * (r - h / 3.0)


def as_bp_closed_form(p: float) -> float:
    """Closed form of the planar l_p-ball functional (divergent for p <= 5/4).

    Equals the integral of kappa_o^{4/3} against the cone-volume measure of
    B_p, i.e. the Euclidean limit of the polar floating-body volume growth.
    """
    if p <= 1:
        raise DomainError("p must exceed 1")
    if p <= 1.25:
        raise DivergentIntegral(f"integral diverges for p = {p} <= 5/4")
    g = (4 * p - 5) / (3 * p)
    return (4.0 / p) * (p - 1) ** (4.0 / 3.0) * math.gamma(g) ** 2 / math.gamma(2 * g)


def omega_s_ball(d: int, alpha: float) -> float:
    """Dual floating-area functional of a spherical geodesic ball of radius alpha."""
    _check_dim(d)
    if not 0 < alpha < math.pi / 2:
        raise DomainError("alpha must lie in (0, pi/2)")
    return (math.cos(alpha) ** (-(d - 1) / (d + 1))
            * math.sin(alpha) ** ((d - 1) * (d + 2) / (d + 1))
            * sphere_volume(d - 1))


def cap_angle_integrals(d: int, alpha: float) -> tuple[float, float]:
    """(C_d, S_d) = (int_0^alpha cos^{d-1}, int_0^alpha sin^{d-1})."""
    _check_dim(d)
    if d == 1:
        return alpha, alpha
    if d == 2:
        return math.sin(alpha), 1.0 - math.cos(alpha)
    if d == 3:
        sc = math.sin(alpha) * math.cos(alpha)
        return 0.5 * (alpha + sc), 0.5 * (alpha - sc)
    c = quad(lambda s: math.cos(s) ** (d - 1), 0.0, alpha, epsabs=1e-14, epsrel=1e-13)[0]
    s = quad(lambda s: math.sin(s) ** (d - 1), 0.0, alpha, epsabs=1e-14, epsrel=1e-13)[0]
    return c, s


def geodesic_ball_volume(d: int, lam: float, alpha: float) -> float:
    """Intrinsic volume of a geodesic ball of radius alpha in the space form of curvature lam."""
    _check_dim(d)
    if lam == 0:
        return unit_ball_volume(d) * alpha ** d
    k = math.sqrt(abs(lam))
    if lam > 0:
        if not 0 < k * alpha < math.pi / 2:
            raise DomainError("radius must lie in (0, pi/(2 sqrt(lam)))")
        radial = cap_angle_integrals(d, k * alpha)[1]
    else:
        if not alpha > 0:
            raise DomainError("radius must be positive")
        radial = hyperbolic_cap_angle_integrals(d, k * alpha)[1]
    return sphere_volume(d - 1) * radial / k ** d


def hyperbolic_cap_angle_integrals(d: int, t: float) -> tuple[float, float]:
    """(C~_d, S~_d) = (int_0^t cosh^{d-1}, int_0^t sinh^{d-1})."""
    _check_dim(d)
    if d == 1:
        return t, t
    if d == 2:
        return math.sinh(t), math.cosh(t) - 1.0
    if d == 3:
        sc = math.sinh(t) * math.cosh(t)
        return 0.5 * (sc + t), 0.5 * (sc - t)
    c = quad(lambda s: math.cosh(s) ** (d - 1), 0.0, t, epsabs=1e-14, epsrel=1e-13)[0]
    s = quad(lambda s: math.sinh(s) ** (d - 1), 0.0, t, epsabs=1e-14, epsrel=1e-13)[0]
    return c, s


def wedge_volume(d: int, angle: float) -> float:
    """Volume of a wedge with dihedral angle (or hyperbolic distance) ``angle``."""
    return sphere_volume(d) * angle / (2.0 * math.pi)


def halfspace_float_volumes(kind: str, d: int, delta: float) -> dict[str, float]:
    """Volumes attached to the floating body of a half-space.

    sphere: ``floating`` is the volume of the floating body of a hemisphere
    (a ball of radius pi/2 - t) and ``dual_point`` that of the dual floating
    body of a point (a ball of radius t), with t = 2 pi delta / Vol(S^d).
    hyperbolic: ``removed`` is the volume cut from a half-space and
    ``dual_point`` the volume of the dual floating body of a point.
    """
    if delta < 0:
        raise DomainError("delta must be non-negative")
    vd = sphere_volume(d)
    v_rim = sphere_volume(d - 1)
    t = 2.0 * math.pi * delta / vd
    if kind == "sphere":
        if delta > vd / 4:
            raise DomainError("delta must not exceed Vol(S^d)/4")
        c, s = cap_angle_integrals(d, t)
        return {"angle": t, "floating": vd / 2 - v_rim * c, "dual_point": v_rim * s}
    if kind == "hyperbolic":
        c, s = hyperbolic_cap_angle_integrals(d, t)
        return {"angle": t, "removed": v_rim * c, "dual_point": v_rim * s}
    raise DomainError(f"unknown kind {kind!r}")


def _oracle_halfspace(kind: str, d: int, delta: float, part: str) -> float:
    return halfspace_float_volumes(kind, int(d), delta)[part]


ORACLES = {
    "a_d": (lambda d: a_d(int(d)), ("d",)),
    "c_d": (lambda d: c_d(int(d)), ("d",)),
    "ball_cap_volume_exact": (lambda d, r, h: ball_cap_volume_exact(int(d), r, h), ("d", "r", "h")),
    "as_bp_closed_form": (as_bp_closed_form, ("p",)),
    "omega_s_ball": (lambda d, alpha: omega_s_ball(int(d), alpha), ("d", "alpha")),
    "C_d": (lambda d, alpha: cap_angle_integrals(int(d), alpha)[0], ("d", "alpha")),
    "S_d": (lambda d, alpha: cap_angle_integrals(int(d), alpha)[1], ("d", "alpha")),
    "C_tilde_d": (lambda d, t: hyperbolic_cap_angle_integrals(int(d), t)[0], ("d", "t")),
    "S_tilde_d": (lambda d, t: hyperbolic_cap_angle_integrals(int(d), t)[1], ("d", "t")),
    "sphere_halfspace_float": (lambda d, delta: _oracle_halfspace("sphere", d, delta, "floating"),
                               ("d", "delta")),
    "hyperbolic_halfspace_removed": (lambda d, delta: _oracle_halfspace("hyperbolic", d, delta, "removed"),
                                     ("d", "delta")),
    "wedge_volume": (lambda d, angle: wedge_volume(int(d), angle), ("d", "angle")),
    "geodesic_ball_volume": (lambda d, lam, alpha: geodesic_ball_volume(int(d), lam, alpha), ("d", "lam", "alpha")),
}


def evaluate(name: str, params: dict) -> OracleValue:
    """Look up an oracle by name and evaluate it on keyword parameters."""
    if name not in ORACLES:
        raise DomainError(f"unknown oracle {name!r}; choose from {sorted(ORACLES)}")
    fn, names = ORACLES[name]
    missing = [n for n in names if n not in params]
    extra = [n for n in params if n not in names]
    if missing or extra:
        raise DomainError(f"oracle {name} expects parameters {names}; missing {missing}, unexpected {extra}")
    value = float(fn(*(float(params[n]) for n in names)))
    return OracleValue(name=name, parameters={n: params[n] for n in names}, value=value,
                       provenance="closed form / scalar quadrature")
