"""Gnomonic charts of the space forms of constant curvature lambda.

A convex body in the sphere (lambda > 0), in hyperbolic space or in de
Sitter space (lambda < 0) is handled through its Euclidean chart image.
Intrinsic curvature and surface element are the Euclidean ones times
explicit conversion factors, so every functional below is a boundary
integral over the chart body in the normal parametrization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bodies import (ConvexBody, LinearImage, QuadratureGrid, SupportGrid, _as_dirs,
                     make_grid, polar_body)
from .errors import (ChartOverflow, DomainError, EPolarDomainError, OriginNotInterior,
                     PoleError)
from .floating import ConjugatedResult, conjugated_floating, weighted_floating_body
from .functionals import as_p, boundary_integral
from .measures import chart_density

__all__ = [
    "SpaceFormChart", "ChartBody", "tan_lambda", "R_lambda", "chart_dual", "e_polar",
    "intrinsic_curvature", "intrinsic_surface_element", "floating_area", "omega_dual",
    "omega_dual_dual_side", "omega_lambda_e", "conjugated_floating_spaceform",
    "conjugated_floating_chart", "intrinsic_floating_body", "recenter",
    "geodesic_ball_chart_radius",
]


@dataclass(frozen=True)
class SpaceFormChart:
    """Chart of curvature lam centred at the base point; ``dual`` marks de Sitter bodies."""
    lam: float
    dual: bool = False

    def __post_init__(self):
        if self.dual and not self.lam < 0:
            raise DomainError("only negative curvature charts carry de Sitter bodies")

    @property
    def kind(self) -> str:
        if self.lam > 0:
            return "sphere"
        if self.lam == 0:
            return "euclidean"
        return "deSitter" if self.dual else "hyperbolic"

    @property
    def horizon(self) -> float:
        """Chart radius of the ideal boundary (inf for lam >= 0)."""
        return math.inf if self.lam >= 0 else 1.0 / math.sqrt(-self.lam)


@dataclass(frozen=True)
class ChartBody:
    chart: SpaceFormChart
    body: ConvexBody
    _check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self._check:
            _check_chart_domain(self)

    @property
    def lam(self) -> float:
        return self.chart.lam


def _radial_extent(body: ConvexBody, n: int = 2048) -> tuple[float, float]:
    grid = make_grid(body.dim, n if body.dim == 2 else 32)
    rho_min = float(np.min(1.0 / body.gauge(grid.nodes)))
    rho_max = float(np.max(body.h(grid.nodes)))
    return rho_min, rho_max


def _check_chart_domain(cb: ChartBody) -> None:
    if cb.chart.lam >= 0:
        return
    r = cb.chart.horizon
    rho_min, rho_max = _radial_extent(cb.body)
    if not cb.chart.dual and rho_max >= r:
        raise ChartOverflow(f"body reaches radius {rho_max:.6g} beyond the chart horizon {r:.6g}")
    if cb.chart.dual and rho_min <= r:
        # a de Sitter body's chart image is the closure of the outside of its polar
        raise ChartOverflow("de Sitter body must contain the horizon disk strictly")


def tan_lambda(lam: float, alpha: float) -> float:
    """tan_lam(alpha): tan(sqrt(lam) alpha)/sqrt(lam), tanh for lam < 0, alpha at lam = 0."""
    if lam == 0:
        return alpha
    s = math.sqrt(abs(lam))
    if lam > 0:
        if s * alpha >= math.pi / 2:
            raise PoleError(f"alpha = {alpha} reaches the pole pi/(2 sqrt(lam))")
        return math.tan(s * alpha) / s
    return math.tanh(s * alpha) / s


def R_lambda(lam: float) -> float:
    """Radius R with tan_lam(R) = sqrt(|lam|)."""
    if lam == 0:
        raise DomainError("R(lambda) needs lambda != 0")
    s = math.sqrt(abs(lam))
    if lam > 0:
        return math.atan(lam) / s
    if lam <= -1:
        raise PoleError("R(lambda) is undefined for lambda <= -1 (tanh never reaches |lambda|)")
    return math.atanh(-lam) / s


def geodesic_ball_chart_radius(lam: float, alpha: float) -> float:
    return tan_lambda(lam, alpha)


def _negate(body: ConvexBody) -> ConvexBody:
    if body.centrally_symmetric:
        return body
    return LinearImage(-np.eye(body.dim), body)


def chart_dual(cb: ChartBody) -> ChartBody:
    """Dual body, as a chart body of curvature 1/lam (negated polar for lam > 0)."""
    lam = cb.chart.lam
    if lam == 0:
        raise DomainError("duality needs a non-Euclidean chart")
    p = polar_body(cb.body)
    if lam > 0:
        return ChartBody(SpaceFormChart(1.0 / lam), _negate(p))
    return ChartBody(SpaceFormChart(1.0 / lam, dual=not cb.chart.dual), p)


def e_polar(cb: ChartBody) -> ChartBody:
    """Polarity inside the chart centred at the base point e."""
    lam = cb.chart.lam
    if cb.chart.dual:
        raise EPolarDomainError("e-polarity is defined for bodies of the space form itself")
    if lam < 0:
        if lam <= -1:
            raise EPolarDomainError("e-polarity needs -1 < lambda < 0")
        rho_min, _ = _radial_extent(cb.body)
        if rho_min <= math.sqrt(-lam):
            raise EPolarDomainError(f"body must strictly contain the disk of radius sqrt(|lambda|) = "
                                    f"{math.sqrt(-lam):.6g}; inner radius is {rho_min:.6g}")
    return ChartBody(SpaceFormChart(lam), polar_body(cb.body))


def _factors(lam: float, n: dict, d: int):
    """Curvature and surface-element conversion factors at normal-parametrized nodes."""
    c = n["h"]
    r2 = np.sum(n["x"] ** 2, axis=1)
    a = 1.0 + lam * r2
    b = 1.0 + lam * c * c
    curv = np.abs(a / b) ** ((d + 1) / 2)
    surf = np.sqrt(np.abs(b)) / np.abs(a) ** (d / 2)
    return curv, surf


def intrinsic_curvature(cb: ChartBody, u) -> np.ndarray:
    """H^lam = H |(1 + lam |x|^2) / (1 + lam (x.n)^2)|^{(d+1)/2} at normals u."""
    u = _as_dirs(u)
    body = cb.body
    n = {"h": body.h(u), "x": body.grad(u)}
    curv, _ = _factors(cb.chart.lam, n, body.dim)
    with np.errstate(divide="ignore"):
        return curv / body.radii_of_curvature(u)


def intrinsic_surface_element(cb: ChartBody, u) -> np.ndarray:
    """Factor turning the Euclidean Hausdorff element into the intrinsic one."""
    u = _as_dirs(u)
    body = cb.body
    n = {"h": body.h(u), "x": body.grad(u)}
    return _factors(cb.chart.lam, n, body.dim)[1]


def _intrinsic_integral(cb: ChartBody, power: float, grid, extra=None, name="integral") -> float:
    """∫_{∂K} (H^lam)^power [extra] dVol^lam over the chart body."""
    lam = cb.chart.lam
    d = cb.body.dim

    def f(n):
        curv, surf = _factors(lam, n, d)
        val = (curv / n["R"]) ** power * surf * n["R"]
        if extra is not None:
            val = val * extra(n)
        return val

    return boundary_integral(cb.body, f, grid, name)


def floating_area(cb: ChartBody, grid: QuadratureGrid | None = None) -> float:
    """∫ (H^lam)^{1/(d+1)} dVol^lam."""
    return _intrinsic_integral(cb, 1.0 / (cb.body.dim + 1), grid, name="floating_area")


def omega_dual(cb: ChartBody, grid: QuadratureGrid | None = None) -> float:
    """∫ (H^lam)^{-1/(d+1)} dVol^lam."""
    return _intrinsic_integral(cb, -1.0 / (cb.body.dim + 1), grid, name="omega_dual")


def omega_dual_dual_side(cb: ChartBody, grid: QuadratureGrid | None = None) -> float:
    """Same functional evaluated on the dual body: ∫_{∂K*} (H^{1/lam})^{(d+2)/(d+1)} dVol^{1/lam}.

    For |lam| != 1 the dual integral picks up |lam|^{(d-1)/2} (the boundary
    element of the curvature-1/lam chart), which is divided out here.
    """
    dual = chart_dual(cb)
    d = cb.body.dim
    raw = _intrinsic_integral(dual, (d + 2) / (d + 1), grid, name="omega_dual_dual_side")
    return raw / abs(cb.chart.lam) ** ((d - 1) / 2)


def omega_lambda_e(cb: ChartBody, grid: QuadratureGrid | None = None) -> float:
    """∫ (H^lam / f^{d+1})^{-1/(d+1)} f dVol^lam with f^2 = |(lam + c^2)/(1 + lam c^2)|, c = x.n."""
    lam = cb.chart.lam
    if lam == 0:
        return as_p(cb.body, -cb.body.dim / (cb.body.dim + 2), grid)
    if lam < 0 and lam != -1.0:
        e_polar(cb)   # enforces the domain precondition; at lam = -1, f == 1 and no polarity is needed

    def f2(n):
        c2 = n["h"] ** 2
        return np.abs((lam + c2) / (1.0 + lam * c2))

    return _intrinsic_integral(cb, -1.0 / (cb.body.dim + 1), grid, extra=f2, name="omega_lambda_e")


def conjugated_floating_chart(cb: ChartBody, delta: float, grid: QuadratureGrid,
                              tol: float | None = None) -> ConjugatedResult:
    """((K̄°)_delta^{phi_{1/lam}})° with the polar-side floating data kept."""
    lam = cb.chart.lam
    if lam == 0:
        raise DomainError("conjugated floating needs lambda != 0")
    return conjugated_floating(cb.body, chart_density(1.0 / lam), delta, grid, tol)


def conjugated_floating_spaceform(cb: ChartBody, delta: float, grid: QuadratureGrid,
                                  tol: float | None = None) -> ChartBody:
    """Dual-conjugated floating body, re-wrapped in the chart of cb."""
    if delta == 0:
        return cb
    res = conjugated_floating_chart(cb, delta, grid, tol)
    return ChartBody(cb.chart, res.body, _check=False)


def intrinsic_floating_body(cb: ChartBody, delta: float, grid: QuadratureGrid,
                            tol: float | None = None):
    """Plain floating body of the space form, computed with phi_lam in the chart."""
    return weighted_floating_body(cb.body, chart_density(cb.chart.lam), delta, grid, tol)


def _recentering_matrix(lam: float, point: np.ndarray) -> np.ndarray:
    """Rotation of R^{d+1} taking the lift of ``point`` to the base point (lam > 0)."""
    d = len(point)
    s = 1.0 / math.sqrt(lam)
    lift = np.append(point, s)
    lift = lift / np.linalg.norm(lift)
    e = np.zeros(d + 1)
    e[-1] = 1.0
    v = np.cross(lift, e) if d == 2 else None
    cos_t = float(lift @ e)
    if d != 2:
        raise DomainError("re-centering is implemented for d = 2")
    sin_t = float(np.linalg.norm(v))
    if sin_t < 1e-15:
        return np.eye(d + 1)
    k = v / sin_t
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + sin_t * kx + (1 - cos_t) * kx @ kx


def recenter(cb: ChartBody, point, n: int = 4096) -> ChartBody:
    """Chart image of the same spherical body in the chart centred at ``point``.

    The new chart is related to the old one by a projective map (a rotation
    of the sphere); the image body is sampled by its exact support values
    on n directions and stored as an interpolated support function.
    """
    lam = cb.chart.lam
    if not lam > 0 or cb.body.dim != 2:
        raise DomainError("re-centering is implemented for spherical charts in d = 2")
    point = np.asarray(point, dtype=float)
    if cb.body.gauge(point[None])[0] >= 1:
        raise OriginNotInterior("new centre must be interior to the body")
    rot = _recentering_matrix(lam, point)
    s = 1.0 / math.sqrt(lam)

    def mapped(theta):
        u = np.column_stack([np.cos(theta), np.sin(theta)])
        x = cb.body.grad(u)
        lift = np.column_stack([x, np.full(len(x), s)]) @ rot.T
        return s * lift[:, :2] / lift[:, 2:3]

    scan_t = 2 * np.pi * np.arange(4 * n) / (4 * n)
    pts = mapped(scan_t)
    th = 2 * np.pi * np.arange(n) / n
    dirs = np.column_stack([np.cos(th), np.sin(th)])
    best = np.argmax(dirs @ pts.T, axis=1)
    step = 2 * np.pi / (4 * n)
    # vectorized golden-section refinement of every argmax
    g = (math.sqrt(5) - 1) / 2
    a, b = scan_t[best] - step, scan_t[best] + step

    def score(t):
        return np.sum(mapped(t) * dirs, axis=1)

    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = score(c), score(d)
    for _ in range(80):
        left = fc >= fd
        a, b = np.where(left, a, c), np.where(left, d, b)
        c_new = np.where(left, b - g * (b - a), d)
        d_new = np.where(left, c, a + g * (b - a))
        fc_new = np.where(left, score(c_new), fd)
        fd_new = np.where(left, fc, score(d_new))
        c, d, fc, fd = c_new, d_new, fc_new, fd_new
    vals = score(0.5 * (a + b))
    return ChartBody(cb.chart, SupportGrid(th, vals))
