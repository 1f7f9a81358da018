"""Centro-affine curvature and boundary integrals pulled back to the sphere.

Every boundary integral ∫_{∂K} F(x) dH^{d-1}(x) is evaluated in the normal
parametrization x = ∇h(u), where the surface element is R(u) du with
R = 1/H the product of the principal radii of curvature.  Smooth bodies
use the sphere grid directly.  Planar bodies whose curvature degenerates
at isolated normals (l_p balls and their linear images) are split into
arcs between those normals, and every arc gets a double-exponential rule
whose nodes crowd both ends; the local power law of the integrand is
fitted first so that non-integrable cases are reported instead of summed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bodies import (ConvexBody, QuadratureGrid, _as_dirs, _tangent_basis,
                     make_grid, polar_body)
from .errors import DivergentIntegral, InvalidExponent, NotSmoothEnough
from .quadrature import tanh_sinh_unit

__all__ = [
    "CurvatureSample", "BoundaryQuadrature", "boundary_quadrature", "kappa_o",
    "as_p", "as_orlicz", "o_minus", "cone_volume_mass", "kappa_product_check",
    "boundary_integral", "polar_growth_target", "fit_endpoint_exponent",
    "DIVERGENCE_MARGIN", "FLAT_FRACTION",
]

FLAT_FRACTION = 0.10
DIVERGENCE_MARGIN = 1e-3
_FIT_OFFSETS = np.array([1e-4, 1e-5, 1e-6])
_POLAR_FD_STEP = 1e-4


@dataclass(frozen=True)
class CurvatureSample:
    direction: np.ndarray
    point: np.ndarray
    normal: np.ndarray
    gauss_kronecker: float
    kappa_o: float
    cone_density: float
    surface_weight: float


@dataclass
class BoundaryQuadrature:
    """Boundary nodes in the normal parametrization.

    ``weights`` are sphere weights; ``radius`` is 1/H, so the Hausdorff
    element of a node is ``weights * radius`` (its surface weight).
    """
    directions: np.ndarray
    weights: np.ndarray
    support: np.ndarray
    points: np.ndarray
    radius: np.ndarray
    mode: str                      # "grid" or "arcs"

    @property
    def gauss_kronecker(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 1.0 / self.radius

    @property
    def cone_density(self) -> np.ndarray:
        return self.support

    @property
    def surface_weight(self) -> np.ndarray:
        return self.weights * self.radius

    @property
    def kappa_o(self) -> np.ndarray:
        d = self.directions.shape[1]
        with np.errstate(divide="ignore"):
            return 1.0 / (self.radius * self.support ** (d + 1))

    def __len__(self) -> int:
        return len(self.weights)

    def sample(self, i: int) -> CurvatureSample:
        return CurvatureSample(self.directions[i], self.points[i], self.directions[i],
                               float(self.gauss_kronecker[i]), float(self.kappa_o[i]),
                               float(self.support[i]), float(self.surface_weight[i]))

    def integrate(self, values: np.ndarray) -> float:
        """Sum of sphere-weighted values; non-finite values on negligible weights are dropped."""
        contrib = values * self.weights
        bad = ~np.isfinite(contrib)
        if np.any(bad & (self.weights > 1e-20)):
            raise DivergentIntegral("integrand is not finite at a quadrature node")
        return float(np.sum(np.where(bad, 0.0, contrib)))


def _singular_normals(body: ConvexBody) -> tuple[np.ndarray, np.ndarray]:
    """Singular normals sorted by angle (exact vectors kept) and their angles."""
    sn = body.singular_normals()
    if len(sn) == 0:
        return sn, np.zeros(0)
    ang = np.mod(np.arctan2(sn[:, 1], sn[:, 0]), 2 * np.pi)
    order = np.argsort(ang)
    sn, ang = sn[order], ang[order]
    keep = np.concatenate([[True], np.diff(ang) > 1e-12])
    return sn[keep], ang[keep]


def _singular_angles(body: ConvexBody) -> np.ndarray:
    return _singular_normals(body)[1]


def _rotate(base: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Rotate the unit vector base by the angles eps; exact for tiny eps.

    Working from the stored normal (rather than its polar angle) keeps
    nodes a distance 1e-300 away from a singular normal on the correct side.
    """
    perp = np.array([-base[1], base[0]])
    return np.cos(eps)[:, None] * base[None, :] + np.sin(eps)[:, None] * perp[None, :]


def _node_data(body: ConvexBody, u: np.ndarray) -> dict:
    with np.errstate(all="ignore"):
        return {"u": u, "h": body.h(u), "x": body.grad(u), "R": body.radii_of_curvature(u)}


def _arc_nodes(body: ConvexBody):
    """Directions and weights of the double-exponential rule on every arc."""
    sn, ang = _singular_normals(body)
    left, right, w = tanh_sinh_unit()
    ends = np.append(ang[1:], ang[0] + 2 * np.pi)
    near_a = left <= 0.5
    dirs, wts = [], []
    for i, (a, b) in enumerate(zip(ang, ends)):
        length = b - a
        nb = sn[(i + 1) % len(sn)]
        dirs.append(_rotate(sn[i], length * left[near_a]))
        dirs.append(_rotate(nb, -length * right[~near_a]))
        wts.append(length * w[near_a])
        wts.append(length * w[~near_a])
    return np.vstack(dirs), np.concatenate(wts), ang


def boundary_quadrature(body: ConvexBody, grid: QuadratureGrid | None = None) -> BoundaryQuadrature:
    """Boundary nodes and weights for ∫_{∂K} (.) dH^{d-1} in the normal parametrization."""
    d = body.dim
    if d == 2 and len(_singular_angles(body)) > 0:
        u, w, _ = _arc_nodes(body)
        data = _node_data(body, u)
        mode = "arcs"
    else:
        grid = make_grid(d, 1024 if d == 2 else 48) if grid is None else grid
        u, w = grid.nodes, grid.weights
        data = _node_data(body, u)
        mode = "grid"
        flat = ~(data["R"] < 1e12)
        if flat.mean() > FLAT_FRACTION:
            raise NotSmoothEnough(f"{flat.mean():.1%} of the grid sits on flat boundary points")
    # negative radii only arise from interpolated supports; clamp them
    radius = np.maximum(data["R"], 0.0)
    return BoundaryQuadrature(u, w, data["h"], data["x"], radius, mode)


def fit_endpoint_exponent(body: ConvexBody, integrand: Callable[[dict], np.ndarray]) -> list[float]:
    """Local power e with integrand ~ eps^e on each side of each singular normal (d = 2)."""
    out = []
    for s in _singular_normals(body)[0]:
        for side in (1.0, -1.0):
            u = _rotate(s, side * _FIT_OFFSETS)
            with np.errstate(all="ignore"):
                vals = np.abs(integrand(_node_data(body, u)))
            if not np.all(np.isfinite(vals)) or np.any(vals == 0):
                out.append(math.inf if np.all(vals == 0) else -math.inf)
                continue
            slope = np.polyfit(np.log(_FIT_OFFSETS), np.log(vals), 1)[0]
            out.append(float(slope))
    return out


def boundary_integral(body: ConvexBody, integrand: Callable[[dict], np.ndarray],
                      grid: QuadratureGrid | None = None, name: str = "integral") -> float:
    """∫_{S^{d-1}} integrand(u) du where integrand sees u, h, x = ∇h and R = 1/H.

    Raises DivergentIntegral when the fitted local exponent at a singular
    normal is at most -1 (up to DIVERGENCE_MARGIN).
    """
    bq = boundary_quadrature(body, grid)
    if bq.mode == "arcs":
        exps = fit_endpoint_exponent(body, integrand)
        worst = min(exps)
        if worst <= -1.0 + DIVERGENCE_MARGIN:
            raise DivergentIntegral(f"{name}: local exponent {worst:.4f} <= -1 at a singular normal")
    data = {"u": bq.directions, "h": bq.support, "x": bq.points, "R": bq.radius}
    with np.errstate(all="ignore"):
        vals = integrand(data)
    return bq.integrate(vals)


def kappa_o(body: ConvexBody, u) -> np.ndarray:
    """Centro-affine curvature H / (x . n)^{d+1} at the boundary points with normals u."""
    u = _as_dirs(u)
    d = body.dim
    with np.errstate(divide="ignore"):
        return 1.0 / (body.radii_of_curvature(u) * body.h(u) ** (d + 1))


def as_p(body: ConvexBody, p: float, grid: QuadratureGrid | None = None) -> float:
    """L_p affine surface area ∫ kappa_o^{p/(d+p)} dC_K."""
    d = body.dim
    if p <= -d:
        raise InvalidExponent(f"p = {p} must exceed -d = {-d}")
    a = p / (d + p)

    def f(n):
        return n["R"] ** (1.0 - a) * n["h"] ** (1.0 - (d + 1) * a)

    return boundary_integral(body, f, grid, f"as_{p}")


def as_orlicz(body: ConvexBody, phi: Callable[[np.ndarray], np.ndarray],
              grid: QuadratureGrid | None = None) -> float:
    """∫ Phi(kappa_o) dC_K."""
    d = body.dim

    def f(n):
        k = 1.0 / (n["R"] * n["h"] ** (d + 1))
        return np.asarray(phi(k), dtype=float) * n["h"] * n["R"]

    return boundary_integral(body, f, grid, "as_orlicz")


def o_minus(body: ConvexBody, grid: QuadratureGrid | None = None) -> float:
    """∫_{∂K} H^{-1/(d+1)} dH^{d-1}, the rigid-motion invariant limit functional."""
    d = body.dim
    return boundary_integral(body, lambda n: n["R"] ** (1.0 + 1.0 / (d + 1)), grid, "o_minus")


def cone_volume_mass(body: ConvexBody, grid: QuadratureGrid | None = None) -> float:
    """Total cone-volume measure, which equals d Vol(K)."""
    return boundary_integral(body, lambda n: n["h"] * n["R"], grid, "cone_mass")


def polar_growth_target(body: ConvexBody, phi, psi, grid: QuadratureGrid | None = None) -> float:
    """∫_{∂K} kappa_o^{(d+2)/(d+1)} phi(x)^{-2/(d+1)} psi(x°) dC_K.

    phi and psi are WeightDensity objects (or None for uniform); x° = u / h(u).
    This is the limit of a_d^{2/(d+1)} (Vol^psi((K_delta^phi)°) - Vol^psi(K°)) / delta^{2/(d+1)}.
    """
    d = body.dim

    def f(n):
        val = n["h"] ** (-(d + 1)) * n["R"] ** (-1.0 / (d + 1))
        if phi is not None:
            val = val * _density_at(phi, n["x"]) ** (-2.0 / (d + 1))
        if psi is not None:
            val = val * _density_at(psi, n["u"] / n["h"][:, None])
        return val

    return boundary_integral(body, f, grid, "polar_growth")


def _density_at(w, x):
    if w.radial:
        return w.radial_value(np.linalg.norm(x, axis=1), x.shape[1])
    return w.evaluate(x)


def polar_curvature_fd(body: ConvexBody, v: np.ndarray, step: float = _POLAR_FD_STEP) -> np.ndarray:
    """1/H of the polar body at unit normals v, by central differences of the polar support.

    The polar support is the gauge of the body, extended 1-homogeneously, so its
    tangential Hessian at v is the Hessian of a -> gauge(v + a_1 e_1 + ...) at 0.
    """
    v = _as_dirs(v)
    d = v.shape[1]
    t = _tangent_basis(v)

    def g(y):
        return body.gauge(y)

    g0 = g(v)
    if d == 2:
        e = t[:, :, 0]
        second = (g(v + step * e) - 2 * g0 + g(v - step * e)) / step ** 2
        return second
    e1, e2 = t[:, :, 0], t[:, :, 1]
    f11 = (g(v + step * e1) - 2 * g0 + g(v - step * e1)) / step ** 2
    f22 = (g(v + step * e2) - 2 * g0 + g(v - step * e2)) / step ** 2
    f12 = (g(v + step * (e1 + e2)) - g(v + step * (e1 - e2)) - g(v - step * (e1 - e2))
           + g(v - step * (e1 + e2))) / (4 * step ** 2)
    return f11 * f22 - f12 * f12


def kappa_product_check(body: ConvexBody, grid: QuadratureGrid | None = None) -> float:
    """max |kappa_o(K, x) kappa_o(K°, x°) - 1| over the grid samples."""
    d = body.dim
    grid = make_grid(d, 256 if d == 2 else 24) if grid is None else grid
    u = grid.nodes
    k = kappa_o(body, u)
    x = body.grad(u)
    v = x / np.linalg.norm(x, axis=1, keepdims=True)      # normal of K° at x° = u / h(u)
    r_polar = polar_curvature_fd(body, v)
    h_polar = body.gauge(v)                               # support of K° in direction v
    k_polar = 1.0 / (r_polar * h_polar ** (d + 1))
    return float(np.max(np.abs(k * k_polar - 1.0)))


def as_p_of_polar(body: ConvexBody, p: float, grid: QuadratureGrid | None = None) -> float:
    return as_p(polar_body(body), p, grid)
