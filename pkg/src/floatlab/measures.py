"""Weight densities and weighted volumes of bodies, caps and polar shells.

Cap volumes are computed in the cone of rays from the origin that meet
the cap.  For a cap ``K ∩ {x . u >= s}`` with ``s > 0`` every such ray
enters the cap on the cutting hyperplane (at distance ``s / (v . u)``)
and leaves it on the boundary (at distance ``rho_K(v)``), so

    Vol^w(cap) = ∫_cone [W(rho_K(v)) - W(s / (v . u))] dv,

where ``W`` is the radial primitive of ``w(r) r^{d-1}``.  In the plane the
cone is an angular interval whose two endpoints are the chord endpoints;
in space it is a spherically convex patch described in polar coordinates
around the direction of the support point.  Caps with ``s <= 0`` are
obtained from the complementary cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bodies import ConvexBody, Polytope, QuadratureGrid, _as_dirs
from .errors import DomainError, InvalidShell
from .quadrature import gauss_legendre, gk15_vec

__all__ = [
    "WeightDensity", "Uniform", "SphericalChart", "HyperbolicChart", "LambdaChart",
    "V1Dual", "Custom", "density_eval", "weighted_cap_volume", "cap_volumes",
    "weighted_volume", "polar_shell_weighted_volume", "density_from_json", "density_to_json",
    "TAU_QUAD",
]

TAU_QUAD = {2: 1e-10, 3: 1e-8}
_BISECT_STEPS = 64


def _ball_volume(k: int) -> float:
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


@dataclass(frozen=True)
class WeightDensity:
    """Tagged density family.

    kind is one of ``uniform``, ``spherical``, ``hyperbolic``, ``lambda``,
    ``v1`` or ``custom``.  The three chart kinds share one formula,
    ``|1 + lam |x|^2|^{-(d+1)/2}``, with lam = 1, -1 or the given value.
    """
    kind: str
    lam: float = 0.0
    func: Callable[[np.ndarray], np.ndarray] | None = None
    domain: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "spherical", "hyperbolic", "lambda", "v1", "custom"):
            raise DomainError(f"unknown density kind {self.kind!r}")
        if self.kind == "lambda" and self.lam == 0:
            raise DomainError("LambdaChart needs lambda != 0")
        if self.kind == "custom" and self.func is None:
            raise DomainError("custom density needs an evaluator")

    @property
    def curvature(self) -> float | None:
        return {"spherical": 1.0, "hyperbolic": -1.0, "lambda": self.lam}.get(self.kind)

    @property
    def radial(self) -> bool:
        return self.kind != "custom"

    @property
    def singular_radius(self) -> float | None:
        """Radius of the sphere where the density is not integrable (None if none)."""
        lam = self.curvature
        if lam is not None and lam < 0:
            return 1.0 / math.sqrt(-lam)
        if self.kind == "v1":
            return 0.0
        return None

    def radial_value(self, r: np.ndarray, d: int) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "uniform":
            return np.ones_like(r)
        if self.kind == "v1":
            with np.errstate(divide="ignore"):
                return r ** (-(d + 1)) / _ball_volume(d - 1)
        lam = self.curvature
        with np.errstate(divide="ignore"):
            return np.abs(1.0 + lam * r * r) ** (-(d + 1) / 2)

    def primitive(self, r: np.ndarray, d: int) -> np.ndarray:
        """W(r) with W' = w(r) r^{d-1}; W(0) = 0 wherever the origin side is integrable."""
        r = np.asarray(r, dtype=float)
        if self.kind == "uniform":
            return r ** d / d
        if self.kind == "v1":
            with np.errstate(divide="ignore"):
                return -1.0 / (_ball_volume(d - 1) * r)
        lam = self.curvature
        if d == 2:
            q = 1.0 + lam * r * r
            with np.errstate(divide="ignore", invalid="ignore"):
                inner = (1.0 - 1.0 / np.sqrt(np.abs(q))) / lam
                outer = -1.0 / (np.sqrt(np.abs(q)) * abs(lam))
            return np.where(q > 0, inner, outer)
        if d == 3:
            if lam > 0:
                a = math.sqrt(lam)
                ar = a * r
                return (np.arctan(ar) - ar / (1.0 + ar * ar)) / (2 * a ** 3)
            b = math.sqrt(-lam)
            br = b * r
            with np.errstate(divide="ignore", invalid="ignore"):
                frac = br / (1.0 - br * br)
                log_part = 0.5 * np.log(np.abs((1.0 + br) / (1.0 - br)))
            return (frac - log_part) / (2 * b ** 3)
        raise DomainError("radial primitives are implemented for d in {2, 3}")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "custom":
            if self.domain is not None and not np.all(self.domain(x)):
                raise DomainError("point outside the custom density's domain")
            return np.asarray(self.func(x), dtype=float)
        r = np.linalg.norm(x, axis=1)
        rs = self.singular_radius
        if rs is not None and np.any(np.abs(r - rs) <= 1e-14 * max(rs, 1.0)):
            raise DomainError(f"density {self.kind} is singular at |x| = {rs}")
        return self.radial_value(r, x.shape[1])


def Uniform() -> WeightDensity:
    return WeightDensity("uniform")


def SphericalChart() -> WeightDensity:
    return WeightDensity("spherical")


def HyperbolicChart() -> WeightDensity:
    return WeightDensity("hyperbolic")


def LambdaChart(lam: float) -> WeightDensity:
    return WeightDensity("lambda", float(lam))


def V1Dual() -> WeightDensity:
    return WeightDensity("v1")


def Custom(func, domain=None) -> WeightDensity:
    return WeightDensity("custom", func=func, domain=domain)


def chart_density(lam: float) -> WeightDensity:
    """phi_lam, using the named kinds for lam = +-1 and Uniform for lam = 0."""
    if lam == 0:
        return Uniform()
    if lam == 1:
        return SphericalChart()
    if lam == -1:
        return HyperbolicChart()
    return LambdaChart(lam)


def density_eval(w: WeightDensity, x) -> float:
    return float(w.evaluate(np.asarray(x, dtype=float))[0])


def density_to_json(w: WeightDensity) -> dict:
    if w.kind == "custom":
        raise DomainError("custom densities are not serialisable")
    out = {"kind": w.kind}
    if w.kind == "lambda":
        out["lambda"] = w.lam
    return out


def density_from_json(obj) -> WeightDensity:
    if isinstance(obj, str):
        obj = {"kind": obj}
    kind = obj.get("kind")
    extra = set(obj) - {"kind", "lambda"}
    if extra:
        raise DomainError(f"unknown density fields {sorted(extra)}")
    if kind == "lambda":
        return chart_density(float(obj["lambda"])) if obj.get("lambda") in (0, 1, -1) else LambdaChart(float(obj["lambda"]))
    if kind in ("uniform", "spherical", "hyperbolic", "v1"):
        return WeightDensity(kind)
    raise DomainError(f"unknown density kind {kind!r}")


# ----------------------------------------------------------------------------
# Radial mass along rays
# ----------------------------------------------------------------------------

def _ray_mass(w: WeightDensity, v: np.ndarray, r_lo: np.ndarray, r_hi: np.ndarray, d: int) -> np.ndarray:
    """∫_{r_lo}^{r_hi} w(r v) r^{d-1} dr for unit rays v (any leading shape)."""
    if w.radial:
        return w.primitive(r_hi, d) - w.primitive(r_lo, d)
    x, wt = gauss_legendre(24)
    half = 0.5 * (r_hi - r_lo)
    mid = 0.5 * (r_hi + r_lo)
    r = mid[..., None] + half[..., None] * x
    pts = v[..., None, :] * r[..., None]
    vals = np.asarray(w.evaluate(pts.reshape(-1, d)), dtype=float).reshape(r.shape)
    return half * np.sum(vals * r ** (d - 1) * wt, axis=-1)


def _density_on_ray(w: WeightDensity, v: np.ndarray, r: np.ndarray, d: int) -> np.ndarray:
    if w.radial:
        return w.radial_value(r, d)
    pts = v * r[..., None]
    return np.asarray(w.evaluate(pts.reshape(-1, d)), dtype=float).reshape(r.shape)


# ----------------------------------------------------------------------------
# Planar caps
# ----------------------------------------------------------------------------

def _unit(phi):
    return np.stack([np.cos(phi), np.sin(phi)], axis=-1)


def _rho2(body: ConvexBody, phi: np.ndarray) -> np.ndarray:
    shape = phi.shape
    return (1.0 / body.gauge(_unit(phi.ravel()))).reshape(shape)


def _chord_angles(body, u, s):
    """Polar angles (phi1, phi2) of the chord endpoints, phi1 < phi2."""
    theta_u = np.arctan2(u[:, 1], u[:, 0])
    x_top = body.grad(u)
    x_bot = body.grad(-u)
    phi_top = np.arctan2(x_top[:, 1], x_top[:, 0])
    phi_bot = np.arctan2(x_bot[:, 1], x_bot[:, 0])
    span_ccw = np.mod(phi_bot - phi_top, 2 * np.pi)

    def g(phi):
        return _rho2(body, phi) * np.cos(phi - theta_u) - s

    # x . u decreases monotonically along the boundary from the top support
    # point to the bottom one, in either orientation.
    lo, hi = phi_top.copy(), phi_top + span_ccw
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0
        lo, hi = np.where(pos, mid, lo), np.where(pos, hi, mid)
    phi2 = 0.5 * (lo + hi)
    lo, hi = phi_top - (2 * np.pi - span_ccw), phi_top.copy()
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0
        lo, hi = np.where(pos, lo, mid), np.where(pos, mid, hi)
    phi1 = 0.5 * (lo + hi)
    return phi1, phi2, theta_u


def _caps_2d_positive(body, w, u, s, tol):
    """Cap volumes and chord masses for 0 < s < h(u) (vectorized)."""
    d = 2
    phi1, phi2, theta_u = _chord_angles(body, u, s)

    def f(phi, idx):
        v = _unit(phi)
        c = np.cos(phi - theta_u[idx, None])
        r_line = s[idx, None] / c
        r_body = _rho2(body, phi)
        mass = _ray_mass(w, v, r_line, r_body, d)
        slice_density = _density_on_ray(w, v, r_line, d) * r_line ** (d - 1) / c
        return np.stack([mass, slice_density])

    # the ray differences lose about eps * h(u) / (h(u) - s) relative accuracy
    rel = np.maximum(1e-12, 1e3 * np.finfo(float).eps * body.h(u) / (body.h(u) - s))
    vals, err = gk15_vec(f, phi1, phi2, tol=tol, rel_tol=rel, floor=1e-300)
    singular = _crosses_singularity(body, w, u, s, phi1, phi2, theta_u)
    vol = np.where(singular, np.inf, vals[0])
    mass = np.where(singular, np.inf, vals[1])
    return vol, mass, err


def _crosses_singularity(body, w, u, s, phi1, phi2, theta_u):
    rs = w.singular_radius
    if rs is None or rs == 0.0:
        return np.zeros(len(s), bool)
    p1 = _unit(phi1) * _rho2(body, phi1)[:, None]
    p2 = _unit(phi2) * _rho2(body, phi2)[:, None]
    perp = np.column_stack([-u[:, 1], u[:, 0]])
    t1 = np.sum(p1 * perp, axis=1)
    t2 = np.sum(p2 * perp, axis=1)
    foot_inside = (t1 <= 0) & (t2 >= 0) | (t1 >= 0) & (t2 <= 0)
    r_min = np.where(foot_inside, s, np.minimum(np.linalg.norm(p1, axis=1), np.linalg.norm(p2, axis=1)))
    samples = phi1[:, None] + (phi2 - phi1)[:, None] * np.linspace(0, 1, 65)[None, :]
    r_max = _rho2(body, samples).max(axis=1)
    return (r_min < rs) & (r_max > rs)


# ----------------------------------------------------------------------------
# Spatial caps
# ----------------------------------------------------------------------------

def _frame(c: np.ndarray):
    pick = np.where(np.abs(c[:, 0:1]) < 0.9, np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))
    e1 = pick - np.sum(pick * c, axis=1, keepdims=True) * c
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    return e1, np.cross(c, e1)


def _caps_3d_positive(body, w, u, s, tol, n_az=32, n_pol=16):
    d = 3
    x_top = body.grad(u)
    c = x_top / np.linalg.norm(x_top, axis=1, keepdims=True)
    e1, e2 = _frame(c)
    cu = np.sum(c * u, axis=1)

    def integrate(n_az, n_pol):
        psi = 2 * np.pi * (np.arange(n_az) + 0.5) / n_az
        cos_p, sin_p = np.cos(psi), np.sin(psi)
        e_psi = e1[:, None, :] * cos_p[None, :, None] + e2[:, None, :] * sin_p[None, :, None]
        b = np.sum(e_psi * u[:, None, :], axis=2)
        theta_b = np.arctan2(b, cu[:, None]) + 0.5 * np.pi

        def ray(theta):
            return np.cos(theta)[..., None] * c[:, None, None, :] + np.sin(theta)[..., None] * e_psi[:, :, None, :] \
                if theta.ndim == 3 else np.cos(theta)[..., None] * c[:, None, :] + np.sin(theta)[..., None] * e_psi

        lo, hi = np.zeros_like(theta_b), theta_b.copy()
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            v = ray(mid)
            gval = (1.0 / body.gauge(v.reshape(-1, 3))).reshape(mid.shape) * np.sum(v * u[:, None, :], axis=2) - s[:, None]
            inside = gval > 0
            lo, hi = np.where(inside, mid, lo), np.where(inside, hi, mid)
        theta_max = 0.5 * (lo + hi)
        x, wt = gauss_legendre(n_pol)
        theta = 0.5 * theta_max[..., None] * (x + 1.0)
        v = ray(theta)
        vu = np.sum(v * u[:, None, None, :], axis=3)
        r_line = s[:, None, None] / vu
        r_body = (1.0 / body.gauge(v.reshape(-1, 3))).reshape(theta.shape)
        jac = np.sin(theta) * 0.5 * theta_max[..., None] * wt
        mass = _ray_mass(w, v, r_line, r_body, d)
        dens = _density_on_ray(w, v, r_line, d) * r_line ** (d - 1) / vu
        dpsi = 2 * np.pi / n_az
        return np.sum(mass * jac, axis=(1, 2)) * dpsi, np.sum(dens * jac, axis=(1, 2)) * dpsi

    vol, mass = integrate(n_az, n_pol)
    for _ in range(4):
        n_az, n_pol = 2 * n_az, 2 * n_pol
        vol2, mass2 = integrate(n_az, n_pol)
        done = np.abs(vol2 - vol) <= np.maximum(tol, 1e-9 * np.abs(vol2))
        vol, mass = vol2, mass2
        if np.all(done):
            break
    err = np.zeros_like(vol)
    rs = w.singular_radius
    if rs is not None and rs > 0:
        # conservative: flag caps whose boundary samples straddle the singular sphere
        probe = np.linspace(0.0, 1.0, 9)
        pts = x_top[:, None, :] * (1 - probe[None, :, None]) + (s / np.sum(x_top * u, axis=1))[:, None, None] * x_top[:, None, :] * probe[None, :, None]
        r = np.linalg.norm(pts, axis=2)
        bad = (r.min(axis=1) < rs) & (r.max(axis=1) > rs)
        vol = np.where(bad, np.inf, vol)
        mass = np.where(bad, np.inf, mass)
    return vol, mass, err


# ----------------------------------------------------------------------------
# Public operations
# ----------------------------------------------------------------------------

def weighted_volume(body: ConvexBody, w: WeightDensity, tol: float | None = None) -> float:
    """Total w-mass of the body (infinite if it straddles a singular sphere)."""
    d = body.dim
    tol = TAU_QUAD[d] if tol is None else tol
    rs = w.singular_radius
    if rs is not None:
        if rs == 0.0:
            return math.inf
        # the origin is interior, so every radius below the largest radial value is met
        if np.max(1.0 / body.gauge(_probe_dirs(d))) > rs:
            return math.inf
    if d == 2:
        if isinstance(body, Polytope):
            return _polygon_weighted_area(body, w, tol)
        a = np.linspace(0, 2 * np.pi, 17)
        vals, _ = gk15_vec(lambda phi, idx: _ray_mass(w, _unit(phi), np.zeros_like(phi), _rho2(body, phi), 2),
                           a[:-1], a[1:], tol=tol / 16)
        return float(np.sum(vals))
    total_prev = None
    for n in (32, 64, 128, 256):
        from .bodies import make_grid
        grid = make_grid(3, n)
        rho = 1.0 / body.gauge(grid.nodes)
        total = float(np.sum(_ray_mass(w, grid.nodes, np.zeros_like(rho), rho, 3) * grid.weights))
        if total_prev is not None and abs(total - total_prev) <= max(tol, 1e-10 * abs(total)):
            return total
        total_prev = total
    return total_prev


def _probe_dirs(d: int) -> np.ndarray:
    from .bodies import make_grid
    return make_grid(d, 720 if d == 2 else 24).nodes


def _polygon_weighted_area(poly: Polytope, w: WeightDensity, tol: float) -> float:
    verts = poly.vertices
    nxt = np.roll(verts, -1, axis=0)
    phi_a = np.arctan2(verts[:, 1], verts[:, 0])
    phi_b = phi_a + np.mod(np.arctan2(nxt[:, 1], nxt[:, 0]) - phi_a, 2 * np.pi)
    edge = nxt - verts
    normal = np.column_stack([edge[:, 1], -edge[:, 0]])
    normal /= np.linalg.norm(normal, axis=1, keepdims=True)
    t = np.sum(normal * verts, axis=1)
    theta = np.arctan2(normal[:, 1], normal[:, 0])

    def f(phi, idx):
        r = t[idx, None] / np.cos(phi - theta[idx, None])
        return _ray_mass(w, _unit(phi), np.zeros_like(phi), r, 2)

    vals, _ = gk15_vec(f, phi_a, phi_b, tol=tol / len(verts), rel_tol=1e-13, floor=1e-300)
    return float(np.sum(vals))


def _positive_caps(body, w, u, s, scale, tol):
    """Caps at offsets s >= 0.  Offsets near zero make the ray representation
    of the slice mass ill-conditioned, so there the slice mass is taken at a
    slightly shifted offset (it only steers root finding)."""
    kernel = _caps_2d_positive if body.dim == 2 else _caps_3d_positive
    tiny = 1e-7 * scale
    vol, mass, _ = kernel(body, w, u, np.maximum(s, 1e-300), tol)
    near = s < tiny
    if near.any():
        _, mass[near], _ = kernel(body, w, u[near], tiny[near], tol)
    return vol, mass


def cap_volumes(body: ConvexBody, w: WeightDensity, u: np.ndarray, t: np.ndarray,
                tol: float | None = None, total: float | None = None):
    """Vectorized caps ``K ∩ {x . u_i >= t_i}``.

    Returns ``(volume, slice_mass, empty)``: ``slice_mass`` is the w-mass of
    the cutting section, i.e. ``-d volume / d t``; ``empty`` flags t > h(u).
    """
    u = _as_dirs(u)
    t = np.broadcast_to(np.asarray(t, dtype=float), (len(u),)).copy()
    d = body.dim
    tol = TAU_QUAD[d] if tol is None else tol
    h_top = body.h(u)
    h_bot = body.h(-u)
    vol = np.zeros(len(u))
    mass = np.zeros(len(u))
    empty = t > h_top
    full = t <= -h_bot
    pos = (t > 0) & (t < h_top)
    neg = (t <= 0) & ~full
    if w.kind == "v1":
        vol[neg | full] = np.inf
        mass[neg] = np.inf
        neg = np.zeros_like(neg)
        full = np.zeros_like(full)
    scale = h_top + h_bot
    if pos.any():
        vol[pos], mass[pos] = _positive_caps(body, w, u[pos], t[pos], scale[pos], tol)
    if neg.any() or full.any():
        total = weighted_volume(body, w, tol) if total is None else total
        vol[full] = total
        if neg.any():
            comp, cmass = _positive_caps(body, w, -u[neg], -t[neg], scale[neg], tol)
            vol[neg] = total - comp
            mass[neg] = cmass
    return vol, mass, empty


def weighted_cap_volume(body: ConvexBody, w: WeightDensity, u, t: float,
                        with_flag: bool = False, tol: float | None = None):
    """w-mass of the cap ``K ∩ {x . u >= t}``.

    Returns 0 for t > h(u); with ``with_flag=True`` the pair (value, empty)
    is returned so callers can tell an empty cap from a zero-mass one.
    """
    u = _as_dirs(u)
    x = body.grad(u)[0]
    if w.kind == "custom" and w.domain is not None and not np.all(w.domain(x[None])):
        raise DomainError("cap is not inside the density's domain")
    vol, _, empty = cap_volumes(body, w, u, np.array([t]), tol)
    out = float(vol[0])
    return (out, bool(empty[0])) if with_flag else out


def _sample_support(h, grid: QuadratureGrid) -> np.ndarray:
    if callable(h):
        return np.asarray(h(grid.nodes), dtype=float)
    return np.broadcast_to(np.asarray(h, dtype=float), (len(grid),)).copy()


def polar_shell_weighted_volume(h_outer, h_inner, psi: WeightDensity, grid: QuadratureGrid,
                                per_node: bool = False):
    """∫_{S^{d-1}} ∫_{h_inner(u)}^{h_outer(u)} psi(u / s) s^{-(d+1)} ds du.

    This is the psi-mass of the region between the polar bodies of the
    inner and outer bodies.  Supports can be arrays of grid samples or
    callables on the grid nodes.  The inner integral runs over a positive
    integrand (no volume subtraction), via the substitution r = 1/s.
    """
    hi = _sample_support(h_outer, grid)
    lo = _sample_support(h_inner, grid)
    if np.any(lo <= 0) or np.any(hi - lo < -1e-14 * np.abs(hi)):
        raise InvalidShell("need 0 < h_inner <= h_outer on every grid direction")
    lo = np.minimum(lo, hi)
    d = grid.dim
    # r = 1/s turns the inner integral into ∫ psi(r u) r^{d-1} dr over [1/h_outer, 1/h_inner]
    r_lo, r_hi = 1.0 / hi, 1.0 / lo
    x, wt = gauss_legendre(20)
    half = 0.5 * (r_hi - r_lo)
    mid = 0.5 * (r_hi + r_lo)
    r = mid[:, None] + half[:, None] * x[None, :]
    dens = _density_on_ray(psi, grid.nodes[:, None, :], r, d)
    inner = half * np.sum(dens * r ** (d - 1) * wt, axis=1)
    if per_node:
        return inner
    return float(np.sum(inner * grid.weights))
