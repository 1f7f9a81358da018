"""Weighted floating bodies, the minimal cap density and polar conjugates.

The floating body is assembled as a Wulff shape: for every grid
direction u the cap height h_delta(u) is solved, and the halfspaces
``x . u <= h(u) - h_delta(u)`` are intersected.  Polar-conjugated bodies
float the polar body and polar back.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .bodies import (ConvexBody, Disk, Ellipse, Ellipsoid, Polytope, QuadratureGrid,
                     _as_dirs, halfspace_intersection, polar_body)
from .errors import DeltaOutOfRange, EmptyBody, PointOutsideBody
from .measures import (TAU_QUAD, V1Dual, WeightDensity, cap_volumes,
                       polar_shell_weighted_volume, weighted_volume)
from .oracles import a_d, unit_ball_volume

__all__ = [
    "CapHeightProfile", "FloatingBodyResult", "ConjugatedResult",
    "cap_height", "cap_heights", "weighted_floating_body", "minimal_cap_density",
    "polar_conjugated_floating_body", "conjugated_floating", "v1_illumination_body",
    "rolling_radius", "uniform_rate_constant", "TAU_ROOT", "TANGENCY_TOL",
]

TAU_ROOT = 1e-12
TANGENCY_TOL = 1e-8


@dataclass
class CapHeightProfile:
    grid: QuadratureGrid
    heights: np.ndarray
    delta: float


@dataclass
class FloatingBodyResult:
    body: Polytope
    profile: CapHeightProfile
    tangency_flags: np.ndarray
    support: np.ndarray              # h(K, u) on the grid
    beyond_regularity: bool = False  # delta >= half the weighted volume

    @property
    def all_tangent(self) -> bool:
        return bool(np.all(self.tangency_flags))

    def to_json(self) -> dict:
        g = self.profile.grid
        return {
            "delta": self.profile.delta,
            "directions": g.nodes.tolist(),
            "support": self.support.tolist(),
            "cap_heights": self.profile.heights.tolist(),
            "tangent": [bool(f) for f in self.tangency_flags],
            "vertices": self.body.vertices.tolist(),
            "beyond_regularity": self.beyond_regularity,
        }

    def to_csv(self) -> str:
        g = self.profile.grid
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if g.dim == 2:
            writer.writerow(["angle", "h", "h_delta", "tangent"])
            for a, h, hd, f in zip(g.angles, self.support, self.profile.heights, self.tangency_flags):
                writer.writerow([repr(float(a)), repr(float(h)), repr(float(hd)), int(f)])
        else:
            writer.writerow(["u_x", "u_y", "u_z", "h", "h_delta", "tangent"])
            for u, h, hd, f in zip(g.nodes, self.support, self.profile.heights, self.tangency_flags):
                writer.writerow([*(repr(float(c)) for c in u), repr(float(h)), repr(float(hd)), int(f)])
        return buf.getvalue()


def _initial_heights(body: ConvexBody, w: WeightDensity, u: np.ndarray, delta: float) -> np.ndarray:
    """Cap heights from the osculating-paraboloid law delta ~ a_d w(x) H^{-1/2} h^{(d+1)/2}."""
    d = body.dim
    x = body.grad(u)
    radii = body.radii_of_curvature(u)
    rad = np.prod(np.atleast_2d(radii.reshape(len(u), -1)), axis=1)
    with np.errstate(all="ignore"):
        dens = w.evaluate(x) if w.kind != "v1" else w.radial_value(np.linalg.norm(x, axis=1), d)
        guess = (delta / (a_d(d) * dens * np.sqrt(rad))) ** (2.0 / (d + 1))
    return guess


def cap_heights(body: ConvexBody, w: WeightDensity, u: np.ndarray, delta: float,
                tol: float | None = None, total: float | None = None) -> np.ndarray:
    """Vectorized cap heights h_delta(u) with Vol^w(K ∩ {x . u >= h(u) - h_delta}) = delta.

    Safeguarded Newton iteration on the offset t applied to V^{2/(d+1)}
    (V is the cap volume, whose derivative is minus the slice mass); every
    step that leaves the current bracket falls back to bisection.
    """
    u = _as_dirs(u)
    d = body.dim
    tol = TAU_QUAD[d] if tol is None else tol
    if not delta > 0:
        raise DeltaOutOfRange("delta must be positive")
    if total is None:
        total = weighted_volume(body, w, tol)
    if delta >= total:
        raise DeltaOutOfRange(f"delta = {delta} is not below the weighted volume {total}")
    top = body.h(u)
    bot = -body.h(-u)
    width = top - bot
    lo, hi = bot.copy(), top.copy()       # V(lo) >= delta > V(hi) = 0
    guess = _initial_heights(body, w, u, delta)
    t = np.where(np.isfinite(guess) & (guess > 0) & (guess < width), top - guess, 0.5 * (lo + hi))
    active = np.arange(len(u))
    for _ in range(200):
        if active.size == 0:
            break
        vol, mass, _ = cap_volumes(body, w, u[active], t[active], tol, total)
        above = vol > delta
        lo[active] = np.where(above, t[active], lo[active])
        hi[active] = np.where(above, hi[active], t[active])
        with np.errstate(all="ignore"):
            # Newton on V^{2/(d+1)}, which is close to linear in t near the top
            e = 2.0 / (d + 1)
            step = (vol ** e - delta ** e) / (e * vol ** (e - 1.0) * mass)
            t_new = t[active] + step
        small = np.isfinite(step) & (np.abs(step) < TAU_ROOT * width[active])
        bad = ~small & (~np.isfinite(t_new) | (t_new <= lo[active]) | (t_new >= hi[active]))
        t_new = np.where(bad, 0.5 * (lo[active] + hi[active]), t_new)
        t[active] = np.where(small, np.clip(t_new, lo[active], hi[active]), t_new)
        done = small | (hi[active] - lo[active] < TAU_ROOT * width[active])
        active = active[~done]
    return top - t


def cap_height(body: ConvexBody, w: WeightDensity, u, delta: float, tol: float | None = None) -> float:
    return float(cap_heights(body, w, _as_dirs(u), delta, tol)[0])


def weighted_floating_body(body: ConvexBody, w: WeightDensity, delta: float,
                           grid: QuadratureGrid, tol: float | None = None) -> FloatingBodyResult:
    """Grid approximation of K_delta^w as an intersection of halfspaces."""
    total = weighted_volume(body, w, tol)
    heights = cap_heights(body, w, grid.nodes, delta, tol, total)
    support = body.h(grid.nodes)
    offsets = support - heights
    try:
        poly = halfspace_intersection(grid.nodes, offsets)
    except EmptyBody as exc:
        raise EmptyBody(f"floating body is empty at delta = {delta} on this grid") from exc
    flags = np.abs(poly.h(grid.nodes) - offsets) <= TANGENCY_TOL
    return FloatingBodyResult(poly, CapHeightProfile(grid, heights, delta), flags, support,
                              beyond_regularity=bool(delta >= 0.5 * total))


def minimal_cap_density(body: ConvexBody, w: WeightDensity, x, grid: QuadratureGrid,
                        tol: float | None = None) -> float:
    """min over u of Vol^w(K ∩ {y . u >= x . u}): grid argmin plus golden refinement."""
    x = np.asarray(x, dtype=float)
    if body.gauge(x[None])[0] > 1.0 + 1e-12:
        raise PointOutsideBody(f"{x} is not in the body")
    total = weighted_volume(body, w, tol)

    def caps(dirs):
        return cap_volumes(body, w, dirs, dirs @ x, tol, total)[0]

    vals = caps(grid.nodes)
    k = int(np.argmin(vals))       # argmin returns the first minimiser on plateaus
    best = float(vals[k])
    if grid.dim == 2:
        step = 2 * np.pi / len(grid)
        a0 = grid.angles[k]

        def f(a):
            return float(caps(np.array([[math.cos(a), math.sin(a)]]))[0])

        a_best, v = _golden_min(f, a0 - step, a0 + step)
        return min(best, v)
    # d = 3: alternate golden passes in two tangent angles around the grid minimiser
    u0 = grid.nodes[k]
    pick = np.array([1.0, 0, 0]) if abs(u0[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = pick - (pick @ u0) * u0
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u0, e1)
    span = math.pi / grid.resolution
    a = b = 0.0

    def direction(a, b):
        v = u0 + math.tan(a) * e1 + math.tan(b) * e2
        return v / np.linalg.norm(v)

    for _ in range(3):
        a, va = _golden_min(lambda s: float(caps(direction(s, b)[None])[0]), a - span, a + span)
        b, vb = _golden_min(lambda s: float(caps(direction(a, s)[None])[0]), b - span, b + span)
        best = min(best, va, vb)
        span *= 0.5
    return best


def _golden_min(f, lo, hi, tol=1e-10, max_iter=100):
    g = (math.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


@dataclass
class ConjugatedResult:
    """Polar-side floating body together with the primal outer body."""
    source: ConvexBody
    polar_source: ConvexBody
    polar_floating: FloatingBodyResult
    body: Polytope                    # ((K°)_delta)°, an outer approximant of the conjugate

    def shell_volume(self, psi: WeightDensity) -> float:
        """Vol^psi(conjugate) - Vol^psi(source) through the polar-shell integral."""
        grid = self.polar_floating.profile.grid
        return polar_shell_weighted_volume(self.polar_floating.support,
                                           self.polar_floating.body.h(grid.nodes), psi, grid)


def conjugated_floating(body: ConvexBody, w_polar_side: WeightDensity, delta: float,
                        grid: QuadratureGrid, tol: float | None = None) -> ConjugatedResult:
    kp = polar_body(body)
    fl = weighted_floating_body(kp, w_polar_side, delta, grid, tol)
    return ConjugatedResult(body, kp, fl, fl.body.polar())


def polar_conjugated_floating_body(body: ConvexBody, w_polar_side: WeightDensity, delta: float,
                                   grid: QuadratureGrid, tol: float | None = None) -> Polytope:
    """((K°)_delta^w)°, returned as a polytope containing K."""
    return conjugated_floating(body, w_polar_side, delta, grid, tol).body


def v1_illumination_body(body: ConvexBody, delta: float, grid: QuadratureGrid,
                         tol: float | None = None) -> ConvexBody:
    """Points whose hull with K raises the mean width functional V_1 by at most delta."""
    if delta == 0:
        return body
    return polar_conjugated_floating_body(body, V1Dual(), delta, grid, tol)


def rolling_radius(body: ConvexBody) -> float:
    """Largest ball radius that rolls freely inside the analytic families."""
    if isinstance(body, Disk):
        return body.radius
    if isinstance(body, Ellipse):
        a, b = sorted((body.a, body.b))
        return a * a / b
    if isinstance(body, Ellipsoid):
        ax = sorted((body.a, body.b, body.c))
        return ax[0] ** 2 / ax[2]
    raise NotImplementedError("rolling radius is only tabulated for quadrics")


def uniform_rate_constant(d: int, r: float, alpha: float) -> tuple[float, float]:
    """(C, delta_0) with max_u h_delta(u) <= C delta^{2/(d+1)} for delta < delta_0.

    From comparison with the inscribed rolling ball of radius r and the
    lower bound alpha of the density.
    """
    ad = a_d(d)
    c = r ** (-(d - 1) / (d + 1)) * (2.0 / (ad * alpha)) ** (2.0 / (d + 1))
    delta1 = 0.5 * alpha * r ** d * unit_ball_volume(d)
    delta2 = 0.5 * alpha * (1.0 / d) ** ((d + 1) / 2) * ad * r ** d
    return c, min(delta1, delta2)


def result_to_json(res: FloatingBodyResult) -> str:
    return json.dumps(res.to_json(), sort_keys=True)
