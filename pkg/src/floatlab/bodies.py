"""Convex bodies described through support functions.

Every body keeps the origin strictly in its interior.  The parametric
families implement their support function, its gradient (the boundary
point with outer normal u) and Hessian (whose restriction to the tangent
space holds the principal radii of curvature), and the gauge function
(whose reciprocal is the radial function).  Polytopes are built from
halfspace lists by a dual convex hull.

Array conventions: direction batches have shape ``(n, d)``; scalar entry
points such as :func:`support` accept a single vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .errors import (EmptyBody, FlatPoint, InvalidBody, OriginNotInterior,
                     UnboundedBody)

__all__ = [
    "Direction", "Halfspace", "QuadratureGrid", "BoundaryEvaluation",
    "ConvexBody", "Disk", "Ellipse", "Ellipsoid", "PNormBall", "Polytope",
    "LinearImage", "SupportGrid",
    "make_grid", "support", "support_many", "boundary_eval", "boundary_eval_many",
    "gauge_many", "radial_many", "polar_support", "polar_support_numeric",
    "polar_point", "polar_body", "halfspace_intersection", "hausdorff_distance",
    "validate_body", "body_from_json", "body_to_json", "FLAT_TOL",
]

FLAT_TOL = 1e-12
FD_STEP_FIRST = 1e-6
FD_STEP_SECOND = 1e-4


@dataclass(frozen=True)
class Direction:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.size not in (2, 3):
            raise InvalidBody("directions live in R^2 or R^3")
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise InvalidBody(f"direction {c} is not a unit vector")
        object.__setattr__(self, "coords", c)

    @classmethod
    def normalized(cls, v) -> Direction:
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def from_angle(cls, theta: float) -> Direction:
        return cls(np.array([math.cos(theta), math.sin(theta)]))


@dataclass(frozen=True)
class Halfspace:
    """H^-(u, t) = {x : x . u <= t}."""
    normal: Direction
    offset: float

    def __post_init__(self):
        if not math.isfinite(self.offset):
            raise InvalidBody("halfspace offset must be finite")


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights on S^{d-1}; weights sum to the sphere's measure."""
    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    resolution: int
    angles: np.ndarray | None = None   # d = 2 only: node angles in [0, 2pi)

    def __len__(self) -> int:
        return len(self.weights)


def make_grid(dim: int, n: int) -> QuadratureGrid:
    """Uniform angles for d = 2; Gauss-Legendre(cos theta) x uniform azimuth for d = 3.

    For d = 3 ``n`` is the number of polar nodes and 2n azimuths are used.
    """
    if dim == 2:
        if n < 8:
            raise ValueError("grid resolution too small")
        theta = 2.0 * np.pi * np.arange(n) / n
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(n, 2.0 * np.pi / n)
        return QuadratureGrid(2, nodes, weights, n, theta)
    if dim == 3:
        z, wz = np.polynomial.legendre.leggauss(n)
        n_az = 2 * n
        phi = 2.0 * np.pi * (np.arange(n_az) + 0.5) / n_az
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        rr = np.sqrt(1.0 - zz ** 2)
        nodes = np.column_stack([(rr * np.cos(pp)).ravel(), (rr * np.sin(pp)).ravel(), zz.ravel()])
        weights = (wz[:, None] * np.full(n_az, 2.0 * np.pi / n_az)[None, :]).ravel()
        return QuadratureGrid(3, nodes, weights, n)
    raise ValueError("only d in {2, 3} is supported")


@dataclass(frozen=True)
class BoundaryEvaluation:
    direction: np.ndarray
    support: float
    point: np.ndarray
    normal: np.ndarray
    gauss_kronecker: float
    support_distance: float


def _as_dirs(u) -> np.ndarray:
    if isinstance(u, Direction):
        u = u.coords
    u = np.asarray(u, dtype=float)
    return u[None, :] if u.ndim == 1 else u


def _tangent_basis(u: np.ndarray) -> np.ndarray:
    """Orthonormal tangent frame(s) at directions u; shape (n, d, d-1)."""
    n, d = u.shape
    if d == 2:
        return np.stack([-u[:, 1], u[:, 0]], axis=1)[:, :, None]
    pick = np.where(np.abs(u[:, 0:1]) < 0.9, np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))
    e1 = pick - np.sum(pick * u, axis=1, keepdims=True) * u
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(u, e1)
    return np.stack([e1, e2], axis=2)


class ConvexBody:
    """Interface shared by all body families."""

    dim: int = 2

    def h(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gauge(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def polar(self) -> ConvexBody | None:
        return None

    def singular_normals(self) -> np.ndarray:
        """Normals where the curvature is known to vanish or blow up."""
        return np.zeros((0, self.dim))

    @property
    def centrally_symmetric(self) -> bool:
        return False

    def radii_of_curvature(self, u: np.ndarray) -> np.ndarray:
        """Determinant of the tangential Hessian of h, i.e. 1/H."""
        hs = self.hess(u)
        t = _tangent_basis(u)
        red = np.einsum("nia,nij,njb->nab", t, hs, t)
        if self.dim == 2:
            return red[:, 0, 0]
        return red[:, 0, 0] * red[:, 1, 1] - red[:, 0, 1] * red[:, 1, 0]


@dataclass(frozen=True)
class _Quadric(ConvexBody):
    """Shared code for balls and axis-aligned ellipsoids: h(u) = sqrt(u^T M u)."""

    @cached_property
    def _axes(self) -> np.ndarray:
        raise NotImplementedError

    def h(self, u):
        return np.sqrt(np.einsum("ni,i,ni->n", u, self._axes ** 2, u))

    def grad(self, u):
        return u * self._axes ** 2 / self.h(u)[:, None]

    def hess(self, u):
        h = self.h(u)
        mu = u * self._axes ** 2
        m = np.diag(self._axes ** 2)
        return m[None] / h[:, None, None] - np.einsum("ni,nj->nij", mu, mu) / h[:, None, None] ** 3

    def gauge(self, x):
        return np.sqrt(np.sum((x / self._axes) ** 2, axis=1))

    @property
    def centrally_symmetric(self) -> bool:
        return True


@dataclass(frozen=True)
class Disk(_Quadric):
    """Euclidean ball of the given radius (a disk for dim = 2)."""
    radius: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidBody("radius must be positive")
        if self.dim not in (2, 3):
            raise InvalidBody("dim must be 2 or 3")

    @cached_property
    def _axes(self):
        return np.full(self.dim, float(self.radius))

    def polar(self):
        return Disk(1.0 / self.radius, self.dim)


@dataclass(frozen=True)
class Ellipse(_Quadric):
    a: float = 1.0
    b: float = 1.0
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidBody("semi-axes must be positive")

    @cached_property
    def _axes(self):
        return np.array([self.a, self.b], dtype=float)

    def polar(self):
        return Ellipse(1.0 / self.a, 1.0 / self.b)


@dataclass(frozen=True)
class Ellipsoid(_Quadric):
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    dim: int = field(default=3, init=False)

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c > 0):
            raise InvalidBody("semi-axes must be positive")

    @cached_property
    def _axes(self):
        return np.array([self.a, self.b, self.c], dtype=float)

    def polar(self):
        return Ellipsoid(1.0 / self.a, 1.0 / self.b, 1.0 / self.c)


@dataclass(frozen=True)
class PNormBall(ConvexBody):
    """scale * {x : |x|_p <= 1}; support is scale * |u|_q with 1/p + 1/q = 1."""
    p: float = 2.0
    scale: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidBody("p must exceed 1")
        if not self.scale > 0:
            raise InvalidBody("scale must be positive")
        if self.dim not in (2, 3):
            raise InvalidBody("dim must be 2 or 3")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    def _qnorm(self, u):
        return np.sum(np.abs(u) ** self.q, axis=1) ** (1.0 / self.q)

    def h(self, u):
        return self.scale * self._qnorm(u)

    def grad(self, u):
        q = self.q
        nrm = self._qnorm(u)
        return self.scale * np.sign(u) * np.abs(u) ** (q - 1) / nrm[:, None] ** (q - 1)

    def hess(self, u):
        q = self.q
        nrm = self._qnorm(u)[:, None]
        g = np.sign(u) * np.abs(u) ** (q - 1)
        with np.errstate(divide="ignore"):
            diag = np.abs(u) ** (q - 2)
        out = -np.einsum("ni,nj->nij", g, g) / nrm[:, :, None] ** (2 * q - 1)
        idx = np.arange(self.dim)
        out[:, idx, idx] += diag / nrm ** (q - 1)
        return self.scale * (q - 1) * out

    def gauge(self, x):
        return np.sum(np.abs(x) ** self.p, axis=1) ** (1.0 / self.p) / self.scale

    def polar(self):
        return PNormBall(self.q, 1.0 / self.scale, self.dim)

    def singular_normals(self):
        if self.p == 2:
            return np.zeros((0, self.dim))
        eye = np.eye(self.dim)
        return np.vstack([eye, -eye])

    @property
    def centrally_symmetric(self) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class LinearImage(ConvexBody):
    """A K + offset for an invertible matrix A."""
    matrix: np.ndarray = None
    base: ConvexBody = None
    offset: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.shape != (self.base.dim, self.base.dim):
            raise InvalidBody("matrix shape does not match the base body's dimension")
        if abs(np.linalg.det(a)) <= 1e-14:
            raise InvalidBody("matrix must be invertible")
        object.__setattr__(self, "matrix", a)
        if self.offset is not None:
            off = np.asarray(self.offset, dtype=float)
            object.__setattr__(self, "offset", None if not np.any(off) else off)
        if self.offset is not None and self.base.gauge(-(np.linalg.solve(a, self.offset))[None])[0] >= 1:
            raise OriginNotInterior("translated body does not contain the origin in its interior")

    @property
    def dim(self) -> int:
        return self.base.dim

    @cached_property
    def _inv(self):
        return np.linalg.inv(self.matrix)

    def h(self, u):
        val = self.base.h(u @ self.matrix)
        return val if self.offset is None else val + u @ self.offset

    def grad(self, u):
        val = self.base.grad(u @ self.matrix) @ self.matrix.T
        return val if self.offset is None else val + self.offset

    def hess(self, u):
        return np.einsum("ia,nab,jb->nij", self.matrix, self.base.hess(u @ self.matrix), self.matrix)

    def _gauge_linear(self, x):
        return self.base.gauge(x @ self._inv.T)

    def gauge(self, x):
        if self.offset is None:
            return self._gauge_linear(x)
        # gauge(x) = min{t > 0 : x/t - offset in A K}; bisection on the monotone predicate
        lo = np.zeros(len(x))
        hi = np.ones(len(x))
        for _ in range(200):
            out = self._gauge_linear(x / hi[:, None] - self.offset) > 1
            if not out.any():
                break
            hi = np.where(out, 2 * hi, hi)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            inside = self._gauge_linear(x / np.maximum(mid, 1e-300)[:, None] - self.offset) <= 1
            hi = np.where(inside, mid, hi)
            lo = np.where(inside, lo, mid)
        return hi

    def polar(self):
        if self.offset is not None:
            return None
        bp = self.base.polar()
        return None if bp is None else LinearImage(self._inv.T, bp)

    def singular_normals(self):
        sn = self.base.singular_normals()
        if len(sn) == 0:
            return sn
        mapped = sn @ self._inv
        return mapped / np.linalg.norm(mapped, axis=1, keepdims=True)

    @property
    def centrally_symmetric(self) -> bool:
        return self.offset is None and self.base.centrally_symmetric


@dataclass(frozen=True, eq=False)
class Polytope(ConvexBody):
    """Bounded intersection of halfspaces; vertices are derived on construction."""
    normals: np.ndarray = None
    offsets: np.ndarray = None
    vertices: np.ndarray = field(default=None, init=False)

    def __post_init__(self):
        normals, offsets = _canonical_halfspaces(self.normals, self.offsets)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "vertices", _vertices_from_halfspaces(normals, offsets))

    @classmethod
    def from_halfspaces(cls, halfspaces: list[Halfspace]) -> Polytope:
        n = np.array([hs.normal.coords for hs in halfspaces])
        t = np.array([hs.offset for hs in halfspaces])
        return cls(n, t)

    @classmethod
    def from_vertices(cls, vertices: np.ndarray) -> Polytope:
        """Polytope conv(vertices); the origin must be interior."""
        dual = polar_of_points(np.asarray(vertices, dtype=float))
        return dual.polar()

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def h(self, u):
        return np.max(u @ self.vertices.T, axis=1)

    def grad(self, u):
        vals = u @ self.vertices.T
        top = vals.max(axis=1, keepdims=True)
        tie = vals >= top - 1e-12 * np.maximum(1.0, np.abs(top))
        return (tie.astype(float) @ self.vertices) / tie.sum(axis=1, keepdims=True)

    def hess(self, u):
        # Vertices have infinite curvature (zero radii); facets are detected in boundary_eval.
        return np.zeros((len(u), self.dim, self.dim))

    def facet_mask(self, u) -> np.ndarray:
        vals = u @ self.vertices.T
        top = vals.max(axis=1, keepdims=True)
        return (vals >= top - 1e-12 * np.maximum(1.0, np.abs(top))).sum(axis=1) >= self.dim

    def gauge(self, x):
        if np.any(self.offsets <= 0):
            raise OriginNotInterior("polytope does not contain the origin in its interior")
        return np.max(x @ (self.normals / self.offsets[:, None]).T, axis=1)

    def polar(self):
        v = self.vertices
        r = np.linalg.norm(v, axis=1)
        return Polytope(v / r[:, None], 1.0 / r)

    @property
    def centrally_symmetric(self) -> bool:
        v = np.round(self.vertices, 10)
        return {tuple(row) for row in v} == {tuple(row) for row in (-v + 0.0)}

    def area(self) -> float:
        """Volume for d = 2 (shoelace) or d = 3 (hull volume)."""
        if self.dim == 2:
            x, y = self.vertices[:, 0], self.vertices[:, 1]
            return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        return float(ConvexHull(self.vertices).volume)


@dataclass(frozen=True, eq=False)
class SupportGrid(ConvexBody):
    """Planar body given by support values at sampled angles.

    The support function is interpolated by a periodic cubic spline; the
    body itself is the intersection of the sampled halfplanes.
    """
    angles: np.ndarray = None
    values: np.ndarray = None
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        ang = np.mod(np.asarray(self.angles, dtype=float), 2 * np.pi)
        val = np.asarray(self.values, dtype=float)
        if ang.shape != val.shape or ang.ndim != 1 or ang.size < 8:
            raise InvalidBody("support grid needs matching 1-D angle/value arrays (>= 8 samples)")
        order = np.argsort(ang)
        ang, val = ang[order], val[order]
        if np.any(np.diff(ang) <= 0):
            raise InvalidBody("support grid angles must be distinct")
        if np.any(val <= 0):
            raise OriginNotInterior("support values must be positive")
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "values", val)

    @cached_property
    def _spline(self):
        x = np.append(self.angles, self.angles[0] + 2 * np.pi)
        y = np.append(self.values, self.values[0])
        return CubicSpline(x, y, bc_type="periodic")

    @cached_property
    def _hull(self) -> Polytope:
        n = np.column_stack([np.cos(self.angles), np.sin(self.angles)])
        return halfspace_intersection(n, self.values)

    def _theta(self, u):
        return np.mod(np.arctan2(u[:, 1], u[:, 0]), 2 * np.pi)

    def _h_theta(self, th):
        return self._spline(np.mod(th, 2 * np.pi))

    def h(self, u):
        return self._h_theta(self._theta(u))

    def grad(self, u):
        th = self._theta(u)
        s = FD_STEP_FIRST
        dh = (self._h_theta(th + s) - self._h_theta(th - s)) / (2 * s)
        tang = np.column_stack([-u[:, 1], u[:, 0]])
        return self._h_theta(th)[:, None] * u + dh[:, None] * tang

    def radii_of_curvature(self, u):
        th = self._theta(u)
        s = FD_STEP_SECOND
        h0 = self._h_theta(th)
        d2 = (self._h_theta(th + s) - 2 * h0 + self._h_theta(th - s)) / s ** 2
        return h0 + d2

    def hess(self, u):
        r = self.radii_of_curvature(u)
        tang = np.column_stack([-u[:, 1], u[:, 0]])
        return r[:, None, None] * np.einsum("ni,nj->nij", tang, tang)

    def gauge(self, x):
        return self._hull.gauge(x)


# ----------------------------------------------------------------------------
# Polytope construction
# ----------------------------------------------------------------------------

def _canonical_halfspaces(normals, offsets):
    n = np.atleast_2d(np.asarray(normals, dtype=float))
    t = np.asarray(offsets, dtype=float).ravel()
    if n.shape[0] != t.size:
        raise InvalidBody("normals and offsets differ in length")
    if not np.all(np.isfinite(t)) or not np.all(np.isfinite(n)):
        raise InvalidBody("halfspaces must be finite")
    norms = np.linalg.norm(n, axis=1)
    if np.any(norms == 0):
        raise InvalidBody("zero normal")
    n = n / norms[:, None]
    t = t / norms
    keys = np.column_stack([n, t])
    order = np.lexsort(keys.T[::-1])
    keys = keys[order]
    keep = np.ones(len(keys), bool)
    keep[1:] = np.any(np.abs(np.diff(keys, axis=0)) > 1e-10, axis=1)
    keys = keys[keep]
    return keys[:, :-1], keys[:, -1]


def _check_bounded(normals: np.ndarray) -> None:
    d = normals.shape[1]
    if d == 2:
        ang = np.sort(np.arctan2(normals[:, 1], normals[:, 0]))
        gaps = np.diff(np.append(ang, ang[0] + 2 * np.pi))
        if gaps.max() >= np.pi - 1e-12:
            raise UnboundedBody("halfplane normals leave an angular gap of at least pi")
        return
    try:
        hull = ConvexHull(normals)
    except (QhullError, ValueError) as exc:
        raise UnboundedBody("halfspace normals do not positively span R^3") from exc
    if np.any(hull.equations[:, -1] >= -1e-12):
        raise UnboundedBody("halfspace normals do not positively span R^3")


def _interior_point(normals, offsets) -> np.ndarray:
    if np.all(offsets > 0):
        return np.zeros(normals.shape[1])
    d = normals.shape[1]
    # Chebyshev centre: maximise r subject to n_i . c + r <= t_i.
    a_ub = np.column_stack([normals, np.ones(len(offsets))])
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * d + [(0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=offsets, bounds=bounds, method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        raise EmptyBody("halfspace intersection has empty interior")
    return res.x[:d]


def _hull_2d_ccw(points: np.ndarray) -> np.ndarray:
    """Indices of the strict convex hull, counter-clockwise (Andrew's monotone chain)."""
    order = np.lexsort((points[:, 1], points[:, 0]))
    pts = points[order]

    def half(seq):
        out: list[int] = []
        for i in seq:
            while len(out) >= 2:
                o, a = pts[out[-2]], pts[out[-1]]
                b = pts[i]
                if (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]) <= 0:
                    out.pop()
                else:
                    break
            out.append(i)
        return out

    lower = half(range(len(pts)))
    upper = half(range(len(pts) - 1, -1, -1))
    return order[np.array(lower[:-1] + upper[:-1])]


def _vertices_from_halfspaces(normals, offsets) -> np.ndarray:
    d = normals.shape[1]
    if d not in (2, 3):
        raise InvalidBody("only d in {2, 3} is supported")
    if len(offsets) < d + 1:
        raise UnboundedBody("too few halfspaces for a bounded body")
    _check_bounded(normals)
    center = _interior_point(normals, offsets)
    shifted = offsets - normals @ center
    if np.any(shifted <= 0):
        raise EmptyBody("halfspace intersection has empty interior")
    dual = normals / shifted[:, None]
    if d == 2:
        idx = _hull_2d_ccw(dual)
        p, q = dual[idx], dual[np.roll(idx, -1)]
        det = p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]
        verts = np.column_stack([(q[:, 1] - p[:, 1]) / det, (p[:, 0] - q[:, 0]) / det])
        verts = verts + center
        start = np.lexsort((verts[:, 1], verts[:, 0]))[0]
        return np.roll(verts, -start, axis=0)
    hull = ConvexHull(dual)
    eq = hull.equations
    verts = eq[:, :3] / (-eq[:, 3:4])
    verts = np.unique(np.round(verts, 12), axis=0) + center
    return verts[np.lexsort(verts.T[::-1])]


def halfspace_intersection(normals, offsets=None) -> Polytope:
    """Bounded intersection of halfspaces H^-(u_i, t_i).

    Accepts either a list of :class:`Halfspace` or arrays of normals/offsets.
    Raises EmptyBody or UnboundedBody.  The origin need not be interior;
    a Chebyshev centre is used for the dual hull in that case.
    """
    if offsets is None:
        normals, offsets = (np.array([hs.normal.coords for hs in normals]),
                            np.array([hs.offset for hs in normals]))
    return Polytope(normals, offsets)


def polar_of_points(points: np.ndarray) -> Polytope:
    """The polar {y : y . p <= 1 for all p} of a point set with 0 in its hull interior."""
    r = np.linalg.norm(points, axis=1)
    if np.any(r == 0):
        raise OriginNotInterior("origin is one of the points")
    return Polytope(points / r[:, None], 1.0 / r)


# ----------------------------------------------------------------------------
# Public operations
# ----------------------------------------------------------------------------

def support(body: ConvexBody, u) -> float:
    return float(body.h(_as_dirs(u))[0])


def support_many(body: ConvexBody, u: np.ndarray) -> np.ndarray:
    return body.h(_as_dirs(u))


def gauge_many(body: ConvexBody, x: np.ndarray) -> np.ndarray:
    return body.gauge(np.atleast_2d(np.asarray(x, dtype=float)))


def radial_many(body: ConvexBody, v: np.ndarray) -> np.ndarray:
    """Radial function rho_K(v) = 1 / gauge_K(v) for unit vectors v."""
    return 1.0 / gauge_many(body, v)


def boundary_eval_many(body: ConvexBody, u: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorized boundary data; flat points are reported with H = 0, not raised."""
    u = _as_dirs(u)
    h = body.h(u)
    x = body.grad(u)
    if isinstance(body, Polytope):
        radius = np.where(body.facet_mask(u), np.inf, 0.0)
    else:
        radius = body.radii_of_curvature(u)
    with np.errstate(divide="ignore"):
        gk = np.where(radius > 0, 1.0 / np.where(radius > 0, radius, 1.0), np.inf)
    gk = np.where(np.isinf(radius), 0.0, gk)
    return {"direction": u, "support": h, "point": x, "normal": u,
            "gauss_kronecker": gk, "support_distance": np.sum(x * u, axis=1)}


def boundary_eval(body: ConvexBody, u) -> BoundaryEvaluation:
    """Boundary point, normal and Gauss-Kronecker curvature at direction u.

    Raises FlatPoint when the curvature is below 1e-12.
    """
    data = boundary_eval_many(body, u)
    gk = float(data["gauss_kronecker"][0])
    if gk < FLAT_TOL:
        raise FlatPoint(f"curvature {gk:.3e} below {FLAT_TOL} at u = {data['direction'][0]}")
    return BoundaryEvaluation(
        direction=data["direction"][0], support=float(data["support"][0]),
        point=data["point"][0], normal=data["normal"][0], gauss_kronecker=gk,
        support_distance=float(data["support_distance"][0]))


def _golden_max(f, lo, hi, tol=1e-13, max_iter=200):
    """Golden-section search for the maximum of a unimodal scalar function."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def polar_support_numeric(body: ConvexBody, v, n_scan: int = 720) -> float:
    """h_{K°}(v) = max_u (v . u) / h_K(u) by grid scan and golden-section refinement."""
    v = _as_dirs(v)[0]
    if body.dim == 2:
        th = 2 * np.pi * np.arange(n_scan) / n_scan
        u = np.column_stack([np.cos(th), np.sin(th)])
        vals = (u @ v) / body.h(u)
        k = int(np.argmax(vals))
        step = 2 * np.pi / n_scan

        def f(t):
            w = np.array([[math.cos(t), math.sin(t)]])
            return float(w[0] @ v / body.h(w)[0])

        _, best = _golden_max(f, th[k] - step, th[k] + step)
        return max(best, float(vals[k]))
    grid = make_grid(3, max(16, int(math.sqrt(n_scan))))
    vals = (grid.nodes @ v) / body.h(grid.nodes)
    k = int(np.argmax(vals))
    x0 = grid.nodes[k]
    theta, phi = math.acos(np.clip(x0[2], -1, 1)), math.atan2(x0[1], x0[0])

    def sph(t, p):
        return np.array([[math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)]])

    span = math.pi / grid.resolution
    best = float(vals[k])
    for _ in range(4):
        theta, best = _golden_max(lambda t: float(sph(t, phi)[0] @ v / body.h(sph(t, phi))[0]),
                                  theta - span, theta + span)
        phi, best = _golden_max(lambda p: float(sph(theta, p)[0] @ v / body.h(sph(theta, p))[0]),
                                phi - span, phi + span)
        span *= 0.5
    return max(best, float(vals[k]))


def polar_support(body: ConvexBody, v) -> float:
    """Support function of the polar body, h_{K°}(v) = gauge_K(v).

    The gauge is exact for every family; SupportGrid bodies use the numeric
    scan-and-refine maximisation instead.
    """
    if isinstance(body, SupportGrid):
        return polar_support_numeric(body, v)
    return float(body.gauge(_as_dirs(v))[0])


def polar_point(body: ConvexBody, u) -> np.ndarray:
    """x° = n / (x . n) for the boundary point x with outer normal u."""
    u = _as_dirs(u)
    x = body.grad(u)[0]
    c = float(x @ u[0])
    if c <= 0:
        raise OriginNotInterior(f"support distance {c} is not positive")
    return u[0] / c


def polar_body(body: ConvexBody, n: int = 4096) -> ConvexBody:
    """Exact polar where the family allows it, else a sampled SupportGrid."""
    exact = body.polar()
    if exact is not None:
        return exact
    if body.dim != 2:
        raise InvalidBody("numeric polar bodies are implemented for d = 2 only")
    th = 2 * np.pi * np.arange(n) / n
    u = np.column_stack([np.cos(th), np.sin(th)])
    if isinstance(body, SupportGrid):
        vals = np.array([polar_support_numeric(body, ui) for ui in u])
    else:
        vals = body.gauge(u)
    return SupportGrid(th, vals)


def hausdorff_distance(a: ConvexBody, b: ConvexBody, grid: QuadratureGrid | None = None) -> float:
    """max over grid directions of |h_a - h_b|."""
    if a.dim != b.dim:
        raise InvalidBody("bodies differ in dimension")
    grid = grid or make_grid(a.dim, 4096 if a.dim == 2 else 64)
    return float(np.max(np.abs(a.h(grid.nodes) - b.h(grid.nodes))))


def validate_body(body: ConvexBody, grid: QuadratureGrid | None = None) -> None:
    """Raise if the origin is not interior on the grid or the data is degenerate."""
    grid = grid or make_grid(body.dim, 1024 if body.dim == 2 else 32)
    h = body.h(grid.nodes)
    if not np.all(np.isfinite(h)):
        raise UnboundedBody("support is not finite on the grid")
    if np.any(h <= 0):
        raise OriginNotInterior("support is not strictly positive on the grid")


# ----------------------------------------------------------------------------
# JSON round trip
# ----------------------------------------------------------------------------

def body_to_json(body: ConvexBody) -> dict:
    if isinstance(body, Disk):
        return {"kind": "disk", "radius": body.radius, "dim": body.dim}
    if isinstance(body, Ellipse):
        return {"kind": "ellipse", "a": body.a, "b": body.b}
    if isinstance(body, Ellipsoid):
        return {"kind": "ellipsoid", "a": body.a, "b": body.b, "c": body.c}
    if isinstance(body, PNormBall):
        return {"kind": "pnorm", "p": body.p, "scale": body.scale, "dim": body.dim}
    if isinstance(body, Polytope):
        return {"kind": "polytope",
                "halfspaces": [{"normal": n.tolist(), "offset": float(t)}
                               for n, t in zip(body.normals, body.offsets)]}
    if isinstance(body, LinearImage):
        out = {"kind": "linear_image", "matrix": body.matrix.tolist(), "base": body_to_json(body.base)}
        if body.offset is not None:
            out["offset"] = body.offset.tolist()
        return out
    if isinstance(body, SupportGrid):
        return {"kind": "support_grid", "angles": body.angles.tolist(), "values": body.values.tolist()}
    raise InvalidBody(f"cannot serialise {type(body).__name__}")


_FIELDS = {
    "disk": {"radius", "dim"},
    "ellipse": {"a", "b"},
    "ellipsoid": {"a", "b", "c"},
    "pnorm": {"p", "scale", "dim"},
    "polytope": {"halfspaces"},
    "linear_image": {"matrix", "base", "offset"},
    "support_grid": {"angles", "values"},
}


def body_from_json(obj: dict) -> ConvexBody:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidBody("body must be a JSON object with a 'kind' field")
    kind = obj["kind"]
    if kind not in _FIELDS:
        raise InvalidBody(f"unknown body kind {kind!r}")
    extra = set(obj) - _FIELDS[kind] - {"kind"}
    if extra:
        raise InvalidBody(f"unknown fields for {kind}: {sorted(extra)}")
    try:
        if kind == "disk":
            return Disk(float(obj["radius"]), int(obj.get("dim", 2)))
        if kind == "ellipse":
            return Ellipse(float(obj["a"]), float(obj["b"]))
        if kind == "ellipsoid":
            return Ellipsoid(float(obj["a"]), float(obj["b"]), float(obj["c"]))
        if kind == "pnorm":
            return PNormBall(float(obj["p"]), float(obj.get("scale", 1.0)), int(obj.get("dim", 2)))
        if kind == "polytope":
            hs = obj["halfspaces"]
            return Polytope(np.array([h["normal"] for h in hs], dtype=float),
                            np.array([h["offset"] for h in hs], dtype=float))
        if kind == "linear_image":
            return LinearImage(np.array(obj["matrix"], dtype=float), body_from_json(obj["base"]),
                               None if obj.get("offset") is None else np.array(obj["offset"], dtype=float))
        return SupportGrid(np.array(obj["angles"], dtype=float), np.array(obj["values"], dtype=float))
    except KeyError as exc:
        raise InvalidBody(f"missing field {exc} for body kind {kind}") from exc
