from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floatlab.bodies import (Direction, Disk, Ellipse, Ellipsoid, LinearImage, PNormBall, Polytope, SupportGrid,
                             body_from_json, body_to_json, boundary_eval, boundary_eval_many, halfspace_intersection,
                             hausdorff_distance, make_grid, polar_body, polar_point, polar_support,
                             polar_support_numeric, support, validate_body)
from floatlab.errors import EmptyBody, FlatPoint, InvalidBody, OriginNotInterior, UnboundedBody

AXES = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)


def square():
    return halfspace_intersection(AXES, np.ones(4))


def test_direction_normalisation():
    with pytest.raises(InvalidBody):
        Direction(np.array([1.0, 1.0]))
    Direction(np.array([0.6, 0.8]))


@pytest.mark.parametrize("dim,n,total", [(2, 256, 2 * math.pi), (3, 16, 4 * math.pi)])
def test_grid_weights(dim, n, total):
    g = make_grid(dim, n)
    assert g.weights.sum() == pytest.approx(total, rel=1e-10)
    assert np.allclose(np.linalg.norm(g.nodes, axis=1), 1.0, atol=1e-12)


def test_support_examples():
    assert support(Disk(2.0), [0.28, 0.96]) == pytest.approx(2.0)
    assert support(Ellipse(2, 1), [1, 0]) == pytest.approx(2.0)
    assert support(PNormBall(2.0), [0.6, 0.8]) == pytest.approx(1.0, abs=1e-15)


def test_boundary_eval_examples():
    b = boundary_eval(Disk(3.0), [0, 1])
    assert np.allclose(b.point, [0, 3]) and b.gauss_kronecker == pytest.approx(1 / 3)
    e = boundary_eval(Ellipse(2, 1), [1, 0])
    assert np.allclose(e.point, [2, 0]) and e.gauss_kronecker == pytest.approx(2.0)
    with pytest.raises(FlatPoint):
        boundary_eval(PNormBall(4.0), [1, 0])


def test_ellipse_vertex_curvature_by_finite_difference():
    ell = Ellipse(2, 1)
    s = 1e-4
    th = np.array([-s, 0.0, s])
    h = ell.h(np.column_stack([np.cos(th), np.sin(th)]))
    h_plus_hpp = h[1] + (h[0] - 2 * h[1] + h[2]) / s ** 2
    assert 1 / h_plus_hpp == pytest.approx(2.0, rel=1e-6)


def test_pnorm_flat_point_taylor():
    # |x|^4 + |y|^4 = 1 near (1, 0): x = 1 - y^4/4, curvature 3 y^2, normal angle y^3,
    # hence H = 3 theta^{2/3} -> 0
    b = PNormBall(4.0)
    th = np.array([1e-3, 1e-4])
    gk = 1 / b.radii_of_curvature(np.column_stack([np.cos(th), np.sin(th)]))
    assert np.allclose(gk, 3 * th ** (2 / 3), rtol=1e-2)


def test_polar_support_examples():
    assert polar_support(Disk(2.0), [0.6, 0.8]) == pytest.approx(0.5)
    assert polar_support(square(), [1, 0]) == pytest.approx(1.0)
    assert polar_support(Ellipse(2, 1), [0, 1]) == pytest.approx(1.0)
    # maximisation oracle: max_u (v.u)/h(u)
    th = np.linspace(0, 2 * np.pi, 200001)
    u = np.column_stack([np.cos(th), np.sin(th)])
    v = np.array([0.6, 0.8])
    assert polar_support(Ellipse(2, 1), v) == pytest.approx(np.max(u @ v / Ellipse(2, 1).h(u)), rel=1e-9)


def test_polar_point():
    assert np.allclose(polar_point(Disk(2.0), [1, 0]), [0.5, 0])
    assert np.allclose(polar_point(Ellipse(2, 1), [1, 0]), [0.5, 0])
    ell = Ellipse(2, 1)
    for t in np.linspace(0, 2 * np.pi, 7):
        u = np.array([math.cos(t), math.sin(t)])
        xo = polar_point(ell, u)
        r = np.linalg.norm(xo)
        assert ell.polar().gauge(xo[None])[0] == pytest.approx(1.0, abs=1e-8)
        assert r == pytest.approx(1 / ell.h(u[None])[0], rel=1e-12)


def test_halfspace_intersection_examples():
    sq = square()
    assert sq.area() == pytest.approx(4.0)
    n = 360
    th = 2 * np.pi * np.arange(n) / n
    p = halfspace_intersection(np.column_stack([np.cos(th), np.sin(th)]), np.ones(n))
    assert p.area() == pytest.approx(n * math.tan(math.pi / n), rel=1e-12)
    assert abs(p.area() - math.pi) < 1e-3
    with pytest.raises(UnboundedBody):
        halfspace_intersection(AXES[[0, 2]], np.ones(2))
    with pytest.raises(EmptyBody):
        halfspace_intersection(np.vstack([AXES, [[1.0, 0.0]]]), np.array([1.0, 1, 1, 1, -2]))


def test_polytope_canonical_vertices():
    v = square().vertices
    perm = halfspace_intersection(AXES[[2, 0, 3, 1]], np.ones(4)).vertices
    assert np.array_equal(v, perm)


def test_halfspace_intersection_3d_cube():
    n = np.vstack([np.eye(3), -np.eye(3)])
    cube = halfspace_intersection(n, np.ones(6))
    assert len(cube.vertices) == 8
    g = make_grid(3, 12)
    assert np.allclose(cube.h(g.nodes), np.abs(g.nodes).sum(axis=1))


def test_hausdorff_examples():
    assert hausdorff_distance(Disk(1.0), Disk(2.0)) == pytest.approx(1.0)
    assert hausdorff_distance(Ellipse(2, 1), Ellipse(2, 1)) == 0.0
    assert hausdorff_distance(square(), Disk(1.0)) == pytest.approx(math.sqrt(2) - 1, rel=1e-9)


@pytest.mark.parametrize("body", [Disk(1.5), Ellipse(2, 1), square(), PNormBall(3.0)])
def test_polar_involution(body):
    g = make_grid(2, 720)
    twice = polar_body(polar_body(body))
    assert np.max(np.abs(twice.h(g.nodes) - body.h(g.nodes))) < 1e-6


def test_numeric_polar_matches_exact():
    ell = Ellipse(2, 1)
    grid_body = SupportGrid(2 * np.pi * np.arange(2048) / 2048, ell.h(make_grid(2, 2048).nodes))
    for v in ([1, 0], [0.6, 0.8], [0, -1]):
        assert polar_support_numeric(grid_body, v) == pytest.approx(polar_support(ell, v), rel=1e-7)


def test_linear_image_support_and_equivariance():
    a = np.array([[2.0, 1.0], [0.5, 1.5]])
    img = LinearImage(a, Disk(1.0))
    g = make_grid(2, 64)
    assert np.allclose(img.h(g.nodes), np.linalg.norm(g.nodes @ a, axis=1), atol=1e-14)
    with pytest.raises(InvalidBody):
        LinearImage(np.array([[1.0, 2.0], [2.0, 4.0]]), Disk(1.0))


def test_boundary_point_on_support_line():
    g = make_grid(2, 97)
    for body in (Ellipse(2, 1), PNormBall(3.0), LinearImage(np.array([[1.0, 0.3], [0, 1]]), Ellipse(1.2, 0.7))):
        data = boundary_eval_many(body, g.nodes)
        assert np.max(np.abs(np.sum(data["point"] * g.nodes, axis=1) - body.h(g.nodes))) < 1e-9
    g3 = make_grid(3, 10)
    e3 = Ellipsoid(1.0, 2.0, 0.5)
    assert np.max(np.abs(np.sum(e3.grad(g3.nodes) * g3.nodes, axis=1) - e3.h(g3.nodes))) < 1e-12


def test_sampled_hull_reproduces_support():
    body = Ellipse(2, 1)
    errs = []
    for n in (64, 128):
        g = make_grid(2, n)
        hull = halfspace_intersection(g.nodes, body.h(g.nodes))
        fine = make_grid(2, 4096)
        errs.append(np.max(hull.h(fine.nodes) - body.h(fine.nodes)))
    assert errs[0] > 0 and errs[1] > 0
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)   # O(N^-2)


def test_validation_errors():
    with pytest.raises(OriginNotInterior):
        validate_body(LinearImage(np.eye(2), Disk(1.0), np.array([2.0, 0.0])))
    with pytest.raises(InvalidBody):
        PNormBall(1.0)


@pytest.mark.parametrize("body", [Disk(1.5), Ellipse(2, 1), Ellipsoid(1, 2, 3), PNormBall(3.0, 2.0), square(),
                                  LinearImage(np.array([[1.0, 0.2], [0, 1]]), Ellipse(1, 2), np.array([0.1, 0])),
                                  SupportGrid(np.linspace(0, 6, 40), np.full(40, 1.0))])
def test_json_round_trip(body):
    again = body_from_json(body_to_json(body))
    assert body_to_json(again) == body_to_json(body)


def test_json_rejects_unknown_fields():
    with pytest.raises(InvalidBody):
        body_from_json({"kind": "disk", "radius": 1, "colour": "red"})
    with pytest.raises(InvalidBody):
        body_from_json({"kind": "blob"})


@given(a=st.floats(0.3, 3.0), b=st.floats(0.3, 3.0), t=st.floats(0, 2 * math.pi), s=st.floats(0, 2 * math.pi),
       lam=st.floats(0, 1))
@settings(max_examples=80, deadline=None)
def test_support_sublinear(a, b, t, s, lam):
    body = Ellipse(a, b)
    u = np.array([math.cos(t), math.sin(t)])
    v = np.array([math.cos(s), math.sin(s)])
    w = lam * u + (1 - lam) * v
    hw = np.linalg.norm(w) * body.h((w / np.linalg.norm(w))[None])[0] if np.linalg.norm(w) > 1e-9 else 0.0
    assert hw <= lam * body.h(u[None])[0] + (1 - lam) * body.h(v[None])[0] + 1e-12


@given(m=st.lists(st.floats(-2, 2), min_size=4, max_size=4), t=st.floats(0, 2 * math.pi))
@settings(max_examples=60, deadline=None)
def test_linear_equivariance_exact(m, t):
    a = np.array(m).reshape(2, 2)
    if abs(np.linalg.det(a)) < 0.1:
        return
    u = np.array([[math.cos(t), math.sin(t)]])
    img = LinearImage(a, Ellipse(2, 1))
    at_u = u @ a
    expected = np.linalg.norm(at_u) * Ellipse(2, 1).h(at_u / np.linalg.norm(at_u))[0]
    assert img.h(u)[0] == pytest.approx(expected, rel=1e-13)
