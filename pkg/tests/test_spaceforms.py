from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from floatlab.bodies import Disk, Ellipse, make_grid
from floatlab.errors import ChartOverflow, DomainError, EPolarDomainError, PoleError
from floatlab.floating import conjugated_floating
from floatlab.functionals import as_p, o_minus
from floatlab.measures import chart_density, weighted_volume
from floatlab.oracles import geodesic_ball_volume, omega_s_ball
from floatlab.spaceforms import (ChartBody, SpaceFormChart, R_lambda, chart_dual, conjugated_floating_spaceform,
                                 e_polar, floating_area, geodesic_ball_chart_radius, intrinsic_curvature,
                                 intrinsic_floating_body, intrinsic_surface_element, omega_dual,
                                 omega_dual_dual_side, omega_lambda_e, recenter, tan_lambda)

G = make_grid(2, 2048)


def cb(lam, body, dual=False):
    return ChartBody(SpaceFormChart(lam, dual), body)


def test_tan_lambda():
    assert tan_lambda(1.0, math.pi / 4) == pytest.approx(1.0, rel=1e-15)
    assert tan_lambda(1e-8, 0.7) == pytest.approx(0.7, abs=1e-7)
    assert tan_lambda(-1.0, 0.5) == pytest.approx(math.tanh(0.5), rel=1e-15)


def test_r_lambda():
    r = R_lambda(-0.5)
    assert r == pytest.approx(math.atanh(0.5) / math.sqrt(0.5), rel=1e-14)
    root = brentq(lambda s: tan_lambda(-0.5, s) - math.sqrt(0.5), 1e-6, 5, xtol=1e-15)
    assert r == pytest.approx(root, rel=1e-12)
    with pytest.raises(PoleError):
        R_lambda(-1.0)


def test_chart_domain_checks():
    with pytest.raises(ChartOverflow):
        cb(-1.0, Disk(1.2))
    with pytest.raises(ChartOverflow):
        cb(-1.0, Disk(0.5), dual=True)
    cb(-1.0, Disk(2.0), dual=True)


def test_chart_dual_examples():
    s = 0.8
    d = chart_dual(cb(-1.0, Disk(math.tanh(s))))
    assert d.chart.dual and d.chart.lam == -1.0
    assert np.allclose(d.body.h(G.nodes), 1 / math.tanh(s), rtol=1e-13)
    a = 0.6
    d = chart_dual(cb(1.0, Disk(math.tan(a))))
    assert np.allclose(d.body.h(G.nodes), 1 / math.tan(a), rtol=1e-13)
    with pytest.raises(DomainError):
        chart_dual(cb(0.0, Disk(1.0)))


@pytest.mark.parametrize("lam,body", [(0.5, Ellipse(1.5, 0.8)), (-1.0, Ellipse(0.7, 0.4)),
                                      (2.0, Ellipse(0.6, 0.3))])
def test_chart_dual_involution(lam, body):
    twice = chart_dual(chart_dual(cb(lam, body)))
    assert twice.chart.lam == lam and not twice.chart.dual
    assert np.max(np.abs(twice.body.h(G.nodes) - body.h(G.nodes))) < 1e-8


def test_e_polar():
    p = e_polar(cb(-0.5, Disk(0.8)))
    assert np.allclose(p.body.h(G.nodes), 1.25, rtol=1e-13)
    assert 1.25 < p.chart.horizon
    with pytest.raises(EPolarDomainError):
        e_polar(cb(-0.5, Disk(0.6)))
    with pytest.raises(EPolarDomainError):
        e_polar(cb(-1.0, Disk(0.5)))
    body = Ellipse(1.5, 0.8)
    twice = e_polar(e_polar(cb(0.5, body)))
    assert np.max(np.abs(twice.body.h(G.nodes) - body.h(G.nodes))) < 1e-8


def test_recentering_independence():
    c = cb(1.0, Ellipse(0.6, 0.4))
    moved = recenter(c, [0.1, 0.05])
    a = omega_dual(c)
    assert omega_dual(moved) == pytest.approx(a, abs=1e-5)
    a_e = omega_dual(e_polar(c))
    b_e = omega_dual(e_polar(moved))
    assert a_e == pytest.approx(b_e, abs=1e-5)


def test_intrinsic_curvature_centred_disks():
    for lam in (1.0, -1.0, 0.5, -0.25, 0.0):
        rho = 0.7
        assert np.allclose(intrinsic_curvature(cb(lam, Disk(rho)), G.nodes[:8]), 1 / rho, rtol=1e-13)
    a = 0.6
    # spherical circle of radius a has geodesic curvature cot a; chart radius tan a
    assert np.allclose(intrinsic_curvature(cb(1.0, Disk(math.tan(a))), G.nodes[:4]) * math.tan(a), 1.0)


def test_intrinsic_surface_element_totals():
    a = 0.6
    for lam, rho, total in ((1.0, math.tan(a), 2 * math.pi * math.sin(a)),
                            (-1.0, math.tanh(a), 2 * math.pi * math.sinh(a)),
                            (0.0, 1.3, 2 * math.pi * 1.3)):
        el = intrinsic_surface_element(cb(lam, Disk(rho)), G.nodes)
        assert np.sum(el * rho * G.weights) == pytest.approx(total, rel=1e-13)


def test_curvature_duality_product():
    lam = 0.5
    body = Ellipse(1.5, 0.8)
    c = cb(lam, body)
    dual = chart_dual(c)
    u = G.nodes[::16]
    x = body.grad(u)
    u_star = -x / np.linalg.norm(x, axis=1, keepdims=True)   # normal of -K° at -x°
    prod = intrinsic_curvature(c, u) * intrinsic_curvature(dual, u_star)
    assert np.max(np.abs(prod - 1)) < 1e-6


def test_floating_area_examples():
    body = Ellipse(2.0, 1.0)
    assert floating_area(cb(0.0, body)) == pytest.approx(as_p(body, 1.0), rel=1e-8)
    a = 0.6
    assert floating_area(cb(1.0, Disk(math.tan(a)))) == pytest.approx(
        (1 / math.tan(a)) ** (1 / 3) * 2 * math.pi * math.sin(a), rel=1e-12)
    s = 1.0
    assert floating_area(cb(-1.0, Disk(math.tanh(s)))) == pytest.approx(
        (1 / math.tanh(s)) ** (1 / 3) * 2 * math.pi * math.sinh(s), rel=1e-12)


@pytest.mark.parametrize("alpha", [math.pi / 6, math.pi / 4, math.pi / 3])
def test_omega_dual_sphere_balls(alpha):
    c = cb(1.0, Disk(math.tan(alpha)))
    assert omega_dual(c) == pytest.approx(omega_s_ball(2, alpha), rel=1e-6)
    assert omega_dual_dual_side(c) == pytest.approx(omega_dual(c), rel=1e-6)


def test_omega_dual_blows_up_near_equator():
    vals = [omega_dual(cb(1.0, Disk(math.tan(math.pi / 2 - e)))) for e in (1e-1, 1e-2, 1e-3)]
    assert vals[0] < vals[1] < vals[2] and vals[2] > 1e3 / 100
    # closed form grows like (cos a)^{-1/3}; confirm the trend matches
    assert vals[2] == pytest.approx(omega_s_ball(2, math.pi / 2 - 1e-3), rel=1e-6)


@pytest.mark.parametrize("lam,body", [(-1.0, Disk(math.tanh(1.0))), (-1.0, Ellipse(0.7, 0.4)),
                                      (0.5, Ellipse(1.5, 0.8)), (-0.25, Ellipse(1.5, 0.8))])
def test_dual_side_formula(lam, body):
    c = cb(lam, body)
    assert omega_dual_dual_side(c) == pytest.approx(omega_dual(c), rel=1e-6)


def test_dual_side_scaling_on_disks():
    # chart lam, Disk{rho}: H = 1/rho, boundary measure 2 pi rho / sqrt(1 + lam rho^2)
    rho = 0.8
    for lam in (0.5, -0.25, 3.0):
        primal = rho ** (1 / 3) * 2 * math.pi * rho / math.sqrt(1 + lam * rho * rho)
        c = cb(lam, Disk(rho))
        assert omega_dual(c) == pytest.approx(primal, rel=1e-12)
        assert omega_dual_dual_side(c) == pytest.approx(primal, rel=1e-12)


def test_omega_lambda_e():
    body = Ellipse(2.0, 1.0)
    assert omega_lambda_e(cb(1.0, body)) == pytest.approx(omega_dual(cb(1.0, body)), rel=1e-9)
    small = Ellipse(0.9, 0.5)
    assert omega_lambda_e(cb(-1.0, small)) == pytest.approx(omega_dual(cb(-1.0, small)), rel=1e-9)
    with pytest.raises(EPolarDomainError):
        omega_lambda_e(cb(-0.5, Ellipse(0.6, 0.5)))
    target = 4 ** (1 / 3) * 4 * math.pi
    assert omega_lambda_e(cb(1e-4, body)) == pytest.approx(target, rel=1e-3)
    rho, lam = 0.8, 0.5
    f = math.sqrt(abs((lam + rho ** 2) / (1 + lam * rho ** 2)))
    # constant H^lam = 1/rho, surface 2 pi rho * element
    el = intrinsic_surface_element(cb(lam, Disk(rho)), G.nodes[:1])[0]
    expected = (1 / rho / f ** 3) ** (-1 / 3) * f * el * 2 * math.pi * rho
    assert omega_lambda_e(cb(lam, Disk(rho))) == pytest.approx(expected, rel=1e-12)


def test_lambda_continuity_near_zero():
    body = Ellipse(2.0, 1.0)
    fa0, om0 = as_p(body, 1.0), o_minus(body)
    for lam in (1e-6, -1e-6):
        c = cb(lam, body)
        assert floating_area(c) == pytest.approx(fa0, rel=1e-4)
        assert omega_dual(c) == pytest.approx(om0, rel=1e-4)


@pytest.mark.parametrize("lam", [1.0, -1.0, 0.5, -0.25])
def test_intrinsic_volume_consistency(lam):
    alpha = 0.6
    rho = tan_lambda(lam, alpha)
    assert geodesic_ball_chart_radius(lam, alpha) == pytest.approx(rho, rel=1e-15)
    v = weighted_volume(Disk(rho), chart_density(lam))
    assert v == pytest.approx(geodesic_ball_volume(2, lam, alpha), abs=10 * 1e-10)
    v3 = weighted_volume(Disk(rho, dim=3), chart_density(lam))
    assert v3 == pytest.approx(geodesic_ball_volume(3, lam, alpha), abs=10 * 1e-8)


def test_conjugated_floating_spaceform_disk():
    s = 1.0
    c = cb(-1.0, Disk(math.tanh(s)))
    assert conjugated_floating_spaceform(c, 0.0, G) is c
    res = conjugated_floating_spaceform(c, 1e-3, G)
    r = res.body.h(G.nodes)
    assert np.max(r) - np.min(r) < 1e-8 * np.max(r) + 1e-6      # centred disk up to the polygon ripple
    assert np.min(r - math.tanh(s)) > 0
    # radius from the 1D root on the de Sitter side: the polar cap of Disk{coth s}
    polar_fl = conjugated_floating(Disk(math.tanh(s)), chart_density(-1.0), 1e-3, G).polar_floating
    h_delta = polar_fl.profile.heights[0]
    from floatlab.measures import weighted_cap_volume
    coth = 1 / math.tanh(s)
    assert weighted_cap_volume(Disk(coth), chart_density(-1.0), [1, 0], coth - h_delta) == pytest.approx(
        1e-3, rel=1e-9)


def test_intrinsic_floating_body_sphere():
    alpha = 0.5
    res = intrinsic_floating_body(cb(1.0, Disk(math.tan(alpha))), 1e-3, G)
    assert res.all_tangent
