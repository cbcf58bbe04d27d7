import math

import numpy as np
import pytest

from soboheat import geometry as geo


def test_make_chart_rejects_unknown_model():
    with pytest.raises(geo.DomainError):
        geo.make_chart("klein-bottle")


def test_euclidean_metric_is_identity():
    chart = geo.make_chart("euclidean", n=3)
    pts = chart.box_grid(3).reshape(-1, 3)
    g = chart.metric(pts)
    assert np.allclose(g, np.eye(3))
    assert np.allclose(geo.christoffel(chart, pts), 0.0)
    assert np.allclose(geo.ricci(chart, pts), 0.0)


def test_halfplane_christoffel_closed_form():
    chart = geo.make_chart("hyperbolic-halfplane")
    x = np.array([[0.0, 1.0]])
    gamma = geo.christoffel(chart, x)[0]
    # upper half-plane at y=1: G^x_xy = G^x_yx = -1, G^y_xx = 1, G^y_yy = -1
    assert gamma[0, 0, 1] == pytest.approx(-1.0)
    assert gamma[0, 1, 0] == pytest.approx(-1.0)
    assert gamma[1, 0, 0] == pytest.approx(1.0)
    assert gamma[1, 1, 1] == pytest.approx(-1.0)
    assert gamma[0, 0, 0] == pytest.approx(0.0)


def test_halfplane_ricci_is_minus_metric():
    chart = geo.make_chart("hyperbolic-halfplane")
    pts = np.array([[0.3, 0.8], [-1.0, 2.0], [0.0, 1.0]])
    ric = geo.ricci(chart, pts)
    g = chart.metric(pts)
    assert np.allclose(ric, -g, atol=1e-10)


def test_poincare_ball_curvature_minus_one():
    chart = geo.make_chart("hyperbolic-ball")
    pts = np.array([[0.0, 0.0], [0.2, 0.1], [-0.3, 0.25]])
    ric = geo.ricci(chart, pts)
    g = chart.metric(pts)
    assert np.allclose(ric, -g, atol=1e-9)


def test_halfplane_distance_closed_form():
    chart = geo.make_chart("hyperbolic-halfplane")
    # vertical segment: d((0, a), (0, b)) = |log(b/a)|
    d = chart.distance(np.array([[0.0, 1.0]]), np.array([[0.0, 2.0]]))
    assert d[0] == pytest.approx(math.log(2.0), rel=1e-12)


def test_poincare_ball_distance_from_origin():
    chart = geo.make_chart("hyperbolic-ball")
    rho = 0.4
    d = chart.distance(np.array([[0.0, 0.0]]), np.array([[rho, 0.0]]))
    assert d[0] == pytest.approx(2.0 * math.atanh(rho), rel=1e-12)


def test_torus_distance_wraps():
    chart = geo.make_chart("flat-torus", n=2, L=4.0)
    d = chart.distance(np.array([[0.1, 0.0]]), np.array([[3.9, 0.0]]))
    assert d[0] == pytest.approx(0.2, rel=1e-12)


def test_perturbed_distance_between_flat_and_stretched():
    # f = 1 + a sin(x1) <= 1 + a, so chord length sits between the flat
    # distance and sqrt(1 + a) times it
    chart = geo.make_chart("perturbed-euclidean", a=0.1)
    x = np.array([[2.0, 2.0]])
    y = np.array([[2.6, 2.8]])
    flat = np.linalg.norm(y - x)
    d = chart.distance(x, y)[0]
    assert flat * math.sqrt(0.9) <= d <= flat * math.sqrt(1.1)


def test_conformal_derivative_matches_finite_difference():
    chart = geo.make_chart("perturbed-euclidean", a=0.1)
    x = np.array([[3.0, 4.0]])
    h = 1e-6
    for axis in range(2):
        beta = tuple(1 if i == axis else 0 for i in range(2))
        step = np.zeros(2)
        step[axis] = h
        fd = (chart.conformal_factor(x + step) - chart.conformal_factor(x - step)) / (2 * h)
        assert chart.conformal_derivative(x, beta)[0] == pytest.approx(fd[0], abs=1e-6)


def test_volume_of_unit_disc():
    chart = geo.make_chart("euclidean", n=2)
    vol = geo.volume_of_ball(chart, np.array([5.0, 5.0]), 1.0)
    assert vol == pytest.approx(math.pi, abs=5e-4)


def test_volume_hyperbolic_disc():
    # area of a hyperbolic disc of radius R is 2 pi (cosh R - 1)
    chart = geo.make_chart("hyperbolic-halfplane")
    R = 0.2
    vol = geo.volume_of_ball(chart, np.array([0.0, 1.0]), R)
    assert vol == pytest.approx(2 * math.pi * (math.cosh(R) - 1), rel=1e-3)


def test_volume_3d_ball():
    chart = geo.make_chart("euclidean", n=3)
    vol = geo.volume_of_ball(chart, np.array([5.0, 5.0, 5.0]), 0.8,
                             quadrature_resolution=128)
    assert vol == pytest.approx(4.0 / 3.0 * math.pi * 0.8**3, rel=1e-3)


def test_ball_fits_domain():
    chart = geo.make_chart("euclidean", n=2)
    assert geo.ball_fits_domain(chart, np.array([5.0, 5.0]), 4.9)
    assert not geo.ball_fits_domain(chart, np.array([5.0, 5.0]), 5.1)
    hp = geo.make_chart("hyperbolic-halfplane")
    # from (0,1): the domain floor y=0.25 is at distance log(4) ~ 1.386
    assert geo.ball_fits_domain(hp, np.array([0.0, 1.0]), 1.3)
    assert not geo.ball_fits_domain(hp, np.array([0.0, 1.0]), 1.45)


def test_cmt_bound_zero_on_flat_space():
    chart = geo.make_chart("euclidean", n=2)
    rep = geo.cmt_bound_check(chart, np.array([5.0, 5.0]), 1.0, m=2)
    assert rep["witness_constant"] == pytest.approx(0.0, abs=1e-12)
    assert rep["holds"]


def test_cmt_bound_holds_on_halfplane():
    chart = geo.make_chart("hyperbolic-halfplane")
    rep = geo.cmt_bound_check(chart, np.array([0.0, 1.0]), 0.3, m=3)
    assert rep["holds"]
    assert rep["witness_constant"] > 0


def test_injectivity_lower_bound_flat_case():
    # equal volumes: bound is r/2
    assert geo.cgt_injectivity_lower_bound(1.0, math.pi, math.pi) == pytest.approx(0.5)
    with pytest.raises(geo.DomainError):
        geo.cgt_injectivity_lower_bound(1.0, 0.0, math.pi)


def test_ricci_sup_norm_hyperbolic_is_unit():
    # Rc = -g, so the g-operator norm of Ricci is exactly 1
    chart = geo.make_chart("hyperbolic-ball")
    pts = np.array([[0.0, 0.0], [0.3, -0.2]])
    assert geo.ricci_sup_norm(chart, pts) == pytest.approx(1.0, rel=1e-8)


def test_multi_indices_counts():
    # number of multi-indices of order k in n variables is C(n+k-1, k)
    assert len(geo.multi_indices(2, 2)) == 3
    assert len(geo.multi_indices(3, 2)) == 6
    assert len(geo.multi_indices_up_to(2, 3)) == 2 + 3 + 4
