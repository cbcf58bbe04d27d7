import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soboheat import norms
from soboheat.geometry import CapabilityError, DomainError, make_chart


def torus_grid(nx=64, L=2 * math.pi):
    chart = make_chart("flat-torus", n=2, L=L)
    return norms.Grid.over_box(chart, [(0, L), (0, L)], nx)


def euclid_grid(nx=65):
    chart = make_chart("euclidean", n=2)
    return norms.Grid.over_box(chart, [(3.0, 7.0), (3.0, 7.0)], nx)


def test_quadrature_total_mass():
    grid = euclid_grid(33)
    assert float(np.sum(grid.quadrature)) == pytest.approx(16.0, rel=1e-12)
    tg = torus_grid(32)
    assert float(np.sum(tg.quadrature)) == pytest.approx((2 * math.pi) ** 2, rel=1e-12)


def test_l2_norm_of_sine_closed_form():
    grid = torus_grid(64)
    u = norms.DiscreteField(grid, np.sin(grid.points[..., 0]))
    val = norms.lebesgue_norm(u, 2.0)
    assert val == pytest.approx(math.sqrt(2 * math.pi**2), rel=1e-6)


def test_first_order_norm_closed_form():
    # |grad sin x1| = |cos x1|: the order <= 1 norm is twice the L2 norm
    grid = torus_grid(64)
    u = norms.DiscreteField(grid, np.sin(grid.points[..., 0]))
    val = norms.sobolev_norm(u, norms.NormRequest(r=2.0, l=1))
    assert val == pytest.approx(2 * math.sqrt(2 * math.pi**2), rel=2e-3)


def test_quadrature_order_two_on_periodic_grid():
    exact = math.sqrt(2 * math.pi**2)
    errs = []
    for nx in (16, 32):
        grid = torus_grid(nx)
        u = norms.DiscreteField(grid, np.sin(grid.points[..., 0]))
        errs.append(abs(norms.sobolev_norm(u, norms.NormRequest(l=1)) - 2 * exact))
    assert math.log2(errs[0] / errs[1]) >= 1.8


def test_norm_homogeneity_and_triangle():
    grid = euclid_grid(33)
    rng = np.random.default_rng(7)
    a = norms.DiscreteField(grid, rng.standard_normal(grid.shape))
    b = norms.DiscreteField(grid, rng.standard_normal(grid.shape))
    req = norms.NormRequest(r=3.0, l=1)
    na = norms.sobolev_norm(a, req)
    assert norms.sobolev_norm(
        norms.DiscreteField(grid, 2.5 * a.values), req
    ) == pytest.approx(2.5 * na, rel=1e-12)
    nb = norms.sobolev_norm(b, req)
    nab = norms.sobolev_norm(norms.DiscreteField(grid, a.values + b.values), req)
    assert nab <= na + nb + 1e-12


def test_hessian_of_log_on_halfplane():
    # second covariant derivative of log(y) in the hyperbolic half-plane:
    # Hess_xx = -G^y_xx / y = -1/y^2, Hess_yy = -1/y^2 - G^y_yy/y = 0
    chart = make_chart("hyperbolic-halfplane")
    grid = norms.Grid.over_box(chart, [(-0.5, 0.5), (0.75, 1.5)], 65)
    u = norms.DiscreteField(grid, np.log(grid.points[..., 1]))
    tensors = norms.covariant_tensors(u, 2)
    hess = tensors[2]
    y = grid.points[..., 1]
    interior = (slice(4, -4), slice(4, -4))
    assert np.max(np.abs(hess[..., 0, 0] + 1.0 / y**2)[interior]) < 5e-3
    assert np.max(np.abs(hess[..., 0, 1])[interior]) < 1e-10
    assert np.max(np.abs(hess[..., 1, 1])[interior]) < 5e-3


def test_gradient_modulus_uses_inverse_metric():
    # |d(log y)|_g = y * (1/y) = 1 everywhere on the half-plane
    chart = make_chart("hyperbolic-halfplane")
    grid = norms.Grid.over_box(chart, [(-0.5, 0.5), (0.75, 1.5)], 65)
    u = norms.DiscreteField(grid, np.log(grid.points[..., 1]))
    grad = norms.covariant_tensors(u, 1)[1]
    mod = norms.tensor_modulus(grid, grad, 1)
    interior = (slice(2, -2), slice(2, -2))
    assert np.max(np.abs(mod[interior] - 1.0)) < 1e-3


def test_one_form_requires_dimension_two():
    chart = make_chart("euclidean", n=3)
    grid = norms.Grid.over_box(chart, [(4, 6)] * 3, 9)
    with pytest.raises(CapabilityError):
        norms.DiscreteField(grid, np.zeros(grid.shape + (3,)), kind="one-form")


def test_norm_request_validation():
    with pytest.raises(DomainError):
        norms.NormRequest(r=0.5)
    with pytest.raises(DomainError):
        norms.NormRequest(l=3)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(2.0, 8.0), seed=st.integers(0, 10**6))
def test_holder_volume_inequality_random(r, seed):
    grid = euclid_grid(17)
    rng = np.random.default_rng(seed)
    u = norms.DiscreteField(grid, rng.standard_normal(grid.shape))
    rep = norms.holder_volume_check(u, (np.array([5.0, 5.0]), 1.2), r)
    assert rep["holds"]


def test_holder_equality_for_constants():
    grid = euclid_grid(17)
    u = norms.DiscreteField(grid, np.full(grid.shape, 3.0))
    rep = norms.holder_volume_check(u, (np.array([5.0, 5.0]), 1.0), 2.0)
    assert rep["lhs"] == pytest.approx(rep["rhs"], rel=1e-13)


def test_chart_comparison_trivial_on_flat_space():
    # on flat space the rescaled chart is the identity, so manifold and
    # chart norms agree and both normalized ratios equal R^m
    grid = euclid_grid(65)
    u = norms.DiscreteField(grid, np.sin(grid.points[..., 0]) * grid.points[..., 1])
    R = 0.8
    rep = norms.chart_norm_comparison(u, (np.array([5.0, 5.0]), R), m=1, r=2.0)
    assert rep["manifold_norm"] == pytest.approx(rep["chart_norm"], rel=1e-12)
    assert rep["ratio_m_over_c"] == pytest.approx(R, rel=1e-12)


def test_chart_comparison_bounded_on_curved_model():
    chart = make_chart("hyperbolic-ball")
    grid = norms.Grid.over_box(chart, [(-0.25, 0.25), (-0.25, 0.25)], 65)
    u = norms.DiscreteField(grid, np.exp(grid.points[..., 0]))
    rep = norms.chart_norm_comparison(u, (np.array([0.0, 0.0]), 0.12), m=2, r=2.0)
    assert 0 < rep["ratio_m_over_c"] < math.inf
    assert 0 < rep["ratio_c_over_m"] < math.inf


def test_bochner_time_norm_closed_form():
    # u(t, x) = t * sin(x1) on [0, 1]: L2-in-time of the L2 norm is
    # ||sin||_L2 / sqrt(3)
    grid = torus_grid(32)
    times = np.linspace(0.0, 1.0, 41)
    u = norms.DiscreteField.from_function(
        grid, lambda t, pts: t * np.sin(pts[..., 0]), times=times
    )
    val = norms.sobolev_norm(u, norms.NormRequest(r=2.0, l=0, s=2.0))
    assert val == pytest.approx(math.sqrt(2 * math.pi**2) / math.sqrt(3.0), rel=1e-3)


def test_window_restricts_time_integral():
    grid = torus_grid(16)
    times = np.linspace(0.0, 1.0, 21)
    u = norms.DiscreteField.from_function(
        grid, lambda t, pts: np.sin(pts[..., 0]) * (1.0 if t <= 0.5 else 0.0), times=times
    )
    full = norms.sobolev_norm(u, norms.NormRequest(r=2.0, s=2.0))
    half = norms.sobolev_norm(u, norms.NormRequest(r=2.0, s=2.0, window=(0.0, 0.5)))
    assert half == pytest.approx(math.sqrt(0.5 * 2 * math.pi**2), rel=1e-6)
    assert full >= half
