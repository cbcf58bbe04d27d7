import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soboheat import admissible as adm
from soboheat.geometry import DomainError, make_chart


def params(**kw):
    base = dict(m=2, eps=0.2)
    base.update(kw)
    return adm.AdmissibilityParams(**base)


def test_params_validation():
    with pytest.raises(DomainError):
        adm.AdmissibilityParams(m=2, eps=0.5)  # eps must be <= 1/3
    with pytest.raises(DomainError):
        adm.AdmissibilityParams(m=2, eps=0.0)
    with pytest.raises(DomainError):
        adm.AdmissibilityParams(m=0, eps=0.2)


def test_flat_space_radius_is_capped_domain_gap():
    chart = make_chart("euclidean", n=2)
    p = params()
    # far from the boundary the cap R_CAP binds, R_eps saturates at 1
    r_prime, r_eps, truncated, _ = adm.admissible_radius(chart, np.array([5.0, 5.0]), p)
    assert truncated
    assert r_eps == pytest.approx(1.0, abs=p.bisection_tol)
    # near the boundary the domain gap binds: R' = gap, R_eps = min(1, gap/2)
    r_prime, r_eps, truncated, _ = adm.admissible_radius(chart, np.array([0.5, 5.0]), p)
    assert r_prime == pytest.approx(0.5, abs=p.bisection_tol)
    assert r_eps == pytest.approx(0.25, abs=p.bisection_tol)


def test_torus_radius_is_half_period_capped():
    chart = make_chart("flat-torus", n=2, L=4.0)
    p = params()
    r_prime, r_eps, truncated, _ = adm.admissible_radius(chart, np.array([1.0, 3.0]), p)
    # flat and periodic: R' = half period = 2, truncated at the domain cap
    assert truncated
    assert r_prime == pytest.approx(2.0, abs=p.bisection_tol)
    assert r_eps == pytest.approx(1.0, abs=p.bisection_tol)


def test_halfplane_pointwise_oracle():
    """The homothety (x, y) -> (t x, t y) is an isometry that maps charts
    to rescaled charts, so R' is the same at every height: R'(0, y) =
    R'(0, 1)."""
    chart = make_chart("hyperbolic-halfplane")
    p = params(m=1)
    r1, _, t1, _ = adm.admissible_radius(chart, np.array([0.0, 1.0]), p)
    assert not t1
    for y in (0.7, 1.5, 2.0):
        ry, _, _, _ = adm.admissible_radius(chart, np.array([0.0, y]), p)
        assert ry == pytest.approx(r1, abs=2 * p.bisection_tol)


def test_halfplane_condition1_hand_bound():
    """Condition on the factor band alone: f(x)/f(c) = (y_c/y)^2 needs
    y/y_c in [1/sqrt(1+eps), 1/sqrt(1-eps)]; the geodesic ball of radius
    R reaches heights y_c e^{+-R}, so R' <= log(1+eps)/2 under m=1
    conditions.  The returned radius must respect that bound."""
    chart = make_chart("hyperbolic-halfplane")
    p = params(m=1)
    r1, _, _, _ = adm.admissible_radius(chart, np.array([0.0, 1.0]), p)
    assert r1 <= 0.5 * math.log(1 + p.eps) + p.bisection_tol


def test_is_admissible_monotone_in_radius():
    chart = make_chart("hyperbolic-ball")
    p = params()
    c = np.array([0.1, 0.05])
    r_prime, _, _, _ = adm.admissible_radius(chart, c, p)
    assert adm.is_admissible(chart, c, 0.5 * r_prime, p)
    assert not adm.is_admissible(chart, c, 1.5 * r_prime, p)


def test_smaller_eps_gives_smaller_radius():
    chart = make_chart("hyperbolic-ball")
    c = np.array([0.0, 0.0])
    r_small = adm.admissible_radius(chart, c, params(eps=0.1))[0]
    r_large = adm.admissible_radius(chart, c, params(eps=0.3))[0]
    assert r_small < r_large


def test_radius_field_shapes_and_csv(tmp_path):
    chart = make_chart("euclidean", n=2)
    pts = adm.grid_centers(chart, 4, margin=1.0)
    fld = adm.radius_field(chart, pts, params())
    assert fld.r_eps.shape == (16,)
    assert not fld.degenerate.any()
    path = tmp_path / "field.csv"
    fld.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,R_prime,R_eps,truncated,iterations"
    assert len(lines) == 17


def test_lower_bound_is_conservative():
    chart = make_chart("hyperbolic-halfplane")
    pts = np.stack(np.meshgrid(np.linspace(-0.5, 0.5, 5),
                               np.linspace(0.8, 1.6, 5), indexing="ij"), -1).reshape(-1, 2)
    p = params()
    fld = adm.radius_field(chart, pts, p)
    # the Lipschitz lower bound never exceeds the directly computed radius
    queries = pts + 0.03
    direct = np.array([adm.admissible_radius(chart, q, p)[1] for q in queries])
    bound = fld.lower_bound_at(queries)
    assert np.all(bound <= direct + 2 * p.bisection_tol)
    assert np.all(bound > 0)


def test_checks_pass_on_halfplane_sample():
    chart = make_chart("hyperbolic-halfplane")
    pts = np.stack(np.meshgrid(np.linspace(-1.0, 1.0, 5),
                               np.linspace(0.6, 2.4, 5), indexing="ij"), -1).reshape(-1, 2)
    fld = adm.radius_field(chart, pts, params())
    assert adm.check_lipschitz(fld)["violations"] == 0
    assert adm.check_slow_variation(fld)["violations"] == 0
    assert adm.uniform_lower_bound(fld) > 0


@settings(max_examples=20, deadline=None)
@given(
    x=st.floats(-0.25, 0.25),
    y=st.floats(-0.25, 0.25),
)
def test_ball_model_radius_depends_only_on_distance(x, y):
    """Rotational model: R' at dihedral-symmetric images of a point agree
    exactly (the chart test is invariant under quarter turns/reflections)."""
    chart = make_chart("hyperbolic-ball")
    p = params()
    c = np.array([x, y])
    r0 = adm.admissible_radius(chart, c, p)[0]
    for image in (np.array([-x, y]), np.array([y, x]), np.array([-y, -x])):
        assert adm.admissible_radius(chart, image, p)[0] == pytest.approx(
            r0, abs=2 * p.bisection_tol
        )


def test_center_outside_domain_raises():
    chart = make_chart("hyperbolic-halfplane")
    with pytest.raises(DomainError):
        adm.admissible_radius(chart, np.array([0.0, -1.0]), params())


def test_degenerate_error_is_domain_error():
    assert issubclass(adm.DegeneratePointError, DomainError)
