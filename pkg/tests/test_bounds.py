"""Per-cell defect statistics and tail-bound arithmetic."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from shapedist.bounds import (
    EVENT_BOUND_RECIP_K,
    bernstein_cell_bound,
    bernstein_residual_bound,
    bernstein_slope_gap_bound,
    binomial_cell_bound,
    cell_variance,
    cell_variance_bound,
    cell_variance_report,
    compute_quantities,
    convexity_event_bound,
    delta_schedule,
    interp_gap_report,
    mesh_ratio_check,
    slope_difference_bound,
    trapezoid_remainder_bounds,
)
from shapedist.empirical import sample, seed_for
from shapedist.models import knot_mesh_convex, make_model
from shapedist.spline import (
    hermite_second_derivative_slopes,
    interp_integrated_cdf,
    interp_integrated_ecdf,
)


def raw_defect_oracle(x, a):
    # direct-sum route: ecdf and integrated ecdf from plain loops.
    n = len(x)
    out = []
    for lo, hi in zip(a[:-1], a[1:]):
        flo = sum(1 for xi in x if xi <= lo) / n
        fhi = sum(1 for xi in x if xi <= hi) / n
        ylo = sum(max(lo - xi, 0.0) for xi in x) / n
        yhi = sum(max(hi - xi, 0.0) for xi in x) / n
        out.append(0.5 * (flo + fhi) * (hi - lo) - (yhi - ylo))
    return np.array(out)


def test_quantities_against_independent_routes():
    m = make_model("truncated-exponential", (1.0,))
    mesh = knot_mesh_convex(m, 6)
    d = sample(m, 120, seed_for(80, 120, 0))
    q = compute_quantities(d, m, mesh)
    a, w = mesh.knots, mesh.deltas

    # R: direct sums over the sample
    np.testing.assert_allclose(q.R, raw_defect_oracle(d.x, a), rtol=0.0, atol=1e-12)

    # r: numeric quadrature of the cdf
    r_quad = np.array([
        0.5 * (float(m.F(hi)) + float(m.F(lo))) * (hi - lo)
        - quad(lambda u: float(m.F(u)), lo, hi, epsabs=1e-13, epsrel=1e-12)[0]
        for lo, hi in zip(a[:-1], a[1:])
    ])
    np.testing.assert_allclose(q.r, r_quad, rtol=0.0, atol=1e-10)

    # b and T - R: half-sum of end slope errors times the width
    s_pop = interp_integrated_cdf(m, mesh).slopes
    e_pop = s_pop - np.asarray(m.F(a), dtype=float)
    np.testing.assert_allclose(q.b, 0.5 * (e_pop[:-1] + e_pop[1:]) * w, atol=1e-13)
    s_emp = interp_integrated_ecdf(d, mesh).slopes
    from shapedist.empirical import ecdf

    e_emp = s_emp - np.asarray(ecdf(d, a), dtype=float)
    np.testing.assert_allclose(q.T - q.R, 0.5 * (e_emp[:-1] + e_emp[1:]) * w, atol=1e-13)

    # decomposition closes, and the rescaled slopes are consistent
    np.testing.assert_allclose(q.T - q.r, (q.R - q.r) + q.W + q.b, rtol=0.0, atol=1e-13)
    np.testing.assert_allclose(q.B, 12.0 * q.T / w**3, rtol=1e-13)
    np.testing.assert_allclose(q.Btilde, 12.0 * q.R / w**3, rtol=1e-13)
    np.testing.assert_allclose(q.B - q.Btilde, 12.0 * (q.W + q.b) / w**3, atol=1e-10)
    np.testing.assert_allclose(q.Btilde, hermite_second_derivative_slopes(d, mesh), atol=1e-12)


def test_population_defect_sign_and_uniform_case():
    # the cdf of a decreasing density is concave, so the trapezoid sits
    # under the integral: population defects are nonpositive; for the
    # uniform model the cdf is linear and they vanish exactly.
    m = make_model("truncated-exponential", (1.0,))
    q = compute_quantities(sample(m, 50, seed_for(81, 50, 0)), m, knot_mesh_convex(m, 7))
    assert np.all(q.r <= 1e-15)
    mu = make_model("uniform", ())
    qu = compute_quantities(sample(mu, 50, seed_for(82, 50, 0)), mu, knot_mesh_convex(mu, 4))
    assert np.max(np.abs(qu.r)) == 0.0
    np.testing.assert_allclose(qu.b, qu.t, atol=1e-15)


def test_taylor_bracket_thousand_intervals():
    m = make_model("truncated-exponential", (1.0,))
    rng = np.random.default_rng(83)
    for _ in range(1000):
        s = float(rng.uniform(0.0, 2.2))
        t = s + float(rng.uniform(1e-3, 0.6))
        lo, hi, val = trapezoid_remainder_bounds(m, s, t)
        tol = 1e-12 * max(1.0, abs(val))
        assert lo - tol <= val <= hi + tol
        assert val <= 1e-15  # concave cdf


def test_trapezoid_bracket_rejects_bad_interval():
    m = make_model("truncated-exponential", (1.0,))
    with pytest.raises(ValueError):
        trapezoid_remainder_bounds(m, -0.1, 0.5)
    with pytest.raises(ValueError):
        trapezoid_remainder_bounds(m, 0.5, 0.5)


def test_slope_difference_bound_all_cells():
    m = make_model("truncated-exponential", (1.0,))
    mesh = knot_mesh_convex(m, 50)
    for j in range(1, 50):
        lhs, rhs = slope_difference_bound(m, mesh, j)
        assert lhs <= rhs + 1e-15
    with pytest.raises(ValueError):
        slope_difference_bound(m, mesh, 0)
    with pytest.raises(ValueError):
        slope_difference_bound(m, mesh, 50)


def test_mesh_ratio_check_fine_and_uniform():
    m = make_model("truncated-exponential", (1.0,))
    # fine mesh: k = 80 = 5 * gamma1_tilde * R for this model
    max_ratio, threshold_k = mesh_ratio_check(m, knot_mesh_convex(m, 80))
    assert max_ratio <= 2.0
    assert 1 <= threshold_k <= 80
    mu = make_model("uniform", ())
    max_u, thr_u = mesh_ratio_check(mu, knot_mesh_convex(mu, 3))
    assert max_u == 1.0 and thr_u == 1


def test_bernstein_bounds_frozen_arithmetic():
    # pinned arguments, recomputed with math.exp
    got = bernstein_cell_bound(100000, 0.1, 0.05, 0.5)
    assert math.isclose(got, 2.0 * math.exp(-0.09375 / 1.0025), rel_tol=1e-12)
    expo = (100000 * 0.1**2 * 0.5**2 * 0.05**3 / 100.0) / (1.0 + 0.05 * 0.1 * 0.5 / 30.0)
    assert math.isclose(bernstein_slope_gap_bound(100000, 0.1, 0.05, 0.5),
                        6.0 * math.exp(-expo), rel_tol=1e-12)
    assert math.isclose(bernstein_residual_bound(100000, 0.1, 0.05, 0.5),
                        4.0 * math.exp(-expo), rel_tol=1e-12)
    # smaller tail for more data, larger for flatter density
    assert bernstein_cell_bound(200000, 0.1, 0.05, 0.5) < got
    assert bernstein_cell_bound(100000, 0.1, 0.05, 0.25) > got


def test_convexity_event_bound_frozen_arithmetic():
    assert EVENT_BOUND_RECIP_K == 8**2 * 144**2 * 16 * 200 == 4246732800
    got = convexity_event_bound(10**6, 10, 1.0)
    assert math.isclose(got, 120.0 * math.exp(-10.0 / 4246732800.0), rel_tol=1e-12)
    assert convexity_event_bound(10**9, 10, 1.0) < got


def test_binomial_cell_bound_and_slack():
    assert math.isclose(binomial_cell_bound(1000, 0.1, 0.2),
                        2.0 * math.exp(-2.0), rel_tol=1e-12)
    assert math.isclose(binomial_cell_bound(1000, 0.1, 0.2, slack=-0.1),
                        2.0 * math.exp(-1.8), rel_tol=1e-12)
    assert binomial_cell_bound(1000, 0.1, 0.2, slack=-0.1) > binomial_cell_bound(1000, 0.1, 0.2)


def test_delta_schedule_arithmetic():
    assert math.isclose(delta_schedule(0.5, 0.1, 2.0), 0.5 * 0.1 / (1152.0 * 2.0), rel_tol=1e-15)
    assert 1152 == 8 * 144


def test_cell_variance_uniform_closed_form():
    mu = make_model("uniform", ())
    assert math.isclose(cell_variance(mu, 0.1, 0.4), 0.3**3 / 12.0, rel_tol=1e-9)
    assert cell_variance_bound(0.25, 1.0) == 0.25**3 / 6.0


@pytest.mark.parametrize("name,params", [("truncated-exponential", (1.0,)), ("uniform", ())])
def test_cell_variance_report_passes(name, params):
    m = make_model(name, params)
    rows = cell_variance_report(m, knot_mesh_convex(m, 8))
    assert len(rows) == 8
    for row in rows:
        assert row["pass"], row
        assert row["margin"] >= 0.0


def test_interp_gap_report_refinement():
    m = make_model("truncated-exponential", (1.0,))
    rep = interp_gap_report(m, (25, 50, 100, 200))
    assert rep["pass"]
    assert rep["rescaled_decreasing"]
    assert rep["final_over_first"] <= 0.25  # at least a 4x drop over 25 -> 200
    for row in rep["rows"]:
        assert row["pass"], row
