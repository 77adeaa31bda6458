import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prflow.transport import (
    BumpFunction,
    builtin_bump,
    certify_cones,
    check_convexity,
    degenerate_field,
    escape_time,
    exact_trapped_sets,
    flow,
    hausdorff,
    mask_distances,
    pde_residual,
    resolvent_apply,
    rk4_flow,
    trapped_set_approx,
)

disk = st.tuples(st.floats(0, 0.999), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi)).map(
    lambda p: (p[0] * math.cos(p[1]), p[0] * math.sin(p[1]), p[2]))


def test_flow_examples(basic):
    assert np.allclose(flow(basic, [0.5, 0.5, 0], math.log(2)), [1.0, 0.25, math.log(2)])
    x = np.array([0.3, -0.2, 1.0])
    assert np.array_equal(flow(basic, x, 0.0), x)
    assert np.allclose(flow(basic, flow(basic, x, 0.3), 0.4), flow(basic, x, 0.7), atol=1e-12)


def test_rk4_matches_exact_flow(basic):
    x = np.array([0.3, -0.2, 1.0])
    assert np.allclose(rk4_flow(basic.vector_field, x, 0.8, 1e-3), flow(basic, x, 0.8), atol=1e-10)


def test_escape_examples(basic):
    assert escape_time(basic, (0.5, 0, 0)).forward_time == pytest.approx(math.log(2), abs=1e-15)
    assert escape_time(basic, (0.5, 0.5, 0)).forward_time == pytest.approx(0.65847894846240835431, abs=1e-14)
    e = escape_time(basic, (0, 0.5, 0))
    assert e.forward_trapped and not e.backward_trapped
    with pytest.raises(ValueError):
        escape_time(basic, (0.9, 0.9, 0))


@settings(max_examples=200)
@given(disk)
def test_escape_closed_form_matches_bisection(basic, x):
    a = escape_time(basic, x, method="closed")
    b = escape_time(basic, x, method="bisect")
    for s, t in ((a.forward_time, b.forward_time), (a.backward_time, b.backward_time)):
        if abs(s) > 60:
            # beyond the bisection horizon
            assert math.isinf(t)
        else:
            assert abs(s - t) < 1e-9


@given(disk, st.floats(0.01, 0.99))
def test_escape_flow_consistency(basic, x, frac):
    e = escape_time(basic, x)
    if not e.forward_time < 40:
        return
    s = frac * e.forward_time
    assert escape_time(basic, flow(basic, x, s)).forward_time == pytest.approx(e.forward_time - s, abs=1e-9)


@given(disk)
def test_escape_result_invariants(basic, x):
    e = escape_time(basic, x)
    if e.forward_trapped:
        return
    assert abs(basic.rho(e.exit_point)) < 1e-9
    for t in np.linspace(0, e.forward_time, 12)[1:-1]:
        assert basic.rho(flow(basic, x, t)) > 0


@settings(max_examples=200)
@given(disk, st.floats(0.05, 3))
def test_trajectory_convexity(basic, x, T):
    x = np.array(x)
    if basic.rho(flow(basic, x, T)) < 0:
        return
    for t in np.linspace(0, T, 25):
        assert basic.rho(flow(basic, x, t)) >= -1e-12


def test_suspension_escape(horseshoe, cat):
    e = escape_time(horseshoe, (0.1, 0.5, 0.3))
    # x = 0.1 -> 0.25 -> 0.7 -> out (x in the gap maps outside) on the third jump
    assert e.forward_time == pytest.approx(2.7)
    assert e.backward_time == pytest.approx(-0.3)
    assert horseshoe.rho(e.exit_point) < 0
    c = escape_time(cat, (0.1, 0.2, 0.0))
    assert c.forward_trapped and c.backward_trapped


def test_resolvent_zero_when_f_misses_trajectory(basic):
    # backward orbit of a point near x1-axis... use a bump supported far away
    far = BumpFunction("far", lambda x: 0j, 0.1, 0.0)
    assert resolvent_apply(basic, far, 1.0, [0.5, 0.6, 0]) == 0


def test_resolvent_on_trapped_line(basic):
    r = resolvent_apply(basic, builtin_bump("plateau"), 1.0, [0, 0, 0], full_output=True)
    assert r.value == pytest.approx(1.0, abs=1e-8)
    assert r.truncated and r.error < 1e-20
    for x3 in (0.0, 0.7, 4.0):
        u = resolvent_apply(basic, builtin_bump("plateau_k1"), 1.0, [0, 0, x3])
        assert u == pytest.approx(cmath.exp(1j * x3) / (1 + 1j), abs=1e-8)


def test_resolvent_divergent_case(basic):
    with pytest.raises(ValueError):
        resolvent_apply(basic, builtin_bump("plateau"), -0.5, [0, 0, 0])


def test_resolvent_linearity(basic):
    f, g = builtin_bump("bump"), builtin_bump("plateau_k1")
    fg = BumpFunction("fg", lambda x: 2 * f(x) - 3j * g(x), 0.8, 5.0)
    for x in ([0.2, 0.3, 1.0], [-0.4, 0.1, 5.0], [0.0, 0.5, 2.0]):
        lhs = resolvent_apply(basic, fg, 1.3, x)
        rhs = 2 * resolvent_apply(basic, f, 1.3, x) - 3j * resolvent_apply(basic, g, 1.3, x)
        assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("name", ["bump", "bump_k1", "plateau"])
def test_resolvent_inverts_transport_operator(basic, name):
    g = builtin_bump(name)
    lam = 1.0 + 0.5j
    Lg = BumpFunction("Lg", lambda x: g.lie_derivative(x) + lam * g(x), g.support_radius, 10.0)
    for x in ([0.2, 0.3, 1.0], [-0.5, -0.2, 4.0], [0.1, 0.6, 0.0]):
        assert resolvent_apply(basic, Lg, lam, np.array(x), nodes=30) == pytest.approx(g(x), abs=1e-8)


def test_pde_residual_zero_for_zero_f(basic):
    zero = BumpFunction("zero", lambda x: 0j, 0.8, 0.0)
    assert pde_residual(basic, 1.0, zero, 0.02) == 0.0


def test_pde_residual_second_order(basic):
    f = builtin_bump("bump")
    r1 = pde_residual(basic, 1.0, f, 0.02)
    r2 = pde_residual(basic, 1.0, f, 0.01)
    assert r1 / r2 == pytest.approx(4.0, rel=0.2)


def test_pde_residual_exact_k_line(basic):
    f = builtin_bump("plateau_k1")
    u = lambda x: cmath.exp(1j * x[2]) / (1 + 1j)
    pts = [[0.0, 0.0, s] for s in (0.0, 1.0, 2.5)]
    assert pde_residual(basic, 1.0, f, 1e-4, points=pts, u=u) < 1e-7


def test_convexity_basic(basic):
    rep = check_convexity(basic)
    assert rep.passed and rep.max_second_derivative == -4.0
    for p in rep.glancing_points:
        assert p[0] ** 2 == pytest.approx(0.5, abs=1e-12)
    assert check_convexity(basic, 200).passed == rep.passed


def test_convexity_degenerate(basic):
    bad = degenerate_field(basic)
    assert check_convexity(bad).passed is False
    assert check_convexity(bad, 200).passed is False


def test_convexity_not_applicable(cat, horseshoe):
    assert check_convexity(cat).applicable is False
    assert check_convexity(horseshoe).passed is None


def test_cones_cat(cat):
    cert = certify_cones(cat, math.radians(20), 1.0, 2.0)
    assert cert.passed
    lam_plus = (3 + math.sqrt(5)) / 2
    assert cert.axis_expansions == pytest.approx((lam_plus, lam_plus), rel=1e-12)
    small = certify_cones(cat, math.radians(0.01), 1.0, 2.0)
    assert small.min_expansion == pytest.approx(lam_plus, rel=1e-6)


def test_cones_cat_wrong_axis_fails(cat):
    u = certify_cones(cat, math.radians(20), 1.0, 2.0)
    swapped = certify_cones(cat, math.radians(20), 1.0, 2.0, axes=(u.stable_axis, u.unstable_axis))
    assert not swapped.passed


def test_cones_horseshoe(horseshoe):
    cert = certify_cones(horseshoe, math.radians(20), 1.0, 2.5)
    assert cert.passed
    assert cert.axis_expansions == (4.0, 3.0)
    assert certify_cones(horseshoe, 0.0, 1.0, 3.0).passed
    assert not certify_cones(horseshoe, math.radians(20), 1.0, 3.0).passed


def test_cones_basic_continuous_time(basic):
    cert = certify_cones(basic, math.radians(20), 1.0, 2.0, samples=7)
    assert cert.passed and cert.sample_count == 14


def test_trapped_masks_basic(basic):
    m = trapped_set_approx(basic, 201, 10.0)
    d = mask_distances(basic, m)
    assert max(d.values()) <= 1e-3
    assert m.K.sum() == 1


def test_trapped_masks_shrink_and_nest(basic):
    m5 = trapped_set_approx(basic, 401, 5.0)
    m10 = trapped_set_approx(basic, 401, 10.0)
    assert np.all(m10.gamma_plus <= m5.gamma_plus) and np.all(m10.gamma_minus <= m5.gamma_minus)
    d5, d10 = mask_distances(basic, m5), mask_distances(basic, m10)
    assert d10["K"] < d5["K"]


def test_trapped_masks_cat_everything(cat):
    m = trapped_set_approx(cat, 16, 10.0)
    assert m.K.all()


def test_trapped_masks_horseshoe_nested(horseshoe):
    a = trapped_set_approx(horseshoe, 40, 3.0)
    b = trapped_set_approx(horseshoe, 40, 6.0)
    assert np.all(b.K <= a.K) and b.K.sum() < a.K.sum()


def test_hausdorff_helper():
    A = np.array([[0.0, 0.0], [1.0, 0.0]])
    B = np.array([[0.0, 0.5]])
    assert hausdorff(A, B) == pytest.approx(math.hypot(1, 0.5))
    assert hausdorff(A[:0], A[:0]) == 0.0
