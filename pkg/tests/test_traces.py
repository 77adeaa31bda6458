import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prflow.core import expand_repetitions
from prflow.models import PoleError, oracle_trace
from prflow.traces import (
    TraceValue,
    continuation,
    continue_basic,
    continue_cat,
    continue_horseshoe,
    trace_sum,
    trace_sum_orbits,
    zeta_log_derivative,
    zeta_product,
)

TWO_PI = 2 * math.pi
# 40-digit reference values: exact series 2 pi sum_j j / (e^{2 pi (lam + j)} - 1)
BASIC_CONT = {
    complex(-2.5, 0.5): complex(-19.111355307563029062, 0.0),
    complex(-0.3, 0.2): complex(0.023191154742905412056, -0.074322174350528510832),
    complex(-5.5, 1.3): complex(-94.341232397318246717, -2.7669507194995019414),
}
# double lattice sum at lam = -1.2 + 0.7i
HORSESHOE_CONT = complex(-0.16271093130226247971, -2.6787477400602620305)
CAT_SUM_12 = 0.5819731310808547286  # sum_{n <= 12} e^{-n}


def test_trace_value_invariants():
    with pytest.raises(ValueError):
        TraceValue(0j, -1.0, 1, 1.0)
    with pytest.raises(ValueError):
        TraceValue(0j, 1e-3, 1, -0.5)
    assert not TraceValue(0j, math.inf, 1, -0.5).converged


def test_trace_sum_basic_at_zero(basic):
    tv = trace_sum(basic, 0.0, 40)
    assert tv.value.real == pytest.approx(0.011799387799149436539, rel=1e-13)
    assert tv.tail_estimate < 1e-15
    assert tv.terms_used == 6


def test_trace_sum_cat_at_one(cat):
    tv = trace_sum(cat, 1.0, 12)
    assert tv.value.real == pytest.approx(CAT_SUM_12, rel=1e-13)
    # each period block is exactly e^{-n}
    assert tv.abscissa_margin == pytest.approx(1.0, rel=1e-8)


def test_trace_sum_horseshoe_block_ratio(horseshoe):
    tv = trace_sum(horseshoe, 0.0, 12)
    assert math.isfinite(tv.tail_estimate)
    assert math.exp(-tv.abscissa_margin) == pytest.approx(0.5, rel=1e-3)


def test_trace_sum_divergent_region(horseshoe):
    tv = trace_sum(horseshoe, -1.0, 10)
    assert math.isinf(tv.tail_estimate)
    assert tv.abscissa_margin <= 0


def test_trace_sum_matches_orbit_list(cat, horseshoe):
    for m, T, lam, ell in ((cat, 6, 1.5 + 0.3j, 0), (horseshoe, 7, 0.2 - 0.4j, 1), (cat, 5, 2.0, 2)):
        orbs = expand_repetitions(m.orbit_enumerator(T), T)
        assert trace_sum(m, lam, T, ell).value == pytest.approx(trace_sum_orbits(orbs, lam, ell), rel=1e-12)


def test_trace_sum_rejects_bad_degree(basic):
    with pytest.raises(ValueError):
        trace_sum(basic, 1.0, 10, ell=3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 16 - 1), st.floats(0.5, 2), st.floats(-2, 2))
def test_trace_sum_additive(mask, re, im):
    from prflow.models import horseshoe_suspension
    m = horseshoe_suspension()
    orbs = expand_repetitions(m.orbit_enumerator(6), 6)
    lam = complex(re, im)
    a = [o for i, o in enumerate(orbs) if mask >> (i % 16) & 1]
    b = [o for i, o in enumerate(orbs) if not mask >> (i % 16) & 1]
    total = trace_sum_orbits(orbs, lam)
    assert trace_sum_orbits(a, lam) + trace_sum_orbits(b, lam) == pytest.approx(total, rel=1e-12, abs=1e-15)


def test_zeta_product_basic_single_factor(basic):
    z = zeta_product(basic, 2.0, 40)
    assert z.value.real == pytest.approx(1 - math.exp(-4 * math.pi), rel=1e-15)
    assert z.tail_estimate == 0.0


def test_zeta_constant_potential_shift(cat, horseshoe):
    for m in (cat, horseshoe):
        a = zeta_product(m, 1.3 + 0.2j, 8, V=0.7)
        b = zeta_product(m, 2.0 + 0.2j, 8)
        assert a.value == pytest.approx(b.value, rel=1e-14)


def test_zeta_log_derivative_basic(basic):
    d = zeta_log_derivative(basic, 2.0, 40)
    expected = TWO_PI * math.exp(-4 * math.pi) / (1 - math.exp(-4 * math.pi))
    assert d.value.real == pytest.approx(expected, rel=1e-12)


def test_per_orbit_orientability_identity(basic):
    orbs = expand_repetitions(basic.orbit_enumerator(40), 40)
    for o in orbs:
        s = sum((-1) ** (ell + 1) * float(o.wedge(ell)) for ell in range(3))
        assert s / abs(float(o.det_I_minus_P)) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("model_name,lam,T", [("cat", 2.0, 10), ("cat", 3.0, 10), ("basic", 2.0, 40)])
def test_zeta_log_derivative_matches_finite_difference(model_name, lam, T, request):
    m = request.getfixturevalue(model_name)
    h = 1e-5
    fd = (cmath.log(zeta_product(m, lam + h, T).value) - cmath.log(zeta_product(m, lam - h, T).value)) / (2 * h)
    d = zeta_log_derivative(m, lam, T).value
    assert abs(d - fd) / abs(d) < 1e-6


def test_continue_basic_examples():
    assert continue_basic(2.0) == pytest.approx(oracle_trace(__import__("prflow").basic_example(), 2.0), rel=1e-14)
    for lam, ref in BASIC_CONT.items():
        assert continue_basic(lam) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(PoleError):
        continue_basic(-2 + 1j + 1e-10)


def test_continue_cat_examples():
    assert continue_cat(math.log(2)) == pytest.approx(1.0, rel=1e-15)
    assert continue_cat(1j * math.pi) == pytest.approx(-0.5, abs=1e-15)
    with pytest.raises(PoleError):
        continue_cat(0.0)


def test_continue_horseshoe_examples():
    assert continue_horseshoe(-1.2 + 0.7j) == pytest.approx(HORSESHOE_CONT, rel=1e-12)
    z = 2 * 0.25 * cmath.exp(-0.3)
    assert continue_horseshoe(0.3, J_max=0) == pytest.approx(z / (1 - z), rel=1e-15)
    with pytest.raises(PoleError):
        continue_horseshoe(math.log(0.5))
    with pytest.raises(ValueError):
        continue_horseshoe(0.0, J_max=-1)


def test_continue_horseshoe_matches_long_trace(horseshoe):
    lam = 0.5
    v, err = continue_horseshoe(lam, J_max=20, full_output=True)
    tv = trace_sum(horseshoe, lam, 16)
    assert abs(v - tv.value) <= tv.tail_estimate + tv.rounding_error + err


def test_continuation_dispatch(basic, cat, horseshoe):
    assert continuation(basic)(1.0) == continue_basic(1.0)
    assert continuation(cat)(1.0) == continue_cat(1.0)
    assert continuation(horseshoe)(0.2) == continue_horseshoe(0.2)


@pytest.mark.parametrize("model_name,T,re_range,im_range", [
    ("basic", 40, (0.0, 2.0), (-2.0, 2.0)),
    ("cat", 12, (0.2, 2.0), (-3.0, 3.0)),
    ("horseshoe", 16, (-0.29, 1.0), (-3.0, 3.0)),
])
def test_overlap_consistency(model_name, T, re_range, im_range, request):
    m = request.getfixturevalue(model_name)
    cont = continuation(m)
    for re in np.linspace(*re_range, 10):
        for im in np.linspace(*im_range, 10):
            lam = complex(re, im)
            tv = trace_sum(m, lam, T)
            c_err = continue_horseshoe(lam, full_output=True)[1] if model_name == "horseshoe" else 0.0
            # continuation round-off: a few ulps of the value
            c_err += 64 * np.finfo(float).eps * abs(cont(lam))
            assert abs(cont(lam) - tv.value) <= tv.tail_estimate + tv.rounding_error + c_err


@given(st.floats(0, 3), st.floats(-3, 3))
def test_continue_basic_matches_series(re, im):
    from prflow.models import basic_example
    lam = complex(re, im)
    ref = oracle_trace(basic_example(), lam)
    assert abs(continue_basic(lam) - ref) <= 1e-12 * abs(ref)


lam_st = st.builds(complex, st.floats(-4.4, 3), st.floats(-4, 4))


def _off_lattice(lam, d=1e-3):
    ell = round(-1 - lam.real)
    return not (ell >= 0 and abs(lam - complex(-1 - ell, round(lam.imag))) < d)


@given(lam_st)
def test_continue_basic_symmetries(lam):
    if not (_off_lattice(lam) and _off_lattice(lam + 1j)):
        return
    f = continue_basic(lam)
    tol = 1e-10 * max(1.0, abs(f))
    assert abs(continue_basic(lam.conjugate()) - f.conjugate()) <= tol
    assert abs(continue_basic(lam + 1j) - f) <= tol


@given(st.builds(complex, st.floats(-3, 2), st.floats(-3, 3)))
def test_suspension_symmetries(lam):
    for f in (lambda z: continue_cat(z, pole_guard=0), lambda z: continue_horseshoe(z, pole_guard=0)):
        v = f(lam)
        if not np.isfinite(v) or abs(v) > 1e6:
            continue
        tol = 1e-9 * max(1.0, abs(v))
        assert abs(f(lam.conjugate()) - v.conjugate()) <= tol
        assert abs(f(lam + 2j * math.pi) - v) <= tol


@settings(max_examples=100)
@given(st.floats(0.01, 2.99), st.floats(-3, 3))
def test_functional_equation(re, im):
    lam = complex(re, im)
    lhs = continue_basic(lam + 1) + continue_basic(lam - 1) - 2 * continue_basic(lam)
    rhs = TWO_PI / (cmath.exp(TWO_PI * lam) - 1)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)
