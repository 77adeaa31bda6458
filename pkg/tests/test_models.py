import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prflow.models import (
    PoleError,
    ResonanceOracle,
    cat_suspension,
    horseshoe_lattice,
    horseshoe_suspension,
    load_model,
    normalize_region,
    oracle_trace,
    resonance_oracle,
)

# high-precision reference values (40-digit series evaluation)
BASIC_F0 = 0.011799387799149436539
BASIC_F_05_03 = complex(-0.00015730702724216995591, -0.00048401531864286208997)
HORSESHOE_F0 = 1.558087466923707813
HORSESHOE_F05 = 0.75861221551750262705


def test_basic_oracle_values(basic):
    assert oracle_trace(basic, 0) == pytest.approx(BASIC_F0, rel=1e-14)
    assert oracle_trace(basic, 0.5 + 0.3j) == pytest.approx(BASIC_F_05_03, rel=1e-13)
    with pytest.raises(PoleError):
        oracle_trace(basic, -1.2)


def test_cat_oracle_closed_form(cat):
    assert oracle_trace(cat, math.log(2)) == pytest.approx(1.0, rel=1e-15)
    assert oracle_trace(cat, 1j * math.pi) == pytest.approx(-0.5, abs=1e-15)
    with pytest.raises(PoleError):
        oracle_trace(cat, 2j * math.pi)


def test_horseshoe_oracle(horseshoe):
    assert oracle_trace(horseshoe, 0) == pytest.approx(HORSESHOE_F0, rel=1e-14)
    assert oracle_trace(horseshoe, 0.5) == pytest.approx(HORSESHOE_F05, rel=1e-14)


def test_basic_resonance_oracle(basic):
    orc = resonance_oracle(basic, (-4.5, -0.5, -3.5, 3.5))
    assert len(orc.poles) == 28
    assert sorted({rank for _, rank in orc.poles}) == [1, 2, 3, 4]
    assert (complex(-1, 0), 1) in orc.poles


def test_horseshoe_lattice_window():
    poles = horseshoe_lattice(3.0, 0.25, (-3, 0, -math.pi, math.pi))
    re = [round(p.real, 6) for p, _ in poles]
    assert re == [-0.693147, -1.791759, -2.079442, -2.890372]
    assert all(rank == 1 for _, rank in poles)


def test_horseshoe_lattice_merges_coincident_points():
    # log 4 / log(1/4) rational: j + k constant gives one point
    poles = horseshoe_lattice(4.0, 0.25, (-4.5, 0, -0.1, 0.1))
    assert [(round(p.real, 9), r) for p, r in poles] == [
        (round(math.log(0.5), 9), 1), (round(math.log(0.5) - math.log(4), 9), 2),
        (round(math.log(0.5) - 2 * math.log(4), 9), 3)]


def test_resonance_oracle_validates():
    with pytest.raises(ValueError):
        ResonanceOracle(((complex(5, 0), 1),), (0, 1, 0, 1))
    with pytest.raises(ValueError):
        ResonanceOracle(((complex(0.5, 0.5), 0),), (0, 1, 0, 1))


def test_region_forms():
    assert normalize_region(((-1, 0), (2, 3))) == (-1.0, 0.0, 2.0, 3.0)
    with pytest.raises(ValueError):
        normalize_region((0, 0, 1, 2))


def test_model_parameter_checks():
    with pytest.raises(ValueError):
        horseshoe_suspension(0.5, 0.25)
    with pytest.raises(ValueError):
        horseshoe_suspension(3.0, 1.5)
    with pytest.raises(ValueError):
        cat_suspension(((1, 1), (0, 1)))  # parabolic
    with pytest.raises(ValueError):
        cat_suspension(((2, 0), (0, 1)))  # det 2


def test_load_model(tmp_path):
    m = load_model({"model": "horseshoe", "lambda_u": 4.0, "lambda_s": 0.2})
    assert m.params == {"lambda_u": 4.0, "lambda_s": 0.2}
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"model": "cat", "A": [[3, 1], [2, 1]]}))
    assert load_model(path).params["A"] == [[3, 1], [2, 1]]
    with pytest.raises(ValueError):
        load_model({"model": "nope"})


def test_basic_flow_example(basic):
    y = basic.flow(np.array([0.5, 0.5, 0.0]), math.log(2))
    assert np.allclose(y, [1.0, 0.25, math.log(2)], atol=1e-15)


pts = st.tuples(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7), st.floats(0, 6))
times = st.floats(-2, 2)


@given(pts, times, times)
def test_basic_group_law(x, s, t):
    from prflow.models import basic_example
    m = basic_example()
    a = m.flow(m.flow(np.array(x), s), t)
    b = m.flow(np.array(x), s + t)
    assert np.allclose(a[:2], b[:2], rtol=1e-10, atol=1e-12)
    assert math.isclose(math.cos(a[2]), math.cos(b[2]), abs_tol=1e-10)


@given(st.tuples(st.floats(0, 0.999), st.floats(0, 0.999), st.floats(0, 0.999)),
       st.integers(-3, 3), st.integers(-3, 3))
def test_cat_group_law_integer_times(x, s, t):
    m = cat_suspension()
    a = m.flow(m.flow(np.array(x), s), t)
    b = m.flow(np.array(x), s + t)
    d = (a - b + 0.5) % 1.0 - 0.5
    assert np.all(np.abs(d) < 1e-9)


def test_suspension_flow_group_law_fractional(horseshoe):
    x = np.array([0.1, 0.2, 0.3])
    for s, t in [(0.4, 0.5), (0.65, 0.2), (-0.2, 0.9)]:
        a = horseshoe.flow(horseshoe.flow(x, s), t)
        b = horseshoe.flow(x, s + t)
        assert np.allclose(a, b, atol=1e-12)


def test_rho_positive_on_orbit_points(horseshoe, basic):
    for c in horseshoe.orbit_enumerator(6):
        for p in horseshoe.cycle_points(c.label):
            assert horseshoe.rho(p) > 0
    for p in basic.cycle_points("K"):
        assert basic.rho(p) > 0


def test_horseshoe_cycle_points_are_periodic(horseshoe):
    for c in horseshoe.orbit_enumerator(5):
        pts = horseshoe.cycle_points(c.label)
        n = len(c.label)
        back = horseshoe.flow(pts[0], float(n))
        assert np.allclose(back[:2], pts[0][:2], atol=1e-12)


@given(st.floats(0.05, 3), st.floats(-5, 5))
def test_oracle_conjugate_symmetry(re, im):
    from prflow.models import basic_example
    m = basic_example()
    lam = complex(re, im)
    assert oracle_trace(m, lam.conjugate()) == pytest.approx(oracle_trace(m, lam).conjugate(), rel=1e-12, abs=1e-300)
