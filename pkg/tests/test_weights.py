import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentz_embedding.quad import INF, integrate
from lorentz_embedding.weights import (
    WeightError,
    custom,
    eval_weight,
    from_json,
    is_admissible,
    piecewise,
    power,
    primitive,
    reflected,
    sobolev_exponents,
    tail_integral,
)


# --- eval_weight ----------------------------------------------------------------

def test_eval_weight_examples():
    assert eval_weight(power(0.0), 0.3) == 1.0
    assert eval_weight(power(2.0), 0.5) == pytest.approx(0.25, rel=1e-15)
    assert eval_weight(power(-0.5, c=2.0, L=INF), 4.0) == pytest.approx(1.0, rel=1e-15)


def test_piecewise_uses_right_piece_at_break():
    w = piecewise([0.5], [{"c": 1.0}, {"c": 3.0}], 1.0)
    assert eval_weight(w, 0.25) == 1.0
    assert eval_weight(w, 0.5) == 3.0


def test_reflected_density():
    w = reflected(-0.5, c=2.0, L=1.0)
    assert eval_weight(w, 0.75) == pytest.approx(4.0, rel=1e-14)


# --- primitive --------------------------------------------------------------------

def test_primitive_examples():
    assert primitive(power(0.0)).eval(0.7) == pytest.approx(0.7, rel=1e-15)
    P = primitive(power(2.0))
    ts = np.linspace(0.05, 1.0, 20)
    np.testing.assert_allclose(P.eval(ts), ts**3 / 3, rtol=1e-14)
    assert P.closed_form_available
    assert math.isinf(primitive(reflected(-1.0)).value_at_L.value)


def test_primitive_inverse():
    P = primitive(piecewise([0.3], [{"c": 1.0, "alpha": 0.5}, {"c": 2.0}], 1.0))
    ys = P.eval(np.array([0.1, 0.3, 0.6, 0.9]))
    np.testing.assert_allclose(P.inverse(ys), [0.1, 0.3, 0.6, 0.9], rtol=1e-10)


def test_not_a_weight():
    with pytest.raises(WeightError):
        primitive(power(-1.0))
    with pytest.raises(WeightError):
        primitive(piecewise([0.5], [{"c": 0.0}, {"c": 1.0}], 1.0))


CLOSED_FORMS = [
    power(0.0),
    power(2.0),
    power(-0.5),
    power(-0.5, L=INF),
    power(0.3, beta=1.0),
    power(-0.7, beta=1.0, L=5.0),
    reflected(-0.5),
    reflected(1.5, beta=1.0, L=2.0),
    piecewise([0.5], [{"c": 1.0, "alpha": 1.0}, {"c": 0.5}], 1.0),
    piecewise([1.0], [{"c": 1.0}, {"c": 1.0, "alpha": -3.0}], INF),
]


@pytest.mark.parametrize("w", CLOSED_FORMS)
def test_closed_form_matches_quadrature(w):
    P = primitive(w)
    assert P.closed_form_available
    top = w.L if math.isfinite(w.L) else 50.0
    ts = np.linspace(top / 33, top, 32, endpoint=False)
    for t in ts:
        ref = integrate(lambda s: eval_weight(w, s), 0.0, t, rel_tol=1e-12, points=w.breaks).value.value
        assert P.eval(t) == pytest.approx(ref, rel=1e-10)


def test_custom_weight_without_primitive():
    w = custom(lambda t: 1.0 + np.sin(t) ** 2, L=2.0)
    P = primitive(w)
    assert not P.closed_form_available
    ref = integrate(lambda s: 1.0 + np.sin(s) ** 2, 0.0, 1.3).value.value
    assert P.eval(1.3) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.9, 3.0), st.floats(0.1, 10.0), st.lists(st.floats(1e-4, 1.0), min_size=2, max_size=20))
def test_primitive_monotone(alpha, c, ts):
    P = primitive(power(alpha, c))
    ts = np.sort(np.array(ts))
    vals = P.eval(ts)
    assert np.all(np.diff(vals) >= 0)
    assert np.all(np.isfinite(vals))


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.9, 3.0), st.sampled_from([0.0, 1.0]), st.fractions(1, 20).map(float), st.floats(0.01, 1.0))
def test_primitive_scaling(alpha, beta, lam, t):
    base = primitive(power(alpha, 1.0, beta=beta)).eval(t)
    scaled = primitive(power(alpha, lam, beta=beta)).eval(t)
    assert scaled == pytest.approx(lam * base, rel=1e-14)


# --- tail_integral ------------------------------------------------------------------

def test_tail_integral_examples():
    U = primitive(power(0.0))
    assert tail_integral(power(0.0), U, 2.0, 0.5) == pytest.approx(1.0, rel=1e-12)
    assert tail_integral(power(0.0), U, 2.0, 1.0) == 0.0
    assert math.isinf(tail_integral(reflected(-1.0), U, 1.0, 0.5))


def test_tail_integral_general_path():
    u = piecewise([0.5], [{"c": 1.0}, {"c": 2.0}], 1.0)
    U = primitive(u)
    v = power(1.0)
    ref = integrate(lambda s: s * U.eval(s) ** -2.0, 0.3, 1.0, rel_tol=1e-12).value.value
    assert tail_integral(v, U, 2.0, 0.3) == pytest.approx(ref, rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.5, 2.0), st.floats(0.5, 3.0), st.lists(st.floats(1e-3, 0.999), min_size=2, max_size=16))
def test_tail_integral_nonincreasing(alpha, p, ts):
    v = piecewise([0.4], [{"c": 1.0, "alpha": alpha}, {"c": 2.0}], 1.0)
    U = primitive(power(0.0))
    ts = np.sort(np.array(ts))
    vals = tail_integral(v, U, p, ts)
    assert np.all(np.diff(vals) <= 1e-12 * np.maximum(vals[:-1], 1.0))


# --- admissibility --------------------------------------------------------------------

def test_is_admissible():
    assert is_admissible(primitive(power(0.0)))
    assert not is_admissible(primitive(piecewise([0.2, 0.4], [{"c": 1.0}, {"c": 0.0}, {"c": 1.0}], 1.0)))
    assert is_admissible(primitive(power(-0.5)))


# --- Sobolev exponents ------------------------------------------------------------------

def test_sobolev_exponents():
    assert sobolev_exponents(2, 2, 1, 3, 1) == pytest.approx((1.0, 1.0))
    assert sobolev_exponents(4, 2, 2, 5, 1) == pytest.approx((2.0, 1.0))
    with pytest.raises(WeightError):
        sobolev_exponents(2, 2, 1, 2, 1)
    with pytest.raises(WeightError):
        sobolev_exponents(2, 2, 1, 3, 0)
    with pytest.raises(WeightError):
        sobolev_exponents(2, 2, 3, 2, 0.5)


# --- JSON ---------------------------------------------------------------------------------

def test_from_json_forms():
    assert eval_weight(from_json({"type": "power", "alpha": 2}, 1.0), 0.5) == 0.25
    w = from_json('{"type": "piecewise", "breaks": [1], "pieces": [{"c": 1}, {"c": 1, "alpha": -2}]}', INF)
    assert primitive(w).value_at_L.value == pytest.approx(2.0, rel=1e-14)
    assert math.isinf(primitive(from_json({"type": "reflected", "alpha": -1}, 1.0)).value_at_L.value)


def test_from_json_errors_carry_path():
    with pytest.raises(WeightError, match=r"scenario\.v\.alpha"):
        from_json({"type": "power", "alpha": "x"}, 1.0, "scenario.v")
    with pytest.raises(WeightError, match=r"scenario\.v\.type"):
        from_json({"type": "spline"}, 1.0, "scenario.v")
    with pytest.raises(WeightError, match=r"w\.pieces\[1\]\.c"):
        from_json({"type": "piecewise", "breaks": [0.5], "pieces": [{"c": 1}, {"c": None}]}, 1.0, "w")
