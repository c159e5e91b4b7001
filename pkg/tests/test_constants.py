import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentz_embedding import catalog
from lorentz_embedding.catalog import problem_from_scenario
from lorentz_embedding.constants import (
    A1, A2, A3, A4, A5, A6, A7, A8,
    CaseTag,
    ConstantsError,
    EmbeddingProblem,
    WeakRepError,
    assum_W,
    assum_xi,
    classify,
    fundamental_phi,
    make_weak_rep,
    optimal_constant_estimate,
    phi_weak,
    verify_weak_rep,
    weak_rep,
    xi_strong,
    xi_weak,
)
from lorentz_embedding.qc import is_quasiconcave
from lorentz_embedding.quad import INF, log_grid
from lorentz_embedding.weights import piecewise, power, reflected

ONE = power(0.0)


def prob(p, q, u=None, v=None, w=None, L=1.0):
    """Problem on (0, L); missing weights are 1."""
    one = power(0.0, L=L)
    return EmbeddingProblem(L, p, q, u or one, v or one, w or one)


def weak_from(name):
    sc = catalog.scenario(name)
    pr = problem_from_scenario(sc)
    mode = (sc.get("rep") or {}).get("mode", "differentiable")
    return pr, weak_rep(pr, mode)


# --- classification -------------------------------------------------------------

def test_classify_examples():
    assert classify(prob(2.0, 3.0)) is CaseTag.I
    assert classify(prob(3.0, 2.0)) is CaseTag.II
    assert classify(prob(0.5, 0.8)) is CaseTag.III
    assert classify(prob(2.0, 0.5)) is CaseTag.IV
    assert classify(prob(INF, 0.5, v=power(1.0))) is CaseTag.WEAK_LT1
    assert classify(prob(INF, 2.0, v=power(1.0))) is CaseTag.WEAK_GE1
    assert classify(prob(1.0, 1.0, v=reflected(-1.0))) is CaseTag.DEGENERATE


def test_problem_validation():
    with pytest.raises(ConstantsError):
        prob(2.0, INF)
    with pytest.raises(ConstantsError):
        prob(0.0, 1.0)


@pytest.mark.parametrize("sc", catalog.SCENARIOS, ids=lambda s: s["name"])
def test_catalog_case_tags(sc):
    assert classify(problem_from_scenario(sc)).value == sc["case"]


# --- fundamental function -----------------------------------------------------------

def test_fundamental_phi():
    pr = prob(2.0, 2.0)
    assert float(fundamental_phi(pr, 0.5)) == pytest.approx(0.75, rel=1e-12)
    assert float(fundamental_phi(pr, 1e-9)) < 1e-8
    deg = prob(1.0, 1.0, v=reflected(-1.0))
    assert math.isinf(float(fundamental_phi(deg, 0.3)))


@pytest.mark.parametrize("sc", [s for s in catalog.SCENARIOS if s["case"] in ("I", "II", "III", "IV")],
                         ids=lambda s: s["name"])
def test_phi_quasiconcave(sc):
    pr = problem_from_scenario(sc)
    g = log_grid(pr.L, 200, 8)
    ok, worst = is_quasiconcave(pr.phi, lambda t: pr.U(t) ** pr.p, g)
    assert ok, worst


# --- strong-case constants ------------------------------------------------------------

def test_A1_closed_form():
    pr = prob(2.0, 2.0)
    assert float(A1(pr).value) == pytest.approx(1.0, abs=1e-6)
    four = prob(2.0, 2.0, w=power(0.0, 4.0))
    assert float(A1(four).value) == pytest.approx(2.0 * float(A1(pr).value), rel=1e-12)


def test_degenerate_constants_vanish():
    deg = prob(1.0, 1.0, v=reflected(-1.0))
    assert float(A1(deg).value) == 0.0
    est = optimal_constant_estimate(deg)
    assert est.case is CaseTag.DEGENERATE and float(est.value) == 0.0


def test_A2_limit_term_regime():
    r = A2(prob(2.0, 1.0, v=power(2.0)))
    assert float(r.limit_term_zero) == pytest.approx(1.0, rel=1e-6)
    assert float(r.value) >= 1.0
    assert float(r.recombined()) == float(r.value)


def test_A2_infinite_interval_has_no_limit_terms():
    # v = u = 1 on (0, inf) with w decaying so that W stays bounded
    w = piecewise([1.0], [{"c": 1.0}, {"c": 1.0, "alpha": -3.0}], INF)
    r = A2(prob(2.0, 1.0, w=w, L=INF))
    assert float(r.limit_term_zero) == 0.0
    assert float(r.limit_term_L) == 0.0
    assert 0 < float(r.integral_term) < INF


def test_A3_dominates_A1():
    for name in ("III-a", "III-b"):
        pr = problem_from_scenario(catalog.scenario(name))
        assert float(A3(pr).value) >= float(A1(pr).value) * (1 - 1e-12)


def test_A4_unit_weights():
    # the zero-end term vanishes; at L the term is (lim 1/phi)^(1/p) * (int W^(q/(1-q)) w)^((1-q)/q)
    r = A4(prob(2.0, 0.5))
    assert float(r.limit_term_zero) == 0.0
    assert float(r.limit_term_L) == pytest.approx(0.5, rel=1e-8)
    assert 0 < float(r.value) < INF


def test_A4_A5_under_violation():
    pr = prob(2.0, 0.5, L=INF)
    assert not assum_W(pr)
    assert math.isinf(float(A4(pr).value))
    assert float(A5(pr).value) == 0.0


@pytest.mark.parametrize("name", ["IV-a", "IV-b"])
def test_A5_equivalent_to_A4(name):
    pr = problem_from_scenario(catalog.scenario(name))
    assert assum_W(pr)
    ratio = float(A5(pr).value) / float(A4(pr).value)
    assert 1 / 32 <= ratio <= 32


def test_xi():
    pr = prob(2.0, 0.5)
    assert float(xi_strong(pr, 1.0)) == pytest.approx(0.5, rel=1e-10)
    weak = prob(INF, 0.5, v=power(1.0))
    assert float(xi_weak(weak, 1e-10)) < 1e-4
    three = prob(INF, 0.5, v=power(1.0), w=power(0.0, 3.0))
    ts = np.array([0.1, 0.5, 0.9])
    np.testing.assert_allclose(xi_weak(three, ts), 3.0 * xi_weak(weak, ts), rtol=1e-12)


# --- weak case -------------------------------------------------------------------------

def test_phi_weak_remark_family():
    pr = prob(INF, 1.0, v=power(1.0))
    g = log_grid(1.0, 200, 8)
    np.testing.assert_allclose(phi_weak(pr, g), g, rtol=1e-12)
    flat = prob(INF, 1.0, v=ONE)
    np.testing.assert_allclose(phi_weak(flat, g), 1.0, rtol=1e-12)


def test_phi_weak_brute_force():
    v = piecewise([0.3, 0.6], [{"c": 1.0, "alpha": 1.0}, {"c": 2.0}, {"c": 0.2, "alpha": -1.0}], 1.0)
    pr = prob(INF, 1.0, v=v, u=power(-0.5))
    s = np.sort(np.concatenate([np.geomspace(1e-4, 1 - 1e-9, 256), [0.3, 0.6]]))
    U = pr.U(s)
    vs = pr.v(s)
    ts = np.geomspace(1e-3, 0.99, 40)
    brute = [np.max(vs * np.minimum(1.0, pr.U(t) / U)) for t in ts]
    np.testing.assert_allclose(phi_weak(pr, ts), brute, rtol=2e-3)
    assert is_quasiconcave(lambda t: phi_weak(pr, t), pr.U, log_grid(1.0, 200, 8))[0]


def test_weak_rep_examples():
    ts = np.array([0.1, 0.4, 0.6, 0.9])
    pr = prob(INF, 1.0, v=power(1.0))
    r = weak_rep(pr)
    assert (r.gamma, r.delta, r.B1, r.B2) == (0.0, 1.0, 1.0, 2.0)
    assert r.kinks == ()
    assert np.all(r.suffix(pr, ts) == 0.0) and np.all(r.prefix(pr, ts) == 0.0)
    np.testing.assert_allclose(r.represented(pr, ts), ts, rtol=1e-14)
    # v = min(t, 1/2): nu is a unit point mass at the kink
    kinked = prob(INF, 1.0, v=piecewise([0.5], [{"c": 1.0, "alpha": 1.0}, {"c": 0.5}], 1.0))
    r = weak_rep(kinked)
    assert r.gamma == 0.0
    assert r.delta == pytest.approx(0.5, rel=1e-9)
    assert len(r.kinks) == 1
    assert r.kinks[0][0] == pytest.approx(0.5) and r.kinks[0][1] == pytest.approx(1.0)
    np.testing.assert_allclose(r.suffix(kinked, ts), [1.0, 1.0, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(r.prefix(kinked, ts), [0.0, 0.0, 0.5, 0.5], atol=1e-12)
    # v = 1: delta = lim v/U at L, which is 1/L on (0, L) and 0 on the half-line
    r = weak_rep(prob(INF, 1.0, L=INF))
    assert (r.gamma, r.delta) == (1.0, 0.0)
    r = weak_rep(prob(INF, 1.0))
    assert r.gamma == 1.0 and r.delta == pytest.approx(1.0, rel=1e-12)


def test_generic_rep_sandwich():
    pr, rep = weak_from("W1-b")
    assert (rep.B1, rep.B2) == (1.0, 4.0)
    assert verify_weak_rep(pr, rep) <= 1e-9


def test_user_rep_checked():
    pr = prob(INF, 1.0, v=power(1.0))
    good = make_weak_rep(0.0, 1.0, 1.0, B1=1.0, B2=1.0)
    assert weak_rep(pr, "user", good) is good
    with pytest.raises(WeakRepError):
        weak_rep(pr, "user", make_weak_rep(0.0, 3.0, 1.0, B1=1.0, B2=1.0))
    with pytest.raises(WeakRepError):
        weak_rep(pr, "user")


def test_A6_closed_form():
    pr = prob(INF, 1.0, v=power(1.0))
    r = A6(pr, weak_rep(pr))
    assert float(r.value) == pytest.approx(2.0, abs=1e-6)
    assert float(r.limit_term_zero) == pytest.approx(1.0, abs=1e-9)
    assert float(r.limit_term_L) == pytest.approx(1.0, abs=1e-9)
    est = optimal_constant_estimate(pr, weak_rep(pr))
    assert est.case is CaseTag.WEAK_GE1 and float(est.value) == pytest.approx(2.0, abs=1e-6)


def test_A6_user_rep_with_other_constants():
    pr = prob(INF, 1.0, v=power(1.0))
    loose = make_weak_rep(0.0, 1.5, 1.0, B1=1.0, B2=1.5)
    a = float(A6(pr, weak_rep(pr)).value)
    b = float(A6(pr, weak_rep(pr, "user", loose)).value)
    assert 1 / 32 <= b / a <= 32


@pytest.mark.parametrize("name", ["W2-a", "W2-b"])
def test_A8_equivalent_to_A7(name):
    pr, rep = weak_from(name)
    assert assum_xi(pr)
    ratio = float(A8(pr).value) / float(A7(pr, rep).value)
    assert 1 / 32 <= ratio <= 32


def test_A7_A8_under_violation():
    pr = prob(INF, 0.5, v=power(1.0, L=INF), L=INF)
    assert not assum_xi(pr)
    assert math.isinf(float(A7(pr, weak_rep(pr)).value))
    assert float(A8(pr).value) == 0.0


def test_preconditions():
    with pytest.raises(ConstantsError):
        A2(prob(2.0, 2.0))
    with pytest.raises(ConstantsError):
        A6(prob(2.0, 2.0))


# --- homogeneity --------------------------------------------------------------------------

HOMOGENEITY = [
    (lambda w: prob(1.5, 3.0, v=power(-0.5, L=INF), w=w, L=INF), A1, 3.0, None, INF),
    (lambda w: prob(2.0, 1.0, v=power(2.0), w=w), A2, 1.0, None, 1.0),
    (lambda w: prob(0.5, 0.8, v=power(1.0), w=w), A3, 0.8, None, 1.0),
    (lambda w: prob(2.0, 0.5, w=w), A4, 0.5, None, 1.0),
    (lambda w: prob(2.0, 0.5, w=w), A5, 0.5, None, 1.0),
    (lambda w: prob(INF, 1.0, v=power(1.0), w=w), A6, 1.0, "rep", 1.0),
    (lambda w: prob(INF, 0.5, v=power(1.0), w=w), A7, 0.5, "rep", 1.0),
    (lambda w: prob(INF, 0.5, v=power(1.0), w=w), A8, 0.5, None, 1.0),
]


@settings(max_examples=8, deadline=None)
@given(st.sampled_from(range(len(HOMOGENEITY))), st.floats(0.05, 20.0))
def test_homogeneity_in_w(i, lam):
    make, A, q, rep, L = HOMOGENEITY[i]
    base = make(power(0.0, L=L))
    scaled = make(power(0.0, lam, L=L))
    args = (lambda pr: (pr, weak_rep(pr))) if rep else (lambda pr: (pr,))
    a0 = float(A(*args(base)).value)
    a1 = float(A(*args(scaled)).value)
    assert a1 == pytest.approx(lam ** (1 / q) * a0, rel=1e-9)
