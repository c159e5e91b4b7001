"""Built-in scenarios and test data.

Scenarios are plain JSON-able dicts in the CLI schema. The quasiconcave pairs,
covering triples and discretization cases are small dataclasses holding callables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import weights
from .qc import RepMeasure, canonical_rep

SCHEMA_VERSION = 1

ONE = {"type": "power", "alpha": 0.0, "c": 1.0}


def _pow(alpha, c=1.0):
    return {"type": "power", "alpha": alpha, "c": c}


def _scenario(name, case, L, p, q, u, v, w, note="", **extra):
    sc = {"name": name, "case": case, "L": L, "p": p, "q": q, "u": u, "v": v, "w": w, "note": note}
    sc.update(extra)
    return sc


SCENARIOS = [
    _scenario("I-a", "I", 1.0, 2.0, 2.0, ONE, ONE, ONE, "closed form A1 = 1"),
    _scenario("I-b", "I", "inf", 1.5, 3.0, ONE, _pow(-0.5), ONE, "half line, power weights"),
    _scenario("II-a", "II", 1.0, 2.0, 1.0, ONE, _pow(2.0), ONE, "limit term at 0+"),
    _scenario("II-b", "II", 1.0, 3.0, 1.0, ONE, ONE, _pow(-0.5)),
    _scenario("III-a", "III", 1.0, 0.5, 0.5, ONE, ONE, ONE),
    _scenario("III-b", "III", 1.0, 0.5, 0.8, ONE, _pow(1.0), _pow(-0.2)),
    _scenario("IV-a", "IV", 1.0, 2.0, 0.5, ONE, ONE, ONE),
    _scenario("IV-b", "IV", 1.0, 1.5, 0.5, ONE, _pow(-0.5), _pow(1.0)),
    _scenario("W1-a", "WEAK_GE1", 1.0, "inf", 1.0, ONE, _pow(1.0), ONE, "v = t gives phi = v"),
    _scenario("W1-b", "WEAK_GE1", 1.0, "inf", 2.0, ONE,
              {"type": "piecewise", "breaks": [0.5], "pieces": [{"alpha": 1.0}, {"c": 0.5}]},
              _pow(2.0), "v = min(t, 1/2) has a kink", rep={"mode": "generic"}),
    _scenario("W2-a", "WEAK_LT1", 1.0, "inf", 0.5, ONE, _pow(1.0), ONE),
    _scenario("W2-b", "WEAK_LT1", "inf", "inf", 0.5, ONE, _pow(0.5),
              {"type": "piecewise", "breaks": [1.0], "pieces": [{"alpha": 0.0}, {"alpha": -3.0}]}),
    _scenario("DEG", "DEGENERATE", 1.0, 1.0, 1.0, ONE, {"type": "reflected", "alpha": -1.0}, ONE,
              "divergent tail integral"),
    _scenario("LIM-L", "II", "inf", 2.0, 1.0, ONE,
              {"type": "piecewise", "breaks": [1.0], "pieces": [{"alpha": 0.0}, {"alpha": -2.0}]},
              {"type": "piecewise", "breaks": [1.0], "pieces": [{"alpha": 0.0}, {"alpha": -2.0}]},
              "finite V(L) and W(L) give a limit term at L"),
    _scenario("SUB-1", "I", 1.0, 2.0, 2.0, _pow(-0.5), ONE, ONE, "u = t^(-1/2), reduced interval (0, 2)"),
    _scenario("SUB-2", "II", 1.0, 2.0, 1.0, _pow(1.0), _pow(1.0), _pow(1.0), "u = t, reduced interval (0, 1/2)"),
]

SUBSTITUTION = ("SUB-1", "SUB-2")


def scenario(name: str) -> dict:
    for sc in SCENARIOS:
        if sc["name"] == name:
            return dict(sc)
    raise KeyError(name)


# ---------------------------------------------------------------------------
# Quasiconcave pairs and covering triples
# ---------------------------------------------------------------------------

def _t(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class QCPair:
    name: str
    h: Callable
    rho: Callable
    L: float


QC_PAIRS = [
    QCPair("min(1,t) / t", lambda t: np.minimum(1.0, _t(t)), _t, math.inf),
    QCPair("sqrt(t) / t", lambda t: np.sqrt(_t(t)), _t, math.inf),
    QCPair("t/(1+t) / t", lambda t: _t(t) / (1.0 + _t(t)), _t, math.inf),
    QCPair("log(1+t) / t", lambda t: np.log1p(_t(t)), _t, math.inf),
    QCPair("1 + t^(1/3) / t", lambda t: 1.0 + np.cbrt(_t(t)), _t, 1.0),
    QCPair("2t - t^2 / t^2", lambda t: 2 * _t(t) - _t(t) ** 2, lambda t: _t(t) ** 2, 1.0),
]


@dataclass(frozen=True)
class CoveringTriple:
    name: str
    h: Callable
    rho: Callable
    a: float
    x0: float
    L: float


COVERING_TRIPLES = [
    CoveringTriple("sqrt(t), t, a=2", lambda t: np.sqrt(_t(t)), _t, 2.0, 1.0, math.inf),
    CoveringTriple("min(1,t), t, a=2", lambda t: np.minimum(1.0, _t(t)), _t, 2.0, 1.0, math.inf),
    CoveringTriple("constant, t, a=2", lambda t: np.ones_like(_t(t)), _t, 2.0, 0.5, 1.0),
    CoveringTriple("t^(1/3), t, a=3", lambda t: np.cbrt(_t(t)), _t, 3.0, 1.0, math.inf),
    CoveringTriple("t/(1+t), t, a=2", lambda t: _t(t) / (1.0 + _t(t)), _t, 2.0, 1.0, math.inf),
    CoveringTriple("log(1+t), t, a=4", lambda t: np.log1p(_t(t)), _t, 4.0, 1.0, math.inf),
    CoveringTriple("sqrt(t), t, (0,1), a=2", lambda t: np.sqrt(_t(t)), _t, 2.0, 0.25, 1.0),
    CoveringTriple("2t - t^2, t^2, a=2", lambda t: 2 * _t(t) - _t(t) ** 2, lambda t: _t(t) ** 2, 2.0, 0.5, 1.0),
]


# ---------------------------------------------------------------------------
# Discretization cases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscretizationCase:
    """A quasiconcave ``h`` with a representation and two families of test functions.

    ``thm_f`` are quasiconcave with respect to ``rho**p`` (for the sum/integral
    equivalence); ``sup_f`` and ``int_f`` are nonnegative functions, not all
    monotone, for the supremum and integral forms. All families are chosen so that
    every side of the equivalences is finite.
    """

    name: str
    h: Callable
    rho: Callable
    rep: RepMeasure
    L: float
    p: float
    thm_f: tuple
    sup_f: tuple
    int_f: tuple


def broken_power(r, theta1, theta2, rs):
    """``r**theta1 / (1 + (r/rs)**(theta1 - theta2))``: slope ``theta1`` below ``rs``, ``theta2`` above."""
    r = np.asarray(r, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        return r**theta1 / (1.0 + (r / rs) ** (theta1 - theta2))


def _thm_family(rho, p, shapes):
    """Broken powers of ``rho**p``; with ``0 <= theta2 <= theta1 <= 1`` they lie in ``Q_{rho**p}``."""
    r = lambda t: np.asarray(rho(_t(t)), dtype=float) ** p
    return tuple(lambda t, a=a, b=b, s=s: broken_power(r(t), a, b, s) for a, b, s in shapes)


def _lemma_family(rho, p, shapes):
    """Broken powers of ``rho**(1/p)``, half of them modulated by a bounded oscillating factor."""
    r = lambda t: np.asarray(rho(_t(t)), dtype=float) ** (1.0 / p)
    out = []
    for i, (a, b, s) in enumerate(shapes):
        if i % 2:
            out.append(lambda t, a=a, b=b, s=s: broken_power(r(t), a, b, s) * (1.5 + np.sin(np.log(r(t)))))
        else:
            out.append(lambda t, a=a, b=b, s=s: broken_power(r(t), a, b, s))
    return tuple(out)


def _shapes(center, spread, anchors):
    """Slopes ``center + d1`` below and ``center - d2`` above each anchor.

    Spacing of the covering sequence is a large power of ``a``; keeping the slopes of
    the summands within ``spread`` of the critical exponent keeps every sum finite
    and makes the comparison insensitive to where the sequence points fall.
    """
    mult = [(1.0, 1.0), (0.5, 1.0), (1.0, 0.5), (0.3, 0.8), (0.8, 0.3),
            (0.6, 0.6), (1.0, 0.2), (0.2, 1.0), (0.4, 0.9), (0.9, 0.4)]
    return [(center + spread * m1, center - spread * m2, s) for (m1, m2), s in zip(mult, anchors)]


def discretization_cases() -> list[DiscretizationCase]:
    """Two fundamental functions with exact representations and two canonical pairs.

    Per case the summands behave like powers of ``t`` near the ends; ``thm``, ``sup``
    and ``int`` give the critical slopes (in units of ``rho**p`` and ``rho**(1/p)``)
    and the allowed deviation from them.
    """
    from .constants import phi_rep

    anchors = [0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.02, 0.2, 0.6]
    wide = [1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0, 0.03, 30.0]
    cases = []
    # near 0, h/rho ~ rho**(-1/2) for I-a and rho**(-2/3) for II-b
    for name, p, thm, sup, intg in [("I-a", 2.0, (0.5, 0.08), (0.5, 0.15), (-0.5, 0.15)),
                                     ("II-b", 3.0, (2 / 3, 0.03), (2 / 3, 0.09), (-1 / 3, 0.09))]:
        prob = problem_from_scenario(scenario(name))
        rho = lambda t, prob=prob: prob.U(t) ** prob.p
        rs = [float(rho(a * prob.L)) ** p for a in anchors]
        ls = [float(rho(a * prob.L)) ** (1 / p) for a in anchors]
        cases.append(DiscretizationCase(f"phi of {name}", prob.phi, rho, phi_rep(prob), prob.L, p,
                                        _thm_family(rho, p, _shapes(*thm, rs)),
                                        _lemma_family(rho, p, _shapes(*sup, ls)),
                                        _lemma_family(rho, p, _shapes(*intg, ls))))
    # min(1,t) has a three-point sequence; for sqrt(t), h/rho = rho**(-1/2)
    for pair, p, thm, sup, intg in [(QC_PAIRS[0], 1.0, (0.5, 0.4), (0.5, 0.4), (-0.5, 0.4)),
                                     (QC_PAIRS[1], 2.0, (0.5, 0.06), (0.5, 0.12), (-1.5, 0.12))]:
        rs = [a**p for a in wide]
        ls = [a ** (1 / p) for a in wide]
        cases.append(DiscretizationCase(f"{pair.name}, p={p:g}", pair.h, pair.rho,
                                        canonical_rep(pair.h, pair.rho, pair.L), pair.L, p,
                                        _thm_family(pair.rho, p, _shapes(*thm, rs)),
                                        _lemma_family(pair.rho, p, _shapes(*sup, ls)),
                                        _lemma_family(pair.rho, p, _shapes(*intg, ls))))
    return cases


# ---------------------------------------------------------------------------
# Scenario parsing
# ---------------------------------------------------------------------------

class ScenarioError(ValueError):
    """Invalid scenario; the message starts with the offending field path."""


def _ext(x, path, allow_inf=True):
    if isinstance(x, str) and x.lower() in ("inf", "infinity") and allow_inf:
        return math.inf
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {x!r}")
    return float(x)


def problem_from_scenario(sc: dict):
    """Build the :class:`EmbeddingProblem` of a scenario dict."""
    from .constants import ConstantsError, EmbeddingProblem

    if not isinstance(sc, dict):
        raise ScenarioError("scenario: expected an object")
    for key in ("L", "p", "q", "u", "v", "w"):
        if key not in sc:
            raise ScenarioError(f"scenario.{key}: missing")
    L = _ext(sc["L"], "scenario.L")
    p = _ext(sc["p"], "scenario.p")
    q = _ext(sc["q"], "scenario.q", allow_inf=False)
    if not L > 0:
        raise ScenarioError("scenario.L: must be positive")
    ws = {}
    for key in ("u", "v", "w"):
        try:
            ws[key] = weights.from_json(sc[key], L, path=f"scenario.{key}")
        except weights.WeightError as e:
            raise ScenarioError(str(e)) from None
        try:
            # building the primitive checks 0 < W(t) < inf
            weights.primitive(ws[key])
        except weights.WeightError as e:
            raise ScenarioError(f"scenario.{key}: {e}") from None
    try:
        return EmbeddingProblem(L, p, q, ws["u"], ws["v"], ws["w"], label=str(sc.get("name", "")))
    except weights.WeightError as e:
        raise ScenarioError(f"scenario.u: {e}") from None
    except ConstantsError as e:
        field = "scenario.p" if str(e).startswith("p ") else "scenario.q" if str(e).startswith("q ") else "scenario"
        raise ScenarioError(f"{field}: {e}") from None
