"""Brute-force ground truth: Lambda and Gamma norms of step functions and a search for
the norm ratio that bounds the optimal embedding constant from below.

A nonnegative function enters only through its nonincreasing rearrangement, which is
represented by a :class:`StepFunction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .constants import CaseTag, EmbeddingProblem, classify
from .quad import (
    INF,
    ExtValue,
    LogMap,
    NonEvaluableIntegrand,
    RunningIntegral,
    composite_nodes,
    ext_div,
    ext_pow,
    integrate,
    log_grid,
)
from .weights import Primitive, WeightSpec, custom, eval_weight, power

DEFAULT_RESTARTS = 8
PHASE1_POINTS = 256


@dataclass(frozen=True)
class StepFunction:
    """``f* = sum c_i chi_[t_{i-1}, t_i)`` with ``t_0 = 0``; zero beyond the last break."""

    breaks: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        c = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or b.shape != c.shape or b.size == 0:
            raise ValueError("breaks and values must be nonempty sequences of equal length")
        if not (b[0] > 0 and np.all(np.diff(b) > 0)):
            raise ValueError("breaks must be positive and strictly increasing")
        if np.any(c < 0) or np.any(np.diff(c) > 0):
            raise ValueError("values must be nonnegative and nonincreasing")
        object.__setattr__(self, "breaks", tuple(float(x) for x in b))
        object.__setattr__(self, "values", tuple(float(x) for x in c))

    @classmethod
    def indicator(cls, a: float, c: float = 1.0) -> "StepFunction":
        return cls((float(a),), (float(c),))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        b = np.asarray(self.breaks)
        c = np.concatenate([self.values, [0.0]])
        out = c[np.searchsorted(b, t, side="right")]
        return out[()] if out.ndim == 0 else out

    def refine(self, i: int, point: float) -> "StepFunction":
        """Split piece ``i`` at ``point`` without changing the function."""
        lo = 0.0 if i == 0 else self.breaks[i - 1]
        if not lo < point < self.breaks[i]:
            raise ValueError("split point must lie inside the piece")
        return StepFunction(self.breaks[:i] + (point,) + self.breaks[i:],
                            self.values[:i] + (self.values[i],) + self.values[i:])

    def summary(self) -> dict:
        return {"pieces": len(self.breaks), "support": self.breaks[-1], "max": self.values[0],
                "breaks": list(self.breaks), "values": list(self.values)}


@lru_cache(maxsize=128)
def _primitive(w: WeightSpec) -> Primitive:
    return Primitive(w)


def _pieces(f: StepFunction, L: float):
    """``(lo, hi, value)`` for every piece of ``f`` including the zero tail."""
    edges = [0.0, *f.breaks]
    out = [(edges[i], edges[i + 1], f.values[i]) for i in range(len(f.values))]
    if f.breaks[-1] < L:
        out.append((f.breaks[-1], L, 0.0))
    return out


def _sup_on(g: Callable, a: float, b: float, n: int = 128) -> float:
    """Supremum of ``g`` over ``(a, b)`` by a log-coordinate scan with local refinement."""
    m = LogMap(a, b)
    lo, hi = m.x_limits()
    lo, hi = max(lo, -30.0), min(hi, 30.0)
    xs = np.linspace(lo, hi, n)
    with np.errstate(all="ignore"):
        ys = np.asarray(g(m.t(xs)), dtype=float)
    ys = np.where(np.isnan(ys), 0.0, ys)
    i = int(np.argmax(ys))
    best = ys[i]
    if np.isinf(best):
        return INF
    l, r = xs[max(i - 1, 0)], xs[min(i + 1, n - 1)]
    for _ in range(40):
        sub = np.linspace(l, r, 9)
        with np.errstate(all="ignore"):
            sv = np.asarray(g(m.t(sub)), dtype=float)
        sv = np.where(np.isnan(sv), 0.0, sv)
        j = int(np.argmax(sv))
        best = max(best, sv[j])
        width = (r - l) / 8
        l, r = sub[j] - width, sub[j] + width
        if width < 1e-10:
            break
    return float(best)


def lambda_norm(f: StepFunction, q: float, w: WeightSpec) -> ExtValue:
    """``(sum c_i**q (W(t_i) - W(t_{i-1})))**(1/q)``; for ``q = inf`` the weighted esssup."""
    if f.breaks[-1] > w.L:
        raise ValueError("step function extends beyond L")
    if math.isinf(q):
        best = 0.0
        for lo, hi, c in _pieces(f, w.L):
            if c > 0:
                best = max(best, c * _sup_on(lambda s: eval_weight(w, s), lo, hi))
        return ExtValue(best)
    W = _primitive(w)
    b = np.concatenate([[0.0], f.breaks])
    dW = np.diff(W(b))
    total = float(np.sum(ext_pow(np.asarray(f.values), q) * dW))
    return ExtValue(total) ** (1.0 / q)


def _F(f: StepFunction, U: Primitive, t):
    """``int_0^t f* u`` (vectorised)."""
    t = np.asarray(t, dtype=float)
    b = np.concatenate([[0.0], f.breaks])
    c = np.asarray(f.values)
    Ub = U(b)
    cum = np.concatenate([[0.0], np.cumsum(c * np.diff(Ub))])
    j = np.searchsorted(f.breaks, t, side="right")
    cj = np.concatenate([c, [0.0]])[j]
    return np.maximum(cum[j] + cj * (U(t) - Ub[np.minimum(j, len(c))]), 0.0)


def f_double_star(f: StepFunction, u: WeightSpec, t):
    """``(1/U(t)) int_0^t f* u``."""
    U = _primitive(u)
    out = ext_div(_F(f, U, t), U(t))
    return out[()] if np.ndim(out) == 0 else out


def gamma_norm(f: StepFunction, p: float, u: WeightSpec, v: WeightSpec) -> ExtValue:
    """``|| f** v ||`` in ``L^p`` (``p < inf``, quadrature per piece) or the weighted sup."""
    L = v.L
    if f.breaks[-1] > L:
        raise ValueError("step function extends beyond L")
    g = lambda s: f_double_star(f, u, s)
    points = sorted(set(u.breaks) | set(v.breaks))
    if math.isinf(p):
        best = 0.0
        for lo, hi, _ in _pieces(f, L):
            best = max(best, _sup_on(lambda s: g(s) * eval_weight(v, s), lo, hi))
        return ExtValue(best)
    total = 0.0
    for lo, hi, _ in _pieces(f, L):
        try:
            res = integrate(lambda s: ext_pow(g(s), p) * eval_weight(v, s), lo, hi, abs_tol=1e-300,
                            points=[x for x in points if lo < x < hi])
            total += res.value.value
        except NonEvaluableIntegrand:
            total = INF
        if math.isinf(total):
            break
    return ExtValue(total) ** (1.0 / p)


def norm_ratio(f: StepFunction, prob: EmbeddingProblem) -> ExtValue:
    """``||f||_Lambda / ||f||_Gamma`` under the extended conventions."""
    return lambda_norm(f, prob.q, prob.w) / gamma_norm(f, prob.p, prob.u, prob.v)


# ---------------------------------------------------------------------------
# Fast evaluator used inside the search
# ---------------------------------------------------------------------------

class _FastRatio:
    """Ratio with the exact Lambda norm and the Gamma norm on a fixed composite rule.

    Break points are passed both as ``t`` and as ``y = U(t)``.
    """

    def __init__(self, prob: EmbeddingProblem):
        self.prob = prob
        t, wts, _ = composite_nodes(prob.L, step=0.25, order=8, points=prob.breaks)
        self.t = t
        self.U_t = prob.U(t)
        self.v_t = eval_weight(prob.v, t)
        self.vw = self.v_t * wts
        self.count = 0

    def __call__(self, bt, by, c) -> float:
        self.count += 1
        prob = self.prob
        q, p = prob.q, prob.p
        Wb = prob.W(bt)
        lam = float(np.sum(c**q * np.diff(Wb, prepend=0.0))) ** (1 / q)
        Ub = np.concatenate([[0.0], by])
        cum = np.concatenate([[0.0], np.cumsum(c * np.diff(Ub))])
        idx = np.searchsorted(self.t, bt, side="left")
        j = np.repeat(np.arange(len(c) + 1), np.diff(idx, prepend=0, append=len(self.t)))
        cj = np.concatenate([c, [0.0]])[j]
        F = cum[j] + cj * (self.U_t - Ub[np.minimum(j, len(c))])
        fss = np.maximum(F, 0.0) / self.U_t
        if math.isinf(p):
            gam = float(np.max(fss * self.v_t))
        else:
            with np.errstate(over="ignore"):
                gam = float(np.sum(fss**p * self.vw)) ** (1 / p)
        if gam == 0:
            return 0.0 if lam == 0 else INF
        return lam / gam


@dataclass(frozen=True)
class OracleResult:
    C_lb: ExtValue
    witness: StepFunction
    phase1: ExtValue
    evaluations: int
    seed: int
    skipped: bool = False

    def __iter__(self):
        return iter((self.C_lb, self.witness))


def _phase1(prob: EmbeddingProblem):
    """Best indicator ``chi_[0, t)``; its ratio is ``W(t)**(1/q) / phi(t)**(1/p)``."""
    y = _y_grid(prob, PHASE1_POINTS)
    t = _to_t(prob, y)
    t = t[(t > 0) & (t < prob.L)]
    W = prob.W(t)
    phi = prob.fundamental(t)
    with np.errstate(all="ignore"):
        r = ext_div(ext_pow(W, 1 / prob.q), ext_pow(phi, 1 / prob.p) if not prob.weak else phi)
    r = np.where(np.isnan(r), 0.0, r)
    i = int(np.argmax(r))
    return float(r[i]), float(t[i])


def _UL(prob):
    return prob.U.value_at_L.value


def _y_grid(prob, n):
    return log_grid(_UL(prob), n, 12.0)


def _to_t(prob, y):
    y = np.asarray(y, dtype=float)
    if not prob.u.is_custom and len(prob.u.pieces) == 1 and prob.u.pieces[0].alpha == 0 \
            and prob.u.pieces[0].beta == 0 and prob.u.pieces[0].c == 1:
        return y
    return prob.U.inverse(y)


def oracle_lower_bound(prob: EmbeddingProblem, n_steps: int = 64, budget: int = 20000, seed: int = 0,
                       restarts: int = DEFAULT_RESTARTS) -> OracleResult:
    """Lower bound for the optimal constant by maximizing the norm ratio over step functions.

    Phase 1 scans indicators ``chi_[0, t)``; phase 2 runs coordinate ascent over
    ``n_steps``-piece functions from one warm start and ``restarts - 1`` random starts.
    Break points are parametrized by ``U(t)`` in log coordinates, so a problem and its
    substitution ``u = 1`` follow the same search path.
    """
    if classify(prob) is CaseTag.DEGENERATE:
        return OracleResult(ExtValue(0.0), StepFunction.indicator(prob.midpoint), ExtValue(0.0), 0, seed, True)
    best1, t1 = _phase1(prob)
    witness = StepFunction.indicator(min(t1, prob.L))
    if best1 == 0:
        return OracleResult(ExtValue(0.0), witness, ExtValue(0.0), PHASE1_POINTS, seed)
    fast = _FastRatio(prob)
    UL = _UL(prob)
    m = LogMap(0.0, UL)
    X = 12.0 * math.log(10.0)
    xlo, xhi = -X, X
    y1 = float(prob.U(t1))
    x1 = float(m.x(min(y1, UL * (1 - 1e-12)) if math.isfinite(UL) else y1))

    def build(xs, logc):
        xs = np.clip(np.sort(xs), xlo, xhi)
        by = m.t(xs)
        bt = _to_t(prob, by)
        keep = np.concatenate([[True], np.diff(bt) > 0]) & (bt > 0) & (bt <= prob.L)
        c = np.minimum.accumulate(np.exp(logc - np.max(logc)))
        return bt[keep], by[keep], c[keep]

    def score(xs, logc):
        bt, by, c = build(xs, logc)
        if bt.size == 0:
            return 0.0
        r = fast(bt, by, c)
        return r if np.isfinite(r) else 0.0

    per_restart = max(budget // restarts, 1)
    children = np.random.SeedSequence(seed).spawn(restarts)
    best_val, best_f = -1.0, None
    for k in range(restarts):
        rng = np.random.default_rng(children[k])
        if k == 0:
            xs = np.linspace(x1 - 12.0, x1, n_steps)
            logc = np.zeros(n_steps)
        else:
            xs = np.sort(rng.uniform(xlo, xhi, n_steps))
            logc = -np.cumsum(rng.exponential(1.0, n_steps))
        steps = np.concatenate([np.full(n_steps, 1.0), np.full(n_steps, 0.5)])
        cur = score(xs, logc)
        used = 1
        while used < per_restart and np.max(steps) > 1e-4:
            improved = False
            for idx in rng.permutation(2 * n_steps):
                if used >= per_restart:
                    break
                for sign in (1.0, -1.0):
                    nx, nc = xs.copy(), logc.copy()
                    if idx < n_steps:
                        nx[idx] += sign * steps[idx]
                    else:
                        nc[idx - n_steps] += sign * steps[idx]
                        nc = np.minimum.accumulate(nc)
                    val = score(nx, nc)
                    used += 1
                    if val > cur:
                        xs, logc, cur = np.sort(nx), nc, val
                        steps[idx] *= 1.5
                        improved = True
                        break
                else:
                    steps[idx] *= 0.5
            if not improved:
                steps *= 0.5
        if cur > best_val:
            best_val = cur
            best_f = build(xs, logc)
    total_evals = fast.count + PHASE1_POINTS
    C = best1
    if best_f is not None and best_f[0].size:
        cand = StepFunction(tuple(best_f[0]), tuple(best_f[2]))
        exact = norm_ratio(cand, prob).value
        if exact > C:
            C, witness = exact, cand
    return OracleResult(ExtValue(C), witness, ExtValue(best1), total_evals, seed)


# ---------------------------------------------------------------------------
# Kernel form and substitution
# ---------------------------------------------------------------------------

def direct_ratio(fstar: Callable, prob: EmbeddingProblem, points=()) -> ExtValue:
    """Norm ratio for a general nonincreasing ``f*`` (vectorised callable), by quadrature."""
    p, q = prob.p, prob.q
    if math.isinf(p):
        raise ValueError("direct_ratio needs p < inf")
    pts = tuple(sorted(set(points) | set(prob.breaks)))
    F = RunningIntegral(lambda s: fstar(s) * eval_weight(prob.u, s), prob.L, pts)
    num = integrate(lambda t: ext_pow(fstar(t), q) * eval_weight(prob.w, t), 0.0, prob.L, points=pts,
                    abs_tol=1e-300).value ** (1 / q)
    den = integrate(lambda t: ext_pow(ext_div(F.left(t), prob.U(t)), p) * eval_weight(prob.v, t), 0.0,
                    prob.L, points=pts, abs_tol=1e-300).value ** (1 / p)
    return num / den


def kernel_ratio(h: Callable, prob: EmbeddingProblem, points=(), step: float = 0.1) -> ExtValue:
    """Ratio of ``(int (int_t^L h)^q w)^(1/q)`` to ``(int (int U(s) h(s)/(U(s)+U(t)) ds)^p v)^(1/p)``."""
    p, q = prob.p, prob.q
    if math.isinf(p):
        raise ValueError("kernel_ratio needs p < inf")
    pts = tuple(sorted(set(points) | set(prob.breaks)))
    s, ws, _ = composite_nodes(prob.L, step=step, order=8, points=pts)
    hs = np.asarray(h(s), dtype=float) * ws
    if not np.any(hs > 0):
        return ExtValue(0.0)
    tail = np.concatenate([np.cumsum(hs[::-1])[::-1], [0.0]])
    # int_t^L h at the nodes themselves: half of the own node weight is a midpoint correction
    H = tail[1:] + 0.5 * hs
    Us = prob.U(s)
    num = float(np.sum(ext_pow(H, q) * eval_weight(prob.w, s) * ws)) ** (1 / q)
    inner = np.empty_like(s)
    for i0 in range(0, s.size, 512):
        Ut = Us[i0:i0 + 512, None]
        inner[i0:i0 + 512] = (Us[None, :] / (Us[None, :] + Ut)) @ hs
    den = float(np.sum(ext_pow(inner, p) * eval_weight(prob.v, s) * ws)) ** (1 / p)
    return ExtValue(num) / ExtValue(den)


def _is_unit(u: WeightSpec) -> bool:
    return (not u.is_custom and len(u.pieces) == 1 and u.pieces[0].alpha == 0 and u.pieces[0].beta == 0
            and u.pieces[0].c == 1)


def _transport(w: WeightSpec, prob: EmbeddingProblem, L_new: float, label: str) -> WeightSpec:
    U, u = prob.U, prob.u
    Wp = _primitive(w)
    inv = U.inverse

    def density(y):
        t = inv(y)
        return ext_div(eval_weight(w, t), eval_weight(u, t))

    def prim(y):
        return Wp(inv(y))

    deriv = None
    if (not w.is_custom or w.custom_derivative is not None) and (not u.is_custom or u.custom_derivative is not None):
        def deriv(y):
            t = inv(y)
            ut = eval_weight(u, t)
            return (w.derivative(t) / ut - eval_weight(w, t) * u.derivative(t) / ut**2) / ut

    breaks = tuple(float(U(b)) for b in w.breaks + u.breaks if 0 < b < prob.L)
    return custom(density, L=L_new, primitive=prim, breaks=tuple(sorted(set(breaks))), label=label,
                  derivative=deriv)


def reduce_to_unit_u(prob: EmbeddingProblem) -> EmbeddingProblem:
    """The same problem after the substitution ``t -> U^{-1}(t)``: ``u = 1`` on ``(0, U(L))``."""
    if _is_unit(prob.u):
        return prob
    L_new = prob.U.value_at_L.value
    one = power(0.0, 1.0, L_new)
    return EmbeddingProblem(L_new, prob.p, prob.q, one, _transport(prob.v, prob, L_new, "v"),
                            _transport(prob.w, prob, L_new, "w"), label=f"{prob.label} (u = 1)")
