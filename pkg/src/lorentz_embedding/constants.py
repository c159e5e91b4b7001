"""Characterizations of the optimal constant of ``Gamma^p_u(v) -> Lambda^q(w)``.

An :class:`EmbeddingProblem` bundles ``(L, p, q, u, v, w)``. The functions ``A1`` to
``A8`` evaluate the expressions that are equivalent to the optimal constant in the
respective ranges of ``(p, q)``; :func:`optimal_constant_estimate` dispatches on the case.
All arithmetic follows the extended conventions ``0 * inf = 0``, ``x / inf = 0`` and
``x / 0 = inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np

from .qc import RepMeasure, canonical_rep, is_quasiconcave, represented_function, verify_representation
from .quad import (
    INF,
    ExtValue,
    LimitNotResolved,
    LogMap,
    NonEvaluableIntegrand,
    RunningIntegral,
    composite_nodes,
    ext_div,
    ext_mul,
    ext_pow,
    integrate,
    limit_at_endpoint,
    log_grid,
    sup_search,
)
from .weights import Primitive, WeightError, WeightSpec, eval_weight, is_admissible, tail_integral

INTEGRAL_REL_TOL = 1e-10
ENVELOPE_POINTS = 2048


class ConstantsError(ValueError):
    pass


class CaseTag(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    WEAK_GE1 = "WEAK_GE1"
    WEAK_LT1 = "WEAK_LT1"
    DEGENERATE = "DEGENERATE"


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _arr(g, t):
    with np.errstate(all="ignore"):
        y = np.asarray(g(np.asarray(t, dtype=float)), dtype=float)
    if y.shape != np.shape(t):
        y = np.broadcast_to(y, np.shape(t)).astype(float)
    return y


def _prod(*factors):
    """``prod a_i ** e_i`` for nonnegative extended arrays, evaluated in log space.

    A factor that evaluates to 0 (``a = 0`` with ``e > 0`` or ``a = inf`` with ``e < 0``)
    makes the product 0, otherwise any infinite factor makes it infinite.
    """
    shape = np.broadcast_shapes(*(np.shape(a) for a, _ in factors))
    logsum = np.zeros(shape)
    zero = np.zeros(shape, dtype=bool)
    inf = np.zeros(shape, dtype=bool)
    for a, e in factors:
        if e == 0:
            continue
        a = np.broadcast_to(np.asarray(a, dtype=float), shape)
        a = np.where(np.isnan(a), 0.0, np.maximum(a, 0.0))
        small = a == 0
        big = np.isinf(a)
        zero |= (small & (e > 0)) | (big & (e < 0))
        inf |= (small & (e < 0)) | (big & (e > 0))
        with np.errstate(divide="ignore", invalid="ignore"):
            la = np.where(small | big, 0.0, np.log(np.where(small | big, 1.0, a)))
        logsum = logsum + e * la
    with np.errstate(over="ignore"):
        out = np.exp(logsum)
    out = np.where(inf, INF, out)
    out = np.where(zero, 0.0, out)
    return out[()] if out.ndim == 0 else out


def _limit(g, endpoint, L, fallback):
    try:
        return limit_at_endpoint(g, endpoint, L).value
    except (LimitNotResolved, NonEvaluableIntegrand, FloatingPointError):
        return float(fallback)


def _integral(f, L, points=()) -> ExtValue:
    """``int_0^L f`` for a nonnegative extended integrand; infinite samples give ``inf``."""
    probe = _arr(f, log_grid(L, 64, 6.0))
    if np.any(np.isinf(probe)):
        return ExtValue(INF)
    try:
        res = integrate(f, 0.0, L, rel_tol=INTEGRAL_REL_TOL, abs_tol=1e-300, points=points)
    except NonEvaluableIntegrand:
        return ExtValue(INF)
    return res.value


class Envelope:
    """Running supremum of ``g`` over ``[t, L)`` (``side="right"``) or ``(0, t]`` (``"left"``).

    Built on a log grid; local maxima are refined by golden-section search and the
    one-sided limits at both ends are included, so between nodes the envelope is
    ``max(g(t), best node beyond t)``.
    """

    def __init__(self, g: Callable, L: float, side: str, breaks=(), n: int = ENVELOPE_POINTS,
                 span: float = 12.0):
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        self.g, self.L, self.side = g, float(L), side
        m = LogMap(0.0, L)
        X = span * math.log(10.0)
        xs = np.linspace(-X, X, n)
        bx = [float(m.x(b)) for b in breaks if 0 < b < L]
        bx = [x for x in bx if -X < x < X]
        if bx:
            bx = np.asarray(bx)
            xs = np.unique(np.concatenate([xs, bx - 1e-9, bx, bx + 1e-9]))
        ys = self._g(m.t(xs))
        extra_x, extra_y = [], []
        peaks = np.flatnonzero((ys[1:-1] > ys[:-2]) & (ys[1:-1] > ys[2:]) & np.isfinite(ys[1:-1])) + 1
        if len(peaks) > 64:
            peaks = peaks[np.argsort(ys[peaks])[-64:]]
        for i in peaks:
            x, y = self._golden(m, xs[i - 1], xs[i + 1])
            extra_x.append(x)
            extra_y.append(y)
        if extra_x:
            xs = np.concatenate([xs, extra_x])
            ys = np.concatenate([ys, extra_y])
            order = np.argsort(xs)
            xs, ys = xs[order], ys[order]
        self.nodes = m.t(xs)
        self.values = ys
        self.lim0 = max(_limit(self._g, "zero", L, ys[0]), 0.0)
        self.limL = max(_limit(self._g, "L", L, ys[-1]), 0.0)
        if side == "right":
            acc = np.maximum.accumulate(ys[::-1])[::-1]
            self._acc = np.maximum(np.concatenate([acc, [0.0]]), self.limL)
        else:
            acc = np.maximum.accumulate(ys)
            self._acc = np.maximum(np.concatenate([[0.0], acc]), self.lim0)

    def _g(self, t):
        y = _arr(self.g, t)
        return np.where(np.isnan(y), 0.0, y)

    def _golden(self, m, a, b, iters=80):
        r = (math.sqrt(5) - 1) / 2
        c, d = b - r * (b - a), a + r * (b - a)
        fc, fd = float(self._g(m.t(c))), float(self._g(m.t(d)))
        for _ in range(iters):
            if fc >= fd:
                b, d, fd = d, c, fc
                c = b - r * (b - a)
                fc = float(self._g(m.t(c)))
            else:
                a, c, fc = c, d, fd
                d = a + r * (b - a)
                fd = float(self._g(m.t(d)))
            if b - a < 1e-12:
                break
        return (c, fc) if fc >= fd else (d, fd)

    @property
    def sup(self) -> float:
        """Supremum over the whole interval, endpoint limits included."""
        return float(max(np.max(self.values), self.lim0, self.limL))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        gt = self._g(t)
        if self.side == "right":
            j = np.searchsorted(self.nodes, t, side="right")
        else:
            j = np.searchsorted(self.nodes, t, side="left")
        out = np.maximum(gt, self._acc[j])
        return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Problem and case classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmbeddingProblem:
    """The embedding ``Gamma^p_u(v) -> Lambda^q(w)`` on ``(0, L)``."""

    L: float
    p: float
    q: float
    u: WeightSpec
    v: WeightSpec
    w: WeightSpec
    label: str = ""

    def __post_init__(self):
        if not self.p > 0:
            raise ConstantsError(f"p must be in (0, inf], got {self.p}")
        if not (0 < self.q < INF):
            raise ConstantsError(f"q must be in (0, inf), got {self.q}")
        for name in ("u", "v", "w"):
            if getattr(self, name).L != self.L:
                raise ConstantsError(f"weight {name} lives on (0, {getattr(self, name).L}), not (0, {self.L})")
        if not is_admissible(self.U):
            raise WeightError("u is not admissible: U must be positive, increasing and continuous")

    @cached_property
    def U(self) -> Primitive:
        return Primitive(self.u)

    @cached_property
    def V(self) -> Primitive:
        return Primitive(self.v)

    @cached_property
    def W(self) -> Primitive:
        return Primitive(self.w)

    @property
    def weak(self) -> bool:
        return math.isinf(self.p)

    @property
    def r(self) -> float:
        if not self.p > self.q or self.weak:
            raise ConstantsError("r = pq/(p - q) needs q < p < inf")
        return self.p * self.q / (self.p - self.q)

    @cached_property
    def breaks(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.u.breaks) | set(self.v.breaks) | set(self.w.breaks)))

    @property
    def midpoint(self) -> float:
        return self.L / 2 if math.isfinite(self.L) else 1.0

    # strong case -----------------------------------------------------------
    def T(self, t):
        """``int_t^L v U**-p``."""
        return tail_integral(self.v, self.U, self.p, t)

    def phi(self, t):
        """Fundamental function ``V + U**p T``."""
        t = np.asarray(t, dtype=float)
        out = self.V(t) + ext_mul(ext_pow(self.U(t), self.p), self.T(t))
        return out[()] if np.ndim(out) == 0 else out

    @cached_property
    def phi_limit_zero(self) -> float:
        """``lim_{t->0+} phi / U**p``: limit of ``V/U**p`` plus ``T(0+)``."""
        T0 = float(self.T(0.0))
        if math.isinf(T0):
            return INF
        ratio = lambda s: ext_div(self.V(s), ext_pow(self.U(s), self.p))
        return _limit(ratio, "zero", self.L, float(ratio(np.asarray(1e-12 * self.midpoint)))) + T0

    @cached_property
    def phi_limit_L(self) -> float:
        """``lim_{t->L-} phi``, which equals ``V(L)`` since ``U**p T <= V(L) - V``."""
        return self.V.value_at_L.value

    # xi and the assumW integral ----------------------------------------------
    def _xi_integrand(self, s):
        q = self.q
        return _prod((self.W(s), q / (1 - q)), (eval_weight(self.w, s), 1.0), (self.U(s), -q / (1 - q)))

    @cached_property
    def _xi_table(self) -> RunningIntegral:
        if self.q >= 1:
            raise ConstantsError("xi needs q < 1")
        return RunningIntegral(self._xi_integrand, self.L, self.breaks)

    def S(self, t):
        """``int_t^L W**(q/(1-q)) w U**(-q/(1-q))``."""
        out = self._xi_table.right(np.asarray(t, dtype=float))
        return out[()] if np.ndim(out) == 0 else out

    @cached_property
    def S0(self) -> float:
        return float(self.S(0.0))

    @cached_property
    def W_L(self) -> float:
        return self.W.value_at_L.value

    # weak case ----------------------------------------------------------------
    @cached_property
    def _v_left(self) -> Envelope:
        return Envelope(lambda s: eval_weight(self.v, s), self.L, "left", self.breaks)

    @cached_property
    def _v_over_U_right(self) -> Envelope:
        return Envelope(lambda s: ext_div(eval_weight(self.v, s), self.U(s)), self.L, "right", self.breaks)

    def phi_weak(self, t):
        """``sup_s v(s) min{1, U(t)/U(s)}``."""
        t = np.asarray(t, dtype=float)
        out = np.maximum(self._v_left(t), ext_mul(self.U(t), self._v_over_U_right(t)))
        return out[()] if np.ndim(out) == 0 else out

    def fundamental(self, t):
        return self.phi_weak(t) if self.weak else self.phi(t)


def classify(prob: EmbeddingProblem) -> CaseTag:
    """Case tag; a divergent tail at the midpoint makes the problem degenerate."""
    p, q = prob.p, prob.q
    if prob.weak:
        if math.isinf(float(prob.phi_weak(prob.midpoint))):
            return CaseTag.DEGENERATE
        return CaseTag.WEAK_GE1 if q >= 1 else CaseTag.WEAK_LT1
    if math.isinf(float(prob.T(prob.midpoint))):
        return CaseTag.DEGENERATE
    if q >= 1:
        return CaseTag.I if p <= q else CaseTag.II
    return CaseTag.III if p <= q else CaseTag.IV


def fundamental_phi(prob: EmbeddingProblem, t) -> float:
    if prob.weak:
        raise ConstantsError("fundamental_phi needs p < inf; use phi_weak")
    return prob.phi(t)


def phi_rep(prob: EmbeddingProblem) -> RepMeasure:
    """Exact representation of ``phi`` with respect to ``U**p``: ``nu`` has density ``v/U**p``."""
    p = prob.p
    return RepMeasure(
        0.0, 0.0, prob.L,
        density=lambda s: ext_div(eval_weight(prob.v, s), ext_pow(prob.U(s), p)),
        density_breaks=prob.breaks,
        moment=prob.V, tail=prob.T,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantReport:
    """An A-constant split into its endpoint-limit terms and its main term.

    ``value`` is always ``limit_term_zero + limit_term_L + integral_term``; for the
    single-expression constants the main term carries the whole value.
    """

    case: CaseTag
    name: str
    value: ExtValue
    limit_term_zero: ExtValue
    limit_term_L: ExtValue
    integral_term: ExtValue
    auxiliary: dict = field(default_factory=dict, compare=False)

    @property
    def A_value(self) -> ExtValue:
        return self.value

    def recombined(self) -> ExtValue:
        return self.limit_term_zero + self.limit_term_L + self.integral_term

    def to_json(self) -> dict:
        def num(x):
            x = float(x)
            return "inf" if math.isinf(x) else x

        aux = {}
        for k, val in self.auxiliary.items():
            if isinstance(val, (bool, str)) or val is None:
                aux[k] = val
            elif isinstance(val, (list, tuple, np.ndarray)):
                aux[k] = [num(x) for x in val]
            else:
                aux[k] = num(val)
        return {
            "case": self.case.value, "name": self.name, "value": num(self.value),
            "limit_term_zero": num(self.limit_term_zero), "limit_term_L": num(self.limit_term_L),
            "integral_term": num(self.integral_term), "auxiliary": aux,
        }


def _report(prob, name, zero=0.0, atL=0.0, main=0.0, **aux) -> ConstantReport:
    z, l, m = ExtValue(float(zero)), ExtValue(float(atL)), ExtValue(float(main))
    return ConstantReport(classify(prob), name, z + l + m, z, l, m, aux)


def _degenerate(prob, name) -> ConstantReport | None:
    if classify(prob) is CaseTag.DEGENERATE:
        return _report(prob, name, degenerate=True)
    return None


def _samples(prob, g, n=8):
    t = log_grid(prob.L, n, 3.0)
    return [float(x) for x in _arr(g, t)]


def _require(cond, msg):
    if not cond:
        raise ConstantsError(msg)


# ---------------------------------------------------------------------------
# Strong case: A1 - A5
# ---------------------------------------------------------------------------

def A1(prob: EmbeddingProblem) -> ConstantReport:
    """``sup W**(1/q) / phi**(1/p)``."""
    _require(not prob.weak, "A1 needs p < inf")
    deg = _degenerate(prob, "A1")
    if deg:
        return deg
    p, q = prob.p, prob.q
    g = lambda t: _prod((prob.W(t), 1 / q), (prob.phi(t), -1 / p))
    res = sup_search(g, prob.L)
    return _report(prob, "A1", main=res.value.value, argmax=res.argmax, phi_samples=_samples(prob, prob.phi))


def _limit_U_p_over_phi(prob) -> float:
    return float(ext_div(1.0, prob.phi_limit_zero))


def A2(prob: EmbeddingProblem) -> ConstantReport:
    _require(not prob.weak and 1 <= prob.q < prob.p, "A2 needs 1 <= q < p < inf")
    deg = _degenerate(prob, "A2")
    if deg:
        return deg
    p, q, r = prob.p, prob.q, prob.r
    env = Envelope(lambda t: _prod((prob.U(t), -r), (prob.W(t), p / (p - q))), prob.L, "right", prob.breaks)

    def f(t):
        return _prod((prob.V(t), 1.0), (prob.T(t), 1.0), (prob.U(t), r + p - 1), (eval_weight(prob.u, t), 1.0),
                     (env(t), 1.0), (prob.phi(t), -(q / (p - q) + 2)))

    main = _integral(f, prob.L, prob.breaks) ** ((p - q) / (p * q))
    sup_WU = sup_search(lambda t: ext_div(prob.W(t), ext_pow(prob.U(t), q)), prob.L).value
    zero = ExtValue(_limit_U_p_over_phi(prob)) ** (1 / p) * sup_WU ** (1 / q)
    atL = ExtValue(float(ext_div(1.0, prob.phi_limit_L))) ** (1 / p) * ExtValue(prob.W_L) ** (1 / q)
    return _report(prob, "A2", zero.value, atL.value, main.value, phi_samples=_samples(prob, prob.phi))


def A3(prob: EmbeddingProblem) -> ConstantReport:
    _require(not prob.weak and prob.p <= prob.q < 1, "A3 needs p <= q < 1")
    deg = _degenerate(prob, "A3")
    if deg:
        return deg
    p, q = prob.p, prob.q

    def g(t):
        num = ext_pow(prob.W(t), 1 / q) + ext_mul(prob.U(t), ext_pow(prob.S(t), (1 - q) / q))
        return _prod((num, 1.0), (prob.phi(t), -1 / p))

    res = sup_search(g, prob.L)
    return _report(prob, "A3", main=res.value.value, argmax=res.argmax, phi_samples=_samples(prob, prob.phi))


def _kernel_W(prob, t):
    """``W**(1/(1-q)) + U**(q/(1-q)) S``."""
    q = prob.q
    return ext_pow(prob.W(t), 1 / (1 - q)) + ext_mul(ext_pow(prob.U(t), q / (1 - q)), prob.S(t))


def assum_W(prob: EmbeddingProblem) -> bool:
    """Whether ``int_t^L W**(q/(1-q)) w U**(-q/(1-q))`` is finite (probed at the midpoint)."""
    return bool(np.isfinite(prob.S(prob.midpoint)))


def A4(prob: EmbeddingProblem) -> ConstantReport:
    _require(not prob.weak and prob.q < 1 and prob.q < prob.p, "A4 needs q < 1 and q < p < inf")
    deg = _degenerate(prob, "A4")
    if deg:
        return deg
    p, q = prob.p, prob.q

    def f(t):
        return _prod((_kernel_W(prob, t), p * (1 - q) / (p - q)), (prob.phi(t), -(q / (p - q) + 2)),
                     (prob.V(t), 1.0), (prob.U(t), p - 1), (eval_weight(prob.u, t), 1.0), (prob.T(t), 1.0))

    main = _integral(f, prob.L, prob.breaks) ** ((p - q) / (p * q))
    zero = ExtValue(_limit_U_p_over_phi(prob)) ** (1 / p) * ExtValue(prob.S0) ** ((1 - q) / q)
    # int_0^L W^{q/(1-q)} w = (1 - q) W(L)^{1/(1-q)}
    full = ExtValue((1 - q) * float(ext_pow(prob.W_L, 1 / (1 - q))))
    atL = ExtValue(float(ext_div(1.0, prob.phi_limit_L))) ** (1 / p) * full ** ((1 - q) / q)
    return _report(prob, "A4", zero.value, atL.value, main.value, assumW=assum_W(prob),
                   phi_samples=_samples(prob, prob.phi))


def A5(prob: EmbeddingProblem) -> ConstantReport:
    _require(not prob.weak and prob.q < 1 and prob.q < prob.p, "A5 needs q < 1 and q < p < inf")
    deg = _degenerate(prob, "A5")
    if deg:
        return deg
    p, q = prob.p, prob.q

    def f(t):
        return _prod((_kernel_W(prob, t), p * (1 - q) / (p - q) - 1), (prob.W(t), q / (1 - q)),
                     (eval_weight(prob.w, t), 1.0), (prob.phi(t), -q / (p - q)))

    main = _integral(f, prob.L, prob.breaks) ** ((p - q) / (p * q))
    return _report(prob, "A5", main=main.value, assumW=assum_W(prob))


# ---------------------------------------------------------------------------
# xi and the weak-case representation
# ---------------------------------------------------------------------------

def xi_strong(prob: EmbeddingProblem, t):
    """``int min{U(s)**(q/(1-q)), U(t)**(q/(1-q))} W**(q/(1-q)) w U**(-q/(1-q)) ds``.

    The part over ``(0, t)`` is ``(1 - q) W(t)**(1/(1-q))`` exactly.
    """
    _require(prob.q < 1, "xi needs q < 1")
    q = prob.q
    t = np.asarray(t, dtype=float)
    out = (1 - q) * ext_pow(prob.W(t), 1 / (1 - q)) + ext_mul(ext_pow(prob.U(t), q / (1 - q)), prob.S(t))
    return out[()] if np.ndim(out) == 0 else out


def xi_weak(prob: EmbeddingProblem, t):
    """``xi_strong ** (1 - q)``."""
    out = ext_pow(xi_strong(prob, t), 1 - prob.q)
    return out[()] if np.ndim(out) == 0 else out


def assum_xi(prob: EmbeddingProblem) -> bool:
    return bool(np.isfinite(xi_strong(prob, prob.midpoint)))


def phi_weak(prob: EmbeddingProblem, t):
    _require(prob.weak, "phi_weak needs p = inf")
    return prob.phi_weak(t)


class WeakRepError(ConstantsError):
    pass


@dataclass(frozen=True, eq=False)
class WeakRep:
    """``B1 phi <= gamma + delta U + int min{U(t), U(s)} dnu(s) <= B2 phi``.

    ``nu`` is a :class:`RepMeasure` whose ``alpha``/``beta`` are ``gamma``/``delta`` and
    whose sandwich constants are ``B1``/``B2``. ``kinks`` lists point masses found at
    break points (informational when they are already folded into ``nu``).
    """

    gamma: float
    delta: float
    nu: RepMeasure
    B1: float
    B2: float
    mode: str = "user"
    kinks: tuple[tuple[float, float], ...] = ()

    def represented(self, prob, t):
        return represented_function(self.nu, prob.U, t)

    def prefix(self, prob, t):
        """``int_{(0,t]} U dnu``."""
        return self.nu.lower_moment(prob.U, t)

    def suffix(self, prob, t):
        """``nu([t, L))``."""
        return self.nu.upper_mass(prob.U, t)


def make_weak_rep(gamma, delta, L, atoms=(), density=None, density_breaks=(), B1=1.0, B2=1.0,
                  mode="user", moment=None, tail=None) -> WeakRep:
    nu = RepMeasure(float(gamma), float(delta), float(L), tuple(atoms), density, tuple(density_breaks),
                    float(B1), float(B2), moment, tail)
    return WeakRep(float(gamma), float(delta), nu, float(B1), float(B2), mode, tuple(atoms))


def _rep_grid(prob, n=200):
    return log_grid(prob.L, n, 8.0)


def _differentiable_rep(prob) -> WeakRep:
    v, u = prob.v, prob.u
    if v.is_custom and v.custom_derivative is None:
        raise WeakRepError("differentiable mode needs a piecewise v or a custom derivative; use mode='generic'")
    grid = log_grid(prob.L, 512, 10.0)
    breaks = [b for b in prob.breaks if 0 < b < prob.L]
    for b in breaks:
        lo, hi = float(eval_weight(v, b * (1 - 1e-12))), float(eval_weight(v, b))
        if abs(lo - hi) > 1e-8 * max(abs(hi), 1e-300):
            raise WeakRepError(f"v is not continuous at {b}; use mode='generic'")
    ok, _ = is_quasiconcave(lambda s: eval_weight(v, s), prob.U, grid)
    if not ok:
        raise WeakRepError("v is not U-quasiconcave; use mode='generic'")

    def g(s):
        return ext_div(v.derivative(s), eval_weight(u, s))

    pts = np.sort(np.concatenate([grid, breaks, np.asarray(breaks) * (1 - 1e-12)]))
    gv = _arr(g, pts)
    scale = np.maximum(np.abs(gv[:-1]), np.abs(gv[1:]))
    if np.any(np.diff(gv) > 1e-9 * np.maximum(scale, 1e-300)) or np.any(gv < -1e-12 * np.max(np.abs(gv))):
        raise WeakRepError("v'/u is not nonincreasing; use mode='generic'")
    gamma = max(_limit(lambda s: eval_weight(v, s), "zero", prob.L, float(eval_weight(v, grid[0]))), 0.0)
    v_over_U = lambda s: ext_div(eval_weight(v, s), prob.U(s))
    delta = max(_limit(v_over_U, "L", prob.L, float(v_over_U(grid[-1]))), 0.0)
    g_end = max(_limit(g, "L", prob.L, float(gv[-1])), 0.0)
    kinks = []
    for b in breaks:
        jump = float(g(b * (1 - 1e-12))) - float(g(b))
        if jump > 0:
            kinks.append((float(b), jump))

    # nu = -d(v'/u): int_{(0,t]} U dnu = v - gamma - U g and nu((t, L)) = g - g(L-)
    def moment(s):
        return np.maximum(eval_weight(v, s) - gamma - ext_mul(prob.U(s), g(s)), 0.0)

    def tail(s):
        return np.maximum(g(s) - g_end, 0.0)

    def density(s):
        h = 1e-6 * np.asarray(s, dtype=float)
        return np.maximum((g(s - h) - g(s + h)) / (2 * h), 0.0)

    nu = RepMeasure(gamma, delta, prob.L, (), density, tuple(breaks), 1.0, 2.0, moment, tail)
    return WeakRep(gamma, delta, nu, 1.0, 2.0, "differentiable", tuple(kinks))


def _generic_rep(prob) -> WeakRep:
    cr = canonical_rep(prob.phi_weak, prob.U, prob.L)
    return WeakRep(cr.alpha, cr.beta, cr, cr.C1, cr.C2, "generic", cr.atoms)


def verify_weak_rep(prob: EmbeddingProblem, rep: WeakRep, grid=None) -> float:
    """Largest relative violation of the sandwich on a grid (200 points by default)."""
    grid = _rep_grid(prob) if grid is None else grid
    return verify_representation(prob.phi_weak, prob.U, rep.nu, grid)


def weak_rep(prob: EmbeddingProblem, mode: str = "differentiable", rep: WeakRep | None = None,
             tol: float = 1e-9) -> WeakRep:
    """Representation of the weak fundamental function.

    ``differentiable``: built from ``v'/u``; ``generic``: canonical hull construction;
    ``user``: ``rep`` is checked against the sandwich and returned.
    """
    _require(prob.weak, "weak_rep needs p = inf")
    if mode == "differentiable":
        out = _differentiable_rep(prob)
    elif mode == "generic":
        out = _generic_rep(prob)
    elif mode == "user":
        if rep is None:
            raise WeakRepError("mode='user' needs rep")
        out = rep
    else:
        raise WeakRepError(f"unknown mode {mode!r}")
    viol = verify_weak_rep(prob, out)
    if viol > tol:
        raise WeakRepError(f"representation sandwich violated by {viol:.3g} (mode {mode})")
    return out


def _auto_rep(prob) -> WeakRep:
    try:
        return weak_rep(prob, "differentiable")
    except WeakRepError:
        return weak_rep(prob, "generic")


# ---------------------------------------------------------------------------
# Weak case: A6 - A8
# ---------------------------------------------------------------------------

def _weak_limits(prob):
    """``(lim_{0+} U/phi, lim_{L-} 1/phi)`` from the envelopes of ``v/U`` and ``v``."""
    return float(ext_div(1.0, prob._v_over_U_right.sup)), float(ext_div(1.0, prob._v_left.sup))


def _weak_integral(prob, rep, factor):
    q = prob.q

    def f(t):
        return _prod((factor(t), 1.0), (prob.phi_weak(t), -(q + 2)), (eval_weight(prob.u, t), 1.0),
                     (rep.gamma + rep.prefix(prob, t), 1.0), (rep.delta + rep.suffix(prob, t), 1.0))

    points = sorted(set(prob.breaks) | {s for s, _ in rep.nu.atoms})
    if len(points) <= 32:
        return _integral(f, prob.L, points)
    t, wts, _ = composite_nodes(prob.L, step=0.05, order=12, points=points)
    vals = _arr(f, t)
    if np.any(np.isinf(vals) & (wts > 0)):
        return ExtValue(INF)
    return ExtValue(float(np.sum(vals * wts)))


def A6(prob: EmbeddingProblem, rep: WeakRep | None = None) -> ConstantReport:
    _require(prob.weak and prob.q >= 1, "A6 needs p = inf and q >= 1")
    deg = _degenerate(prob, "A6")
    if deg:
        return deg
    q = prob.q
    rep = _auto_rep(prob) if rep is None else rep
    lim0, limL = _weak_limits(prob)
    sup_WU = sup_search(lambda t: _prod((prob.W(t), 1 / q), (prob.U(t), -1.0)), prob.L).value
    zero = ExtValue(lim0) * sup_WU
    atL = ExtValue(limL) * ExtValue(prob.W_L) ** (1 / q)
    env = Envelope(lambda t: ext_div(prob.W(t), ext_pow(prob.U(t), q)), prob.L, "right", prob.breaks)
    main = _weak_integral(prob, rep, lambda t: ext_mul(ext_pow(prob.U(t), q), env(t))) ** (1 / q)
    return _report(prob, "A6", zero.value, atL.value, main.value, rep_mode=rep.mode, B1=rep.B1, B2=rep.B2,
                   phi_samples=_samples(prob, prob.phi_weak))


def A7(prob: EmbeddingProblem, rep: WeakRep | None = None) -> ConstantReport:
    _require(prob.weak and prob.q < 1, "A7 needs p = inf and q < 1")
    deg = _degenerate(prob, "A7")
    if deg:
        return deg
    q = prob.q
    rep = _auto_rep(prob) if rep is None else rep
    lim0, limL = _weak_limits(prob)
    zero = ExtValue(lim0) * ExtValue(prob.S0) ** ((1 - q) / q)
    atL = ExtValue(limL) * ExtValue(prob.W_L) ** (1 / q)
    main = _weak_integral(prob, rep, lambda t: xi_weak(prob, t)) ** (1 / q)
    return _report(prob, "A7", zero.value, atL.value, main.value, assumxi=assum_xi(prob), rep_mode=rep.mode,
                   B1=rep.B1, B2=rep.B2, xi_samples=_samples(prob, lambda t: xi_weak(prob, t)),
                   phi_samples=_samples(prob, prob.phi_weak))


def A8(prob: EmbeddingProblem) -> ConstantReport:
    _require(prob.weak and prob.q < 1, "A8 needs p = inf and q < 1")
    deg = _degenerate(prob, "A8")
    if deg:
        return deg
    q = prob.q

    def f(t):
        return _prod((prob.phi_weak(t), -q), (xi_strong(prob, t), -q), (prob.W(t), q / (1 - q)),
                     (eval_weight(prob.w, t), 1.0))

    main = _integral(f, prob.L, prob.breaks) ** (1 / q)
    return _report(prob, "A8", main=main.value, assumxi=assum_xi(prob))


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

_BY_CASE = {
    CaseTag.I: ("A1", A1),
    CaseTag.II: ("A2", A2),
    CaseTag.III: ("A3", A3),
    CaseTag.IV: ("A4", A4),
    CaseTag.WEAK_GE1: ("A6", A6),
    CaseTag.WEAK_LT1: ("A7", A7),
}


def case_constant_name(case: CaseTag) -> str:
    return _BY_CASE[case][0] if case in _BY_CASE else "none"


def optimal_constant_estimate(prob: EmbeddingProblem, rep: WeakRep | None = None) -> ConstantReport:
    """Evaluate the A-constant of the problem's case; degenerate problems give 0."""
    case = classify(prob)
    if case is CaseTag.DEGENERATE:
        return _report(prob, "none", degenerate=True)
    name, fn = _BY_CASE[case]
    if prob.weak:
        return fn(prob, rep)
    return fn(prob)
