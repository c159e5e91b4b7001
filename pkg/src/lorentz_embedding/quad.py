"""Extended-value arithmetic, improper quadrature, supremum search and endpoint limits.

All integration and search happens in a logarithmic coordinate ``x`` in which the
interval ``(a, b)`` becomes the whole real line:

* finite ``b``:  ``t = a + (b - a) * sigmoid(x)``  (log-resolved at both ends),
* ``b = inf``:   ``t = a + exp(x)``.

Power-type endpoint behaviour turns into exponential decay in ``x``, which is what
the panel extension and tail extrapolation below rely on.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

CAP = 1e300
INF = math.inf

DEFAULT_REL_TOL = 1e-9
DEFAULT_ABS_TOL = 1e-12
SEARCH_TOL = 1e-7


class QuadratureError(ValueError):
    pass


class NonEvaluableIntegrand(QuadratureError):
    def __init__(self, point):
        super().__init__(f"non-evaluable integrand at t={point!r}")
        self.point = point


class LimitNotResolved(ValueError):
    pass


# ---------------------------------------------------------------------------
# Convention arithmetic
# ---------------------------------------------------------------------------

def promote(x, cap=CAP):
    """Promote magnitudes above ``cap`` to infinity (scalar or array)."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) > cap, np.copysign(np.inf, x), x)
    return out[()] if out.ndim == 0 else out


def ext_mul(a, b):
    """Product with ``0 * inf = 0``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        out = a * b
    out = np.where((a == 0) | (b == 0), 0.0, out)
    return out[()] if out.ndim == 0 else out


def ext_div(a, b):
    """Quotient with ``x/inf = 0``, ``inf/inf = 0``, ``0/0 = 0`` and ``x/0 = inf`` for ``x > 0``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = a / b
    out = np.where(np.isinf(b), 0.0, out)
    out = np.where(b == 0, np.where(a == 0, 0.0, np.copysign(np.inf, a)), out)
    return out[()] if out.ndim == 0 else out


def ext_pow(a, e):
    """Power of a nonnegative extended value; ``0**(-e) = inf`` and ``inf**(-e) = 0``."""
    a = np.asarray(a, dtype=float)
    e = float(e)
    if e == 0:
        out = np.ones_like(a)
    else:
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = np.power(a, e)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, order=True)
class ExtValue:
    """Nonnegative extended real obeying the Convention arithmetic."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v) or v < 0:
            raise ValueError(f"ExtValue must be a nonnegative extended real, got {self.value!r}")
        object.__setattr__(self, "value", float(promote(v)))

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.value)

    def __float__(self):
        return self.value

    @staticmethod
    def _v(other):
        return other.value if isinstance(other, ExtValue) else float(other)

    def __add__(self, other):
        return ExtValue(self.value + self._v(other))

    __radd__ = __add__

    def __mul__(self, other):
        return ExtValue(float(ext_mul(self.value, self._v(other))))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ExtValue(float(ext_div(self.value, self._v(other))))

    def __rtruediv__(self, other):
        return ExtValue(float(ext_div(self._v(other), self.value)))

    def __pow__(self, e):
        return ExtValue(float(ext_pow(self.value, e)))

    def __repr__(self):
        return "ExtValue(inf)" if self.is_inf else f"ExtValue({self.value!r})"


# ---------------------------------------------------------------------------
# Coordinate maps
# ---------------------------------------------------------------------------

def _sigmoid(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


class LogMap:
    """Bijection between the real line and ``(a, b)``, logarithmic at both ends."""

    def __init__(self, a: float, b: float):
        a, b = float(a), float(b)
        if not a < b:
            raise QuadratureError(f"empty interval ({a}, {b})")
        if math.isinf(a):
            raise QuadratureError("lower limit must be finite")
        self.a, self.b = a, b
        self.finite = math.isfinite(b)
        self.width = b - a if self.finite else INF
        # scale of the exponential map on (a, inf)
        self.scale = max(abs(a), 1.0)

    def t(self, x):
        x = np.asarray(x, dtype=float)
        if not self.finite:
            return self.a + self.scale * np.exp(x)
        left = self.a + self.width * _sigmoid(x)
        right = self.b - self.width * _sigmoid(-x)
        return np.where(x <= 0, left, right)

    def jac(self, x):
        x = np.asarray(x, dtype=float)
        if not self.finite:
            return self.scale * np.exp(x)
        return self.width * _sigmoid(x) * _sigmoid(-x)

    def x(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if not self.finite:
                return np.log((t - self.a) / self.scale)
            return np.log(t - self.a) - np.log(self.b - t)

    def x_limits(self):
        """Range of ``x`` on which ``t`` stays numerically resolved."""
        unit = self.width if self.finite else self.scale
        if self.a == 0:
            lo = math.log(1e-300) - math.log(unit)
        else:
            lo = math.log(1e-11 * self.a) - math.log(unit)
        if self.finite:
            hi = math.log(self.width) - math.log(1e-11 * max(abs(self.b), self.width))
        else:
            hi = math.log(1e300) - math.log(self.scale)
        return lo, hi


# ---------------------------------------------------------------------------
# Gauss-Legendre panels
# ---------------------------------------------------------------------------

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (10, 12, 16, 20)}


def gauss_legendre(n: int):
    if n not in _GL:
        _GL[n] = np.polynomial.legendre.leggauss(n)
    return _GL[n]


def _eval(f, t):
    t = np.asarray(t, dtype=float)
    try:
        y = np.asarray(f(t), dtype=float)
        if y.shape != t.shape:
            y = np.broadcast_to(y, t.shape).astype(float)
    except (TypeError, ValueError):
        y = np.array([float(f(float(s))) for s in t.ravel()]).reshape(t.shape)
    bad = ~np.isfinite(y)
    if bad.any():
        raise NonEvaluableIntegrand(float(t[bad].ravel()[0]))
    return y


class _Panels:
    """Panel integrator for ``G(x) = f(t(x)) t'(x)``."""

    def __init__(self, f, m: LogMap):
        self.f, self.m = f, m
        self.n_evals = 0

    def rule(self, lo, hi):
        """Return (G20, |G20 - G10|) on [lo, hi] (arrays allowed)."""
        lo = np.atleast_1d(np.asarray(lo, float))
        hi = np.atleast_1d(np.asarray(hi, float))
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x10, w10 = gauss_legendre(10)
        x20, w20 = gauss_legendre(20)
        xs = np.concatenate([mid[:, None] + half[:, None] * x10, mid[:, None] + half[:, None] * x20], axis=1)
        g = _eval(self.f, self.m.t(xs)) * self.m.jac(xs)
        self.n_evals += g.size
        i10 = half * (g[:, :10] @ w10)
        i20 = half * (g[:, 10:] @ w20)
        return i20, np.abs(i20 - i10)

    def adaptive(self, lo, hi, tol, max_sub=400):
        """Adaptive bisection on one x-panel. Returns (value, err, subdivisions)."""
        v, e = self.rule(lo, hi)
        heap = [(-e[0], lo, hi, v[0])]
        err, subs = e[0], 0
        history = [err]
        while err > tol and subs < max_sub:
            neg_e, a, b, val = heapq.heappop(heap)
            c = 0.5 * (a + b)
            vv, ee = self.rule([a, c], [c, b])
            err += ee.sum() + neg_e
            heapq.heappush(heap, (-ee[0], a, c, vv[0]))
            heapq.heappush(heap, (-ee[1], c, b, vv[1]))
            subs += 1
            history.append(err)
            # rounding noise in the integrand: splitting has stopped paying off
            if subs >= 24 and err > 0.5 * history[-17]:
                break
        err = sum(-h[0] for h in heap)
        total = sum(h[3] for h in heap)
        return total, err, subs


@dataclass(frozen=True)
class QuadResult:
    value: ExtValue
    abs_error_estimate: float
    converged: bool
    subdivisions: int

    def __float__(self):
        return self.value.value


def _extend(panels: _Panels, start: float, direction: int, limit: float, base: float, tols, cap):
    """Walk unit panels away from the core until the tail is negligible.

    Returns (sum, err, subdivisions, diverged).
    """
    rel_tol, abs_tol = tols
    s, err, subs = 0.0, 0.0, 0
    history: list[float] = []
    growth_run = flat_run = zero_run = 0
    x = start
    while (limit - x) * direction > 0:
        nxt = x + direction
        if (nxt - limit) * direction > 0:
            nxt = limit
        lo, hi = (x, nxt) if direction > 0 else (nxt, x)
        target = max(abs_tol, rel_tol * abs(base + s))
        v, e, k = panels.adaptive(lo, hi, 0.1 * target)
        s += v
        err += e
        subs += k + 1
        width = abs(nxt - x)
        x = nxt
        if abs(base + s) > cap:
            return INF, err, subs, True
        mag = abs(v) / width
        if history and history[-1] > 0:
            ratio = mag / history[-1]
            growth_run = growth_run + 1 if ratio > 1.01 else 0
            flat_run = flat_run + 1 if 0.999 <= ratio <= 1.01 else 0
        history.append(mag)
        if growth_run >= 40 or flat_run >= 200:
            return INF, err, subs, True
        zero_run = zero_run + 1 if mag == 0.0 else 0
        if zero_run >= 8 and base + s != 0:
            return s, err, subs, False
        target = max(abs_tol, rel_tol * abs(base + s))
        if len(history) >= 3 and history[-2] > 0 and history[-3] > 0 and mag > 0:
            r1 = history[-1] / history[-2]
            r0 = history[-2] / history[-3]
            if r1 < 0.99:
                tail = mag * r1 / (1.0 - r1)
                stable = abs(r1 - r0) <= 1e-3 * r1
                if width == 1.0 and tail <= 0.05 * target:
                    return s + math.copysign(tail, v), err + tail, subs, False
                if width == 1.0 and stable and abs(r1 - r0) * tail / (1 - r1) <= 0.05 * target:
                    return s + math.copysign(tail, v), err + abs(r1 - r0) * tail / (1 - r1), subs, False
    # resolution limit reached: decide between a geometric tail and divergence
    if len(history) >= 6 and history[-1] > 0:
        rs = [history[i] / history[i - 1] for i in range(len(history) - 5, len(history)) if history[i - 1] > 0]
        target = max(abs_tol, rel_tol * abs(base + s))
        if rs and min(rs) >= 0.999 and history[-1] > 0.05 * target:
            return INF, err, subs, True
        r = (history[-2] / history[-6]) ** 0.25 if history[-6] > 0 else 0.0
        if 0 < r < 0.999:
            # exponential continuation of G past the last node: int_x^inf G = G(x) / kappa
            g_end = abs(float(_eval(panels.f, panels.m.t(np.array([x])))[0] * panels.m.jac(x)))
            tail = g_end / -math.log(r)
            s += math.copysign(tail, s if s != 0 else 1.0)
            err += 0.01 * tail
    return s, err, subs, False


def _integrate_piece(f, a, b, rel_tol, abs_tol, cap, core):
    if math.isfinite(b) and b - a < 1e-8 * max(abs(a), abs(b)):
        # too narrow for the log map to resolve: plain Gauss-Legendre in t
        x, w = gauss_legendre(20)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        return float(half * (_eval(f, mid + half * x) @ w)), 0.0, 1
    m = LogMap(a, b)
    panels = _Panels(f, m)
    xlo, xhi = m.x_limits()
    c0, c1 = max(core[0], xlo), min(core[1], xhi)
    n = max(int(round(c1 - c0)), 1)
    edges = np.linspace(c0, c1, n + 1)
    # coarse pass for the scale of the integral, so early panels get a relative tolerance
    scale = float(np.sum(np.abs(panels.rule(edges[:-1], edges[1:])[0])))
    total, err, subs = 0.0, 0.0, 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e, k = panels.adaptive(lo, hi, 0.1 * max(abs_tol, rel_tol * max(abs(total), scale)))
        total += v
        err += e
        subs += k + 1
    left, el, sl, dl = _extend(panels, c0, -1, xlo, total, (rel_tol, abs_tol), cap)
    if dl:
        return math.copysign(INF, left if left else 1.0), 0.0, subs + sl
    right, er, sr, dr = _extend(panels, c1, +1, xhi, total + left, (rel_tol, abs_tol), cap)
    if dr:
        return math.copysign(INF, right if right else 1.0), 0.0, subs + sl + sr
    return total + left + right, err + el + er, subs + sl + sr


def integrate_signed(f, a, b, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL, cap=CAP,
                     points=(), core=(-4.0, 4.0)):
    """Integral of a real (vectorised) ``f`` over ``(a, b)``: returns (value, err, subdivisions).

    ``points`` are interior break points (discontinuities, kinks); the interval is split
    there and every piece is integrated with both ends treated as possibly singular.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise QuadratureError(f"integrate requires a < b, got ({a}, {b})")
    cuts = sorted({float(p) for p in points if a < p < b})
    ends = [a, *cuts, b]
    value, err, subs = 0.0, 0.0, 0
    for lo, hi in zip(ends[:-1], ends[1:]):
        v, e, s = _integrate_piece(f, lo, hi, rel_tol, abs_tol, cap, core)
        value += v
        err += e
        subs += s
        if math.isinf(value):
            break
    if abs(value) > cap:
        value = math.copysign(INF, value)
    return value, err, subs


def integrate(f: Callable, a: float, b: float, rel_tol: float = DEFAULT_REL_TOL,
              abs_tol: float = DEFAULT_ABS_TOL, cap: float = CAP, points=()) -> QuadResult:
    """Integrate a nonnegative (vectorised) function over ``(a, b)``, possibly improper.

    Divergent integrals come back as ``inf``: unit panel sums in the log coordinate that
    grow by more than 1% for 40 consecutive panels, stay flat for 200 panels, are still
    non-decaying at the resolution limit, or a running sum above ``cap``.
    """
    value, err, subs = integrate_signed(f, a, b, rel_tol, abs_tol, cap, points)
    if math.isinf(value):
        if value < 0:
            raise QuadratureError("integrand is not nonnegative")
        return QuadResult(ExtValue(INF), 0.0, True, subs)
    tol = max(abs_tol, rel_tol * abs(value))
    if value < 0:
        if value < -max(err, tol):
            raise QuadratureError("integrand is not nonnegative")
        value = 0.0
    converged = err <= tol
    return QuadResult(ExtValue(value), err, converged, subs)


def quad(f, a, b, **kw) -> float:
    """Signed float front end to :func:`integrate_signed`."""
    return integrate_signed(f, a, b, **kw)[0]


# ---------------------------------------------------------------------------
# Running integrals on a shared grid
# ---------------------------------------------------------------------------

class RunningIntegral:
    """Tables for ``int_0^t g`` and ``int_t^L g`` evaluated at many points.

    Panels of width ``step`` in the log coordinate of ``(0, L)`` are integrated once
    with a Gauss-Legendre rule; a query adds the partial panel with the same rule.
    Discontinuities of ``g`` must be passed as ``breaks``. Overflowing values make the
    affected panels infinite rather than raising.
    """

    def __init__(self, g, L, breaks=(), step=0.05, order=12, span=None):
        self.g, self.L = g, float(L)
        self.m = LogMap(0.0, self.L)
        if span is None:
            span = (-40.0, 27.0) if self.m.finite else (-40.0, 40.0)
        xs = np.arange(span[0], span[1] + 0.5 * step, step)
        # coarse panels down to the float range so that few queries fall outside
        far = 4.0 * step
        lo_lim = self.m.x_limits()[0]
        lo_x = np.arange(span[0], max(lo_lim, -690.0), -far)[:0:-1]
        xs = np.concatenate([lo_x, xs])
        bx = [float(self.m.x(b)) for b in breaks if 0 < b < self.L]
        bx = [x for x in bx if span[0] < x < span[1]]
        if bx:
            xs = np.unique(np.concatenate([xs, bx]))
            keep = np.concatenate([[True], np.diff(xs) > 1e-9])
            xs = xs[keep]
        self.xs = xs
        self.breaks = tuple(float(b) for b in breaks if 0 < b < self.L)
        self.order = order
        panel = self._panel(xs[:-1], xs[1:])
        with np.errstate(invalid="ignore"):
            self.cum_left = np.concatenate([[0.0], np.cumsum(panel)])
            self.cum_right = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])
        self.t_lo = float(self.m.t(xs[0]))
        self.t_hi = float(self.m.t(xs[-1]))
        self._tails = {}

    def _panel(self, x0, x1):
        nodes, weights = gauss_legendre(self.order)
        x0, x1 = np.asarray(x0, float), np.asarray(x1, float)
        mid, half = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
        X = mid[..., None] + half[..., None] * nodes
        with np.errstate(all="ignore"):
            G = np.asarray(self.g(self.m.t(X)), dtype=float) * self.m.jac(X)
        G = np.where(np.isnan(G), np.inf, G)
        with np.errstate(invalid="ignore"):
            out = half * (G @ weights)
        return np.where(np.isnan(out), np.inf, out)

    def _quad(self, a, b):
        if not a < b:
            return 0.0
        try:
            return quad(self.g, a, b, points=self.breaks, abs_tol=1e-300)
        except NonEvaluableIntegrand:
            return INF

    @property
    def left_tail(self):
        if "left" not in self._tails:
            self._tails["left"] = INF if self._flat(self.xs[0], -1) else self._quad(0.0, self.t_lo)
        return self._tails["left"]

    @property
    def right_tail(self):
        if "right" not in self._tails:
            if self._flat_at_L():
                self._tails["right"] = INF
            elif self.m.finite:
                self._tails["right"] = self._geometric_tail(self.xs[-1], +1)
            else:
                self._tails["right"] = self._quad(self.t_hi, self.L)
        return self._tails["right"]

    def _flat_at_L(self):
        """Non-decaying unit panels up to the resolution limit at a finite ``L``.

        Near a finite end point ``t`` cannot be resolved beyond ``L (1 - 1e-11)``, so a
        divergent tail there has to be judged from the last resolved panels.
        """
        if not self.m.finite:
            return False
        return self._flat(min(self.xs[-1], self.m.x_limits()[1]), +1)

    def _geometric_tail(self, x_end, direction):
        """Tail beyond ``x_end`` assuming unit panel sums keep decaying geometrically."""
        edges = x_end - direction * np.arange(5.0, -0.5, -1.0)
        lo, hi = np.minimum(edges[:-1], edges[1:]), np.maximum(edges[:-1], edges[1:])
        sums = self._panel(lo, hi)
        if sums[-1] <= 0 or sums[0] <= 0:
            return 0.0
        r = (sums[-1] / sums[0]) ** 0.25
        return float(sums[-1] * r / (1.0 - r)) if r < 1 else INF

    def _flat(self, x_end, direction):
        """Whether unit panel sums approaching ``x_end`` fail to decay."""
        edges = x_end - direction * np.arange(8.0, -0.5, -1.0)
        lo, hi = np.minimum(edges[:-1], edges[1:]), np.maximum(edges[:-1], edges[1:])
        sums = self._panel(lo, hi)
        if not np.all(np.isfinite(sums)):
            return True
        if sums[-1] <= 0:
            return False
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = sums[-5:] / sums[-6:-1]
        return bool(np.all(ratios >= 0.999))

    @property
    def total(self):
        return self.left_tail + self.cum_left[-1] + self.right_tail

    def left(self, t):
        """``int_0^t g`` (vectorised)."""
        t = np.asarray(t, dtype=float)
        scalar, shape = t.ndim == 0, t.shape
        t = np.atleast_1d(t).ravel()
        out = np.empty_like(t)
        x = self.m.x(np.clip(t, 0, self.L))
        inside = (x >= self.xs[0]) & (x <= self.xs[-1])
        if inside.any():
            xi = x[inside]
            j = np.clip(np.searchsorted(self.xs, xi, side="right") - 1, 0, len(self.xs) - 2)
            out[inside] = self.left_tail + self.cum_left[j] + self._panel(self.xs[j], xi)
        for i in np.flatnonzero(~inside):
            ti = t[i]
            if ti <= 0:
                out[i] = 0.0
            elif ti < self.t_lo:
                out[i] = self._quad(0.0, ti)
            elif ti >= self.L:
                out[i] = self.total
            else:
                out[i] = self.left_tail + self.cum_left[-1] + self._quad(self.t_hi, ti)
        return out[0] if scalar else out.reshape(shape)

    def right(self, t):
        """``int_t^L g`` (vectorised)."""
        t = np.asarray(t, dtype=float)
        scalar, shape = t.ndim == 0, t.shape
        t = np.atleast_1d(t).ravel()
        out = np.empty_like(t)
        if math.isinf(self.right_tail):
            out[:] = INF
            return out[0] if scalar else out.reshape(shape)
        x = self.m.x(np.clip(t, 0, self.L))
        inside = (x >= self.xs[0]) & (x <= self.xs[-1])
        if inside.any():
            xi = x[inside]
            j = np.clip(np.searchsorted(self.xs, xi, side="right") - 1, 0, len(self.xs) - 2)
            out[inside] = self.right_tail + self.cum_right[j + 1] + self._panel(xi, self.xs[j + 1])
        for i in np.flatnonzero(~inside):
            ti = t[i]
            if ti >= self.L:
                out[i] = 0.0
            elif ti > self.t_hi:
                out[i] = self._quad(ti, self.L)
            elif ti <= 0:
                out[i] = self.total
            else:
                out[i] = self.right_tail + self.cum_right[0] + self._quad(ti, self.t_lo)
        return out[0] if scalar else out.reshape(shape)


# ---------------------------------------------------------------------------
# Suprema and limits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupResult:
    argmax: float
    value: ExtValue
    attained_at_boundary: str  # "zero", "L" or "interior"

    def __float__(self):
        return self.value.value


def log_grid(L, n=512, span=12.0):
    """Grid of ``n`` points in ``(0, L)``, log-spaced towards both ends.

    For finite ``L`` the points run from ``L*10**-span`` to ``L*(1 - 10**-span)``;
    for ``L = inf`` from ``10**-span`` to ``10**span``.
    """
    m = LogMap(0.0, L)
    X = span * math.log(10.0)
    return m.t(np.linspace(-X, X, n))


def _values(g, t):
    y = np.asarray(g(np.asarray(t, dtype=float)), dtype=float)
    if y.shape != np.shape(t):
        y = np.broadcast_to(y, np.shape(t)).astype(float)
    return np.where(np.isnan(y), -np.inf, y)


def sup_search(g: Callable, L: float, tol: float = SEARCH_TOL, n: int = 512, span: float = 12.0,
               include_limits: bool = True) -> SupResult:
    """Supremum of a vectorised ``g`` over ``(0, L)``.

    Grid scan in the log coordinate, then repeated local subdivision around the best
    point. If the best grid point is an end point, the one-sided limit there is also
    taken into account (the supremum over the open interval includes it).
    """
    m = LogMap(0.0, L)
    X = span * math.log(10.0)
    xs = np.linspace(-X, X, n)
    ys = _values(g, m.t(xs))
    i = int(np.argmax(ys))
    best_x, best = xs[i], ys[i]
    if not np.isfinite(best) and best > 0:
        return SupResult(float(m.t(best_x)), ExtValue(INF), "interior")
    if best <= 0 and np.all(ys <= 0):
        return SupResult(float(m.t(best_x)), ExtValue(0.0), "interior")
    where = "zero" if i == 0 else ("L" if i == n - 1 else "interior")
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, n - 1)]
    stall = 0
    for _ in range(200):
        sub = np.linspace(lo, hi, 9)
        sv = _values(g, m.t(sub))
        j = int(np.argmax(sv))
        improvement = sv[j] - best
        if sv[j] > best:
            best, best_x = sv[j], sub[j]
        stall = stall + 1 if improvement <= tol * abs(best) else 0
        width = (hi - lo) / 8
        lo, hi = best_x - width, best_x + width
        lo, hi = max(lo, -X), min(hi, X)
        if stall >= 3 or hi - lo < 1e-12:
            break
    value = float(best)
    if include_limits and where != "interior":
        try:
            lim = limit_at_endpoint(g, where, L, tol=tol).value
        except (LimitNotResolved, NonEvaluableIntegrand, FloatingPointError):
            lim = -INF
        if lim > value:
            value = lim
            best_x = -INF if where == "zero" else INF
    if value <= 0:
        value = 0.0
    return SupResult(float(m.t(best_x)) if np.isfinite(best_x) else (0.0 if where == "zero" else float(L)),
                     ExtValue(value), where)


@dataclass(frozen=True)
class _Lim:
    value: float


def limit_at_endpoint(g: Callable, endpoint: str, L: float, tol: float = SEARCH_TOL, ratio: float = 0.25,
                      terms: int = 24, cap: float = CAP) -> ExtValue:
    """One-sided limit of ``g`` at ``0+`` (``endpoint="zero"``) or ``L-`` (``"L"``).

    ``g`` is sampled along a geometric sequence approaching the endpoint; the tail is
    extrapolated assuming geometric convergence of the increments.
    """
    L = float(L)
    k = np.arange(terms)
    if endpoint == "zero":
        t0 = min(L / 2, 1.0)
        ts = t0 * ratio ** k
    elif endpoint == "L":
        if math.isinf(L):
            ts = (1.0 / ratio) ** k
        else:
            ts = L - (L / 2) * ratio ** k
    else:
        raise ValueError(f"endpoint must be 'zero' or 'L', got {endpoint!r}")
    with np.errstate(all="ignore"):
        ys = np.asarray(g(ts), dtype=float)
    if ys.shape != ts.shape:
        ys = np.broadcast_to(ys, ts.shape).astype(float)
    if np.isnan(ys).any():
        raise LimitNotResolved(f"non-evaluable sequence near {endpoint}")
    if np.isinf(ys[-4:]).all():
        return ExtValue(INF) if ys[-1] > 0 else ExtValue(0.0)
    ys = ys[np.isfinite(ys)]
    if len(ys) < 6:
        raise LimitNotResolved("too few finite terms")
    if ys[-1] > cap:
        return ExtValue(INF)
    scale = np.max(np.abs(ys))
    if scale == 0:
        return ExtValue(0.0)
    d = np.diff(ys)
    tail = d[-6:]
    last = ys[-1]
    if np.all(np.abs(tail) <= tol * max(abs(last), 1e-300)):
        return ExtValue(max(last, 0.0))
    if abs(last) < 1e-300 and abs(ys[-2]) < 1e-300:
        return ExtValue(0.0)
    signs = np.sign(tail[np.abs(tail) > 1e-14 * scale])
    if len(signs) and not (np.all(signs > 0) or np.all(signs < 0)):
        raise LimitNotResolved(f"limit not resolved: oscillating tail near {endpoint}")
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = tail[1:] / tail[:-1]
    rho = rho[np.isfinite(rho)]
    if len(rho) == 0:
        return ExtValue(max(last, 0.0))
    r = float(rho[-1])
    if tail[-1] > 0 and r >= 0.999:
        return ExtValue(INF)
    if tail[-1] < 0 and r >= 0.999:
        # decreasing without geometric convergence: nonnegative target, approach to 0
        if last < 1e-3 * scale:
            return ExtValue(0.0)
        raise LimitNotResolved(f"limit not resolved near {endpoint}")
    est = last + tail[-1] * r / (1.0 - r)
    if est < 1e-12 * scale:
        return ExtValue(0.0)
    return ExtValue(float(promote(est, cap)))


def composite_nodes(L: float, step: float = 0.25, order: int = 8, points=(), span=None):
    """Nodes and weights of a composite Gauss-Legendre rule on ``(0, L)`` in the log coordinate.

    ``points`` are inserted as panel edges so that sums over sub-intervals between them
    can be read off cumulative weights. Returns ``(t, w, panel_edges_t)``.
    """
    m = LogMap(0.0, L)
    if span is None:
        lo_lim, hi_lim = m.x_limits()
        span = (max(-80.0, lo_lim), min(80.0, hi_lim))
    xs = np.arange(span[0], span[1] + 0.5 * step, step)
    px = [float(m.x(p)) for p in points if 0 < p < L]
    px = [x for x in px if span[0] < x < span[1]]
    if px:
        xs = np.unique(np.concatenate([xs, px]))
        xs = xs[np.concatenate([[True], np.diff(xs) > 1e-12])]
    nodes, weights = gauss_legendre(order)
    mid, half = 0.5 * (xs[:-1] + xs[1:]), 0.5 * (xs[1:] - xs[:-1])
    X = (mid[:, None] + half[:, None] * nodes).ravel()
    W = (half[:, None] * weights).ravel() * m.jac(X)
    return m.t(X), W, m.t(xs)
