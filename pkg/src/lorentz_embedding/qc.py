"""Quasiconcave functions: representation measures, covering sequences and the
discretization/antidiscretization quantities built on them.

Functions ``h`` and ``rho`` are vectorised callables on ``(0, L)``. A function ``h`` is
quasiconcave with respect to ``rho`` when ``h`` is nondecreasing and ``h / rho`` is
nonincreasing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quad import (
    INF,
    ExtValue,
    LimitNotResolved,
    LogMap,
    RunningIntegral,
    composite_nodes,
    ext_div,
    ext_mul,
    ext_pow,
    limit_at_endpoint,
    log_grid,
    quad,
)

SLACK = 1e-12
AXIOM_TOL = 1e-8
MAX_INDEX = 200


class QCError(ValueError):
    pass


def _arr(g, t):
    with np.errstate(all="ignore"):
        y = np.asarray(g(np.asarray(t, dtype=float)), dtype=float)
    if y.shape != np.shape(t):
        y = np.broadcast_to(y, np.shape(t)).astype(float)
    return y


def _ratio(rho, h):
    """``t -> rho(t) / h(t)`` with the extended-division conventions."""
    return lambda t: ext_div(_arr(rho, t), _arr(h, t))


def _limit(g, endpoint, L, fallback):
    try:
        return limit_at_endpoint(g, endpoint, L).value
    except (LimitNotResolved, FloatingPointError):
        return fallback


# ---------------------------------------------------------------------------
# Quasiconcavity
# ---------------------------------------------------------------------------

def is_quasiconcave(h: Callable, rho: Callable, grid) -> tuple[bool, float]:
    """Check that ``h`` is nondecreasing and ``h/rho`` nonincreasing on a sorted grid.

    Returns ``(flag, worst relative violation)``.
    """
    t = np.asarray(grid, dtype=float)
    hv = _arr(h, t)
    q = ext_div(hv, _arr(rho, t))
    worst = 0.0
    for vals, sign in ((hv, 1.0), (q, -1.0)):
        d = sign * np.diff(vals)
        scale = np.maximum(np.abs(vals[:-1]), np.abs(vals[1:]))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, -d / scale, 0.0)
        rel = np.where(np.isnan(rel), 0.0, rel)
        if rel.size:
            worst = max(worst, float(np.max(rel)))
    return worst <= SLACK, max(worst, 0.0)


# ---------------------------------------------------------------------------
# Representation measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RepMeasure:
    """``alpha + beta rho(t) + int min{rho(t), rho(s)} dnu(s)`` with sandwich constants.

    ``nu`` consists of point masses plus an optional density. ``moment`` and ``tail``
    may supply exact forms of ``int_0^t rho * density`` and ``int_t^L density``.
    """

    alpha: float
    beta: float
    L: float
    atoms: tuple[tuple[float, float], ...] = ()
    density: Callable | None = None
    density_breaks: tuple[float, ...] = ()
    C1: float = 1.0
    C2: float = 1.0
    moment: Callable | None = None
    tail: Callable | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not (self.alpha >= 0 and self.beta >= 0):
            raise QCError("alpha and beta must be nonnegative")
        if not (self.C1 > 0 and self.C2 > 0):
            raise QCError("sandwich constants must be positive")
        for s, m in self.atoms:
            if not (0 < s < self.L) or m < 0:
                raise QCError(f"invalid atom ({s}, {m})")

    def _atom_arrays(self):
        if not self.atoms:
            return np.empty(0), np.empty(0)
        a = np.array(sorted(self.atoms))
        return a[:, 0], a[:, 1]

    def _density_tables(self, rho):
        key = id(rho)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is rho:
            return hit[1], hit[2]
        dens = self.density
        mom = self.moment
        if mom is None:
            ri = RunningIntegral(lambda s: ext_mul(_arr(rho, s), _arr(dens, s)), self.L, self.density_breaks)
            mom = ri.left
        tail = self.tail
        if tail is None:
            tail = RunningIntegral(dens, self.L, self.density_breaks).right
        self._cache[key] = (rho, mom, tail)
        return mom, tail

    def nu_part(self, rho, t):
        """``int min{rho(t), rho(s)} dnu(s)`` (vectorised)."""
        t = np.asarray(t, dtype=float)
        y = _arr(rho, t)
        out = np.zeros(np.shape(t))
        pos, mass = self._atom_arrays()
        if pos.size:
            ys = _arr(rho, pos)
            order = np.argsort(ys)
            ys, mass = ys[order], mass[order]
            below = np.concatenate([[0.0], np.cumsum(ext_mul(ys, mass))])
            above = np.concatenate([np.cumsum(mass[::-1])[::-1], [0.0]])
            j = np.searchsorted(ys, y, side="right")
            out = out + below[j] + ext_mul(y, above[j])
        if self.density is not None:
            mom, tail = self._density_tables(rho)
            out = out + np.asarray(mom(t), dtype=float) + ext_mul(y, np.asarray(tail(t), dtype=float))
        return out

    def lower_moment(self, rho, t):
        """``int_{(0,t]} rho dnu`` (vectorised)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.shape(t))
        pos, mass = self._atom_arrays()
        if pos.size:
            cum = np.concatenate([[0.0], np.cumsum(ext_mul(_arr(rho, pos), mass))])
            out = out + cum[np.searchsorted(pos, t, side="right")]
        if self.density is not None:
            mom, _ = self._density_tables(rho)
            out = out + np.asarray(mom(t), dtype=float)
        return out

    def upper_mass(self, rho, t):
        """``nu([t, L))`` (vectorised)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.shape(t))
        pos, mass = self._atom_arrays()
        if pos.size:
            cum = np.concatenate([np.cumsum(mass[::-1])[::-1], [0.0]])
            out = out + cum[np.searchsorted(pos, t, side="left")]
        if self.density is not None:
            _, tail = self._density_tables(rho)
            out = out + np.asarray(tail(t), dtype=float)
        return out


def represented_function(rep: RepMeasure, rho: Callable, t):
    """Value of the representation at ``t`` (vectorised)."""
    t = np.asarray(t, dtype=float)
    out = rep.alpha + ext_mul(rep.beta, _arr(rho, t)) + rep.nu_part(rho, t)
    return out[()] if np.ndim(out) == 0 else out


def verify_representation(h: Callable, rho: Callable, rep: RepMeasure, grid) -> float:
    """Largest violation of ``C1 h <= R <= C2 h`` on the grid, relative to ``h``."""
    t = np.asarray(grid, dtype=float)
    hv = _arr(h, t)
    R = np.asarray(represented_function(rep, rho, t), dtype=float)
    lo = rep.C1 * hv - R
    hi = R - rep.C2 * hv
    with np.errstate(invalid="ignore", divide="ignore"):
        viol = np.maximum(lo, hi) / np.where(hv > 0, hv, 1.0)
    viol = np.where(np.isnan(viol), 0.0, viol)
    return max(float(np.max(viol)), 0.0) if viol.size else 0.0


def canonical_rep(h: Callable, rho: Callable, L: float, step: float = 0.02, span: float = 40.0) -> RepMeasure:
    """Representation of a quasiconcave ``h`` with ``C1 = 1`` and ``C2 = 4``.

    Built from the least concave majorant of ``h`` as a function of ``y = rho(t)``;
    between grid nodes ``h`` can exceed the majorant by at most the factor
    ``max rho(t_{i+1}) / rho(t_i)``, so all terms are scaled by that factor.
    """
    m = LogMap(0.0, L)
    lo_lim, hi_lim = m.x_limits()
    xs = np.arange(max(-span, lo_lim), min(span, hi_lim) + 0.5 * step, step)
    t = m.t(xs)
    y = _arr(rho, t)
    H = _arr(h, t)
    ok = np.isfinite(y) & np.isfinite(H) & (y > 0)
    t, y, H = t[ok], y[ok], H[ok]
    if t.size < 2:
        raise QCError("rho is not positive and finite on the representation grid")
    alpha = _limit(h, "zero", L, float(H[0]))
    beta = _limit(lambda s: ext_div(_arr(h, s), _arr(rho, s)), "L", L, float(H[-1] / y[-1]))
    alpha = min(alpha, float(H[0]))
    beta = min(beta, float(H[-1] / y[-1]))
    # upper hull of (0, alpha), (y_i, H_i) with terminal slope beta
    px = np.concatenate([[0.0], y])
    py = np.concatenate([[alpha], H])
    hull = [0]
    for i in range(1, len(px)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (px[i1] - px[i0]) * (py[i] - py[i0]) - (py[i1] - py[i0]) * (px[i] - px[i0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    # drop trailing vertices whose outgoing slope would fall below beta
    while len(hull) >= 2:
        i0, i1 = hull[-2], hull[-1]
        if (py[i1] - py[i0]) / (px[i1] - px[i0]) < beta:
            hull.pop()
        else:
            break
    hx, hy = px[hull], py[hull]
    slopes = np.diff(hy) / np.diff(hx) if len(hull) > 1 else np.empty(0)
    slopes = np.concatenate([slopes, [beta]])
    masses = slopes[:-1] - slopes[1:]
    atom_t = t[np.array(hull[1:], dtype=int) - 1] if len(hull) > 1 else np.empty(0)
    # the first hull vertex is (0, alpha); atoms sit at the remaining vertices
    mass_at = masses if len(hull) > 1 else np.empty(0)
    ratio = float(np.max(y[1:] / y[:-1]))
    scale = max(ratio, 1.0)
    if 2.0 * scale > 4.0:
        raise QCError("representation grid too coarse for the factor-4 sandwich")
    atoms = tuple((float(s), float(scale * mm)) for s, mm in zip(atom_t, mass_at) if mm > 0 and 0 < s < L)
    return RepMeasure(scale * alpha, scale * beta, float(L), atoms, C1=1.0, C2=4.0)


# ---------------------------------------------------------------------------
# Covering sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoveringSequence:
    """Indices ``K_minus..K_plus`` and points ``x_k`` of a covering sequence.

    ``points[i]`` is ``x_{indices[i]}``; a finite ``K_minus`` puts ``0`` first and a
    finite ``K_plus`` puts ``L`` last (possibly ``inf``). ``z_class[k]`` classifies
    the interval ``(x_{k-1}, x_k]``.
    """

    a: float
    points: np.ndarray
    indices: np.ndarray
    K_minus: float
    K_plus: float
    truncated_at: tuple[int, int] | None
    z_class: dict
    h: Callable
    rho: Callable
    L: float
    limits: dict = field(default_factory=dict)

    def point(self, k):
        return float(self.points[int(k - self.indices[0])])

    @property
    def interior(self):
        """``(indices, points)`` with ``0 < x_k < L``."""
        sel = (self.points > 0) & (self.points < self.L)
        return self.indices[sel], self.points[sel]

    def without_index(self, k):
        """Copy with the point ``x_k`` deleted and the later indices shifted down."""
        i = int(k - self.indices[0])
        pts = np.delete(self.points, i)
        idx = self.indices[: len(pts)].copy()
        kp = self.K_plus - 1 if math.isfinite(self.K_plus) else self.K_plus
        z = {}
        for j in range(1, len(pts)):
            z[int(idx[j])] = _classify(self.h, self.rho, pts[j - 1], pts[j], self.a, self.L, self.limits)
        return CoveringSequence(self.a, pts, idx, self.K_minus, kp, self.truncated_at, z, self.h, self.rho,
                                self.L, dict(self.limits))


def _endpoint_limits(h, rho, L, grid_h, grid_q):
    q = _ratio(rho, h)
    return {
        "h0": _limit(h, "zero", L, float(grid_h[0])),
        "hL": _limit(h, "L", L, float(grid_h[-1])),
        "q0": _limit(q, "zero", L, float(grid_q[0])),
        "qL": _limit(q, "L", L, float(grid_q[-1])),
    }


def _value(g, x, L, limits, key0, keyL):
    if x <= 0:
        return limits[key0]
    if x >= L:
        return limits[keyL]
    return float(_arr(g, np.array([x]))[0])


def _classify(h, rho, lo, hi, a, L, limits):
    h_hi = _value(h, hi, L, limits, "h0", "hL")
    h_lo = _value(h, lo, L, limits, "h0", "hL")
    return "Z1" if h_hi <= a * h_lo * (1 + 1e-9) else "Z2"


def _crossing(g, m, x_lo, x_hi, target, direction):
    """Refine a bracket for a monotone crossing of ``target``.

    ``direction=+1``: smallest x with ``g >= target``; returns the right bracket end.
    ``direction=-1``: largest x with ``g <= target``; returns the left bracket end.
    """
    for _ in range(12):
        xs = np.linspace(x_lo, x_hi, 17)
        v = _arr(g, m.t(xs))
        if direction > 0:
            j = int(np.argmax(v >= target))
            if not v[j] >= target:
                return x_hi
            if j == 0:
                return xs[0]
            x_lo, x_hi = xs[j - 1], xs[j]
        else:
            ok = v <= target
            if not ok.any():
                return x_lo
            j = int(np.flatnonzero(ok)[-1])
            if j == len(xs) - 1:
                return xs[-1]
            x_lo, x_hi = xs[j], xs[j + 1]
        if x_hi - x_lo < 1e-13 * max(1.0, abs(x_lo)):
            break
    return x_hi if direction > 0 else x_lo


def build_covering_sequence(h: Callable, rho: Callable, a: float, x0: float, L: float,
                            max_index: int = MAX_INDEX, step: float = 0.05, span: float = 200.0) -> CoveringSequence:
    """Greedy two-sided covering sequence through ``x0``.

    Moving right, ``x_{k+1}`` is the first point where both ``h`` and ``rho/h`` have
    grown by the factor ``a`` (the later of the two crossings); if either cannot grow
    by ``a`` before ``L`` the sequence ends with ``x_{K+} = L``. Leftward mirrors this.
    """
    if not a > 1:
        raise QCError("parameter a must exceed 1")
    if not 0 < x0 < L:
        raise QCError("x0 must lie inside (0, L)")
    m = LogMap(0.0, L)
    lo_lim, hi_lim = m.x_limits()
    xg = np.arange(max(-span, lo_lim), min(span, hi_lim), step)
    tg = m.t(xg)
    hg = _arr(h, tg)
    q = _ratio(rho, h)
    qg = ext_div(_arr(rho, tg), hg)
    if not np.any(hg > 0):
        raise QCError("zero function")
    valid = np.isfinite(hg) & np.isfinite(qg) & (hg > 0) & (qg > 0)
    limits = _endpoint_limits(h, rho, L, hg[valid], qg[valid])
    x0x = float(m.x(x0))
    vx = xg[valid]
    if vx.size == 0 or not (vx[0] <= x0x <= vx[-1]):
        raise QCError("x0 outside the numerically resolved range")
    x_min, x_max = float(vx[0]), float(vx[-1])

    def step_right(x):
        hx, qx = float(_arr(h, m.t(np.array([x])))[0]), float(q(m.t(np.array([x])))[0])
        # growth reached only in the limit at L also ends the sequence
        if limits["hL"] < a * hx * (1 + 1e-9) or limits["qL"] < a * qx * (1 + 1e-9):
            return "end", None
        cross = []
        for g, gv, target in ((h, hg, a * hx), (q, qg, a * qx)):
            idx = np.flatnonzero((xg > x) & valid & (gv >= target))
            if idx.size == 0:
                return "trunc", None
            j = idx[0]
            left = max(xg[j - 1], x) if j > 0 else x
            cross.append(_crossing(g, m, left, xg[j], target, +1))
        return "ok", max(cross)

    def step_left(x):
        hx, qx = float(_arr(h, m.t(np.array([x])))[0]), float(q(m.t(np.array([x])))[0])
        if limits["h0"] > hx / a * (1 - 1e-9) or limits["q0"] > qx / a * (1 - 1e-9):
            return "end", None
        cross = []
        for g, gv, target in ((h, hg, hx / a), (q, qg, qx / a)):
            idx = np.flatnonzero((xg < x) & valid & (gv <= target))
            if idx.size == 0:
                return "trunc", None
            j = idx[-1]
            right = min(xg[j + 1], x) if j + 1 < len(xg) else x
            cross.append(_crossing(g, m, xg[j], right, target, -1))
        return "ok", min(cross)

    right_x, K_plus, trunc_hi = [], None, None
    x = x0x
    for k in range(1, max_index + 1):
        status, nx = step_right(x)
        if status == "end":
            K_plus = k
            break
        if status == "trunc" or nx >= x_max or nx <= x:
            trunc_hi = k - 1
            break
        right_x.append(nx)
        x = nx
    else:
        trunc_hi = max_index
    left_x, K_minus, trunc_lo = [], None, None
    x = x0x
    for k in range(1, max_index + 1):
        status, nx = step_left(x)
        if status == "end":
            K_minus = -k
            break
        if status == "trunc" or nx <= x_min or nx >= x:
            trunc_lo = -(k - 1)
            break
        left_x.append(nx)
        x = nx
    else:
        trunc_lo = -max_index
    pts_x = left_x[::-1] + [x0x] + right_x
    pts = list(m.t(np.array(pts_x)))
    first = -len(left_x)
    if (K_minus == -1 and K_plus == 1 and limits["h0"] > 0
            and limits["hL"] < a * limits["h0"] * (1 - 1e-9)):
        # h grows by less than a over all of (0, L): the sequence is just {0, L}
        pts, first, K_minus = [], 1, 0
    if K_minus is not None:
        pts = [0.0] + pts
        first -= 1
    if K_plus is not None:
        pts = pts + [float(L)]
    pts = np.array(pts, dtype=float)
    idx = np.arange(first, first + len(pts))
    Km = float(K_minus) if K_minus is not None else -INF
    Kp = float(K_plus) if K_plus is not None else INF
    truncated = None
    if K_minus is None or K_plus is None:
        truncated = (int(idx[0]), int(idx[-1]))
    z = {int(idx[j]): _classify(h, rho, pts[j - 1], pts[j], a, L, limits) for j in range(1, len(pts))}
    return CoveringSequence(float(a), pts, idx, Km, Kp, truncated, z, h, rho, float(L), limits)


def _interval_samples(lo, hi, L, n):
    """Sample points in ``[lo, hi]`` (open at 0, and at L when L is excluded)."""
    if lo <= 0 or hi >= L or math.isinf(hi):
        m = LogMap(lo, hi)
        xl, xh = m.x_limits()
        xs = np.linspace(max(xl, -30.0), min(xh, 30.0), n)
        inner = m.t(xs)
        pts = list(inner)
        if lo > 0:
            pts.insert(0, lo)
        if hi < L and math.isfinite(hi):
            pts.append(hi)
        return np.array(pts)
    return np.concatenate([[lo], lo + (hi - lo) * np.linspace(0, 1, n)[1:-1], [hi]])


def verify_covering_sequence(cs: CoveringSequence, grid_per_interval: int = 16, tol: float = AXIOM_TOL) -> dict:
    """Check every covering-sequence axiom; returns ``{axiom: {"pass": bool, "worst": float}}``."""
    h, rho, a, L = cs.h, cs.rho, cs.a, cs.L
    q = _ratio(rho, h)
    lim = cs.limits
    report = {}

    def rec(name, worst):
        report[name] = {"pass": bool(worst <= tol), "worst": float(max(worst, 0.0))}

    pts, idx = cs.points, cs.indices
    inner_ok = (pts[1:-1] > 0).all() and (pts[1:-1] < L).all() if len(pts) > 2 else True
    mono = float(np.max(-np.diff(pts))) if len(pts) > 1 else 0.0
    rec("monotone", mono if inner_ok else 1.0 if mono <= 0 else mono)
    if np.any(np.diff(pts) <= 0):
        report["monotone"]["pass"] = False

    def hv(x):
        return _value(h, x, L, lim, "h0", "hL")

    def qv(x):
        return _value(q, x, L, lim, "q0", "qL")

    def rel_excess(lhs, rhs):
        """How far ``lhs <= rhs`` fails, relative."""
        if lhs <= rhs:
            return 0.0
        if math.isinf(lhs):
            return INF
        return (lhs - rhs) / max(abs(rhs), abs(lhs), 1e-300)

    # geometric growth on interior pairs
    worst = 0.0
    kmin = cs.K_minus + 2 if math.isfinite(cs.K_minus) else -INF
    kmax = cs.K_plus - 1 if math.isfinite(cs.K_plus) else INF
    pairs = [j for j in range(1, len(pts)) if kmin <= idx[j] <= kmax]
    for j in pairs:
        worst = max(worst, rel_excess(a * hv(pts[j - 1]), hv(pts[j])), rel_excess(a * qv(pts[j - 1]), qv(pts[j])))
    rec("growth", worst)

    # comparability on interior intervals
    worst = 0.0
    for j in pairs:
        t = _interval_samples(pts[j - 1], pts[j], L, grid_per_interval)
        ht, qt = _arr(h, t), q(t)
        hk, qk = hv(pts[j]), qv(pts[j])
        w1 = max(max(rel_excess(hk / a, float(x)), rel_excess(float(x), hk)) for x in ht)
        w2 = max(max(rel_excess(qk / a, float(x)), rel_excess(float(x), qk)) for x in qt)
        worst = max(worst, min(w1, w2))
    rec("comparability", worst)

    # endpoint rules
    kp_inf = not math.isfinite(cs.K_plus)
    km_inf = not math.isfinite(cs.K_minus)
    right_ok = kp_inf == (math.isinf(lim["hL"]) and math.isinf(lim["qL"]))
    left_ok = km_inf == (lim["h0"] == 0 and lim["q0"] == 0)
    worst = 0.0
    if not kp_inf and len(pts) >= 2:
        x = pts[-2]
        t = _interval_samples(x, L, L, grid_per_interval)
        t = t[t < L]
        hx, qx = hv(x), qv(x)
        w1 = max(max(rel_excess(hx, float(v)), rel_excess(float(v), a * hx)) for v in _arr(h, t))
        w2 = max(max(rel_excess(qx, float(v)), rel_excess(float(v), a * qx)) for v in q(t))
        worst = max(worst, min(w1, w2))
    if not km_inf and len(pts) >= 2:
        x = pts[1]
        t = _interval_samples(0.0, x, L, grid_per_interval)
        hx, qx = hv(x), qv(x)
        w1 = max(max(rel_excess(hx / a, float(v)), rel_excess(float(v), hx)) for v in _arr(h, t))
        w2 = max(max(rel_excess(qx / a, float(v)), rel_excess(float(v), qx)) for v in q(t))
        worst = max(worst, min(w1, w2))
    rec("endpoints", worst if (right_ok and left_ok) else max(worst, 1.0))

    # Z1 / Z2 consistency over K^+
    worst = 0.0
    for j in range(1, len(pts)):
        k = int(idx[j])
        lo, hi = pts[j - 1], pts[j]
        t = _interval_samples(lo, hi, L, grid_per_interval)
        if hi >= L:
            t = t[t < L]
            ref_h, ref_q = hv(lo), qv(lo)
            bounds_h = (ref_h, a * ref_h)
            bounds_q = (ref_q, a * ref_q)
        else:
            ref_h, ref_q = hv(hi), qv(hi)
            bounds_h = (ref_h / a, ref_h)
            bounds_q = (ref_q / a, ref_q)
        if cs.z_class.get(k) == "Z1":
            vals, (b0, b1) = _arr(h, t), bounds_h
        else:
            vals, (b0, b1) = q(t), bounds_q
        w = max(max(rel_excess(b0, float(v)), rel_excess(float(v), b1)) for v in vals)
        worst = max(worst, w)
    rec("z_classes", worst)
    return report


def covering_ok(report: dict) -> bool:
    return all(v["pass"] for v in report.values())


# ---------------------------------------------------------------------------
# Discretization parameters
# ---------------------------------------------------------------------------

def thm32_parameter(p: float, C1: float, C2: float) -> float:
    """Twice the smallest admissible parameter for the sum/integral equivalence."""
    bound = 12.0 * 3.0 ** (p + max(1.0, p)) * C2**p / (min(1.0, p) * C1**p)
    return 2.0 * bound ** (1.0 / p)


def lemma_parameter(C1: float, C2: float) -> float:
    return 220.0 * C2 / C1


def _check_parameter(cs, p, rep, kind):
    if kind == "thm32":
        bound = 12.0 * 3.0 ** (p + max(1.0, p)) * rep.C2**p / (min(1.0, p) * rep.C1**p)
        if not cs.a**p > bound:
            warnings.warn(f"parameter a={cs.a} is below the sufficient bound", stacklevel=3)
    else:
        if not cs.a > 108.0 * rep.C2 / rep.C1:
            warnings.warn(f"parameter a={cs.a} is below 108*C2/C1", stacklevel=3)


def _warn_truncation(cs, terms):
    terms = np.asarray(terms, dtype=float)
    if cs.truncated_at is None or terms.size == 0:
        return
    total = float(np.sum(terms))
    if total > 0 and math.isfinite(total):
        edge = []
        if not math.isfinite(cs.K_minus):
            edge.append(terms[0])
        if not math.isfinite(cs.K_plus):
            edge.append(terms[-1])
        if edge and max(edge) > 0.01 * total:
            warnings.warn("truncation-limited", stacklevel=3)


def _sequence_values(cs, g):
    """``g`` at every sequence point, with one-sided limits at 0 and L."""
    out = np.empty(len(cs.points))
    inner = (cs.points > 0) & (cs.points < cs.L)
    out[inner] = _arr(g, cs.points[inner])
    if not inner[0]:
        out[0] = _limit(g, "zero", cs.L, float(_arr(g, np.array([1e-14 * min(cs.L, 1.0)]))[0]))
    if not inner[-1]:
        out[-1] = _limit(g, "L", cs.L, float(out[-2]) if len(out) > 1 else 0.0)
    return out


# ---------------------------------------------------------------------------
# Sums and integrals over covering sequences
# ---------------------------------------------------------------------------

def thm32_sides(f: Callable, rep: RepMeasure, cs: CoveringSequence, p: float) -> tuple[ExtValue, ExtValue]:
    """Discrete sum and its integral counterpart for ``f`` quasiconcave w.r.t. ``rho**p``."""
    _check_parameter(cs, p, rep, "thm32")
    h, rho, L = cs.h, cs.rho, cs.L
    term = lambda t: ext_mul(_arr(f, t), ext_pow(ext_div(_arr(h, t), _arr(rho, t)), p))
    vals = _sequence_values(cs, term)
    _warn_truncation(cs, vals)
    lhs = float(np.sum(vals))
    rhs = 0.0
    if rep.alpha > 0:
        lim0 = _limit(lambda t: ext_div(_arr(f, t), ext_pow(_arr(rho, t), p)), "zero", L, 0.0)
        rhs += float(ext_mul(rep.alpha**p, lim0))
    if rep.beta > 0:
        limL = _limit(f, "L", L, 0.0)
        rhs += float(ext_mul(rep.beta**p, limL))

    def psi_f(t):
        N = rep.nu_part(rho, t)
        return ext_mul(_arr(f, t), ext_mul(ext_pow(_arr(rho, t), 1 - p), ext_pow(N, p - 1)))

    pos, mass = rep._atom_arrays()
    if pos.size:
        rhs += float(np.sum(ext_mul(psi_f(pos), mass)))
    if rep.density is not None:
        rhs += quad(lambda t: ext_mul(psi_f(t), _arr(rep.density, t)), 0.0, L, points=rep.density_breaks)
    return ExtValue(lhs), ExtValue(rhs)


class _KernelGrid:
    """Shared nodes for sups and integrals over ``(0, L)`` against ``f``."""

    def __init__(self, f, L, points=(), n_sup=2048, step=0.25, order=8):
        self.L = L
        self.t_int, self.w_int, _ = composite_nodes(L, step, order, points)
        ts = np.concatenate([log_grid(L, n_sup, 14.0), [p for p in points if 0 < p < L]])
        extra = [p * (1 - 1e-12) for p in points if 0 < p < L]
        self.t_sup = np.sort(np.concatenate([ts, extra]))
        self.f_int = _arr(f, self.t_int)
        self.f_sup = _arr(f, self.t_sup)


def _kernel_sup(rk, rs, fs):
    """``sup_s f(s) / (rk + rs(s))`` for every entry of ``rk``."""
    out = np.empty(len(rk))
    for i0 in range(0, len(rk), 256):
        blk = rk[i0:i0 + 256, None] + rs[None, :]
        with np.errstate(all="ignore"):
            vals = ext_div(fs[None, :], blk)
        out[i0:i0 + 256] = np.max(vals, axis=1)
    return out


def _kernel_int(rk, rs, fw):
    """``int f(s) / (rk + rs(s)) ds`` for every entry of ``rk`` (fw = f * weights)."""
    out = np.empty(len(rk))
    for i0 in range(0, len(rk), 128):
        blk = rk[i0:i0 + 128, None] + rs[None, :]
        with np.errstate(all="ignore"):
            vals = ext_div(fw[None, :], blk)
        out[i0:i0 + 128] = np.sum(vals, axis=1)
    return out


def _endpoint_rho(rho, L):
    r0 = _limit(rho, "zero", L, 0.0)
    rL = _limit(rho, "L", L, INF)
    return r0, rL


def _seq_rho(cs, power):
    r0, rL = _endpoint_rho(cs.rho, cs.L)
    out = np.empty(len(cs.points))
    inner = (cs.points > 0) & (cs.points < cs.L)
    out[inner] = ext_pow(_arr(cs.rho, cs.points[inner]), power)
    if not inner[0]:
        out[0] = ext_pow(r0, power)
    if not inner[-1]:
        out[-1] = ext_pow(rL, power)
    return out


def _interval_sups(g, cs, n=64):
    """``sup_{(x_{k-1}, x_k]} g`` for every interval of the sequence."""
    pts, L = cs.points, cs.L
    out = []
    for j in range(1, len(pts)):
        t = _interval_samples(pts[j - 1], pts[j], L, n)
        t = t[(t > 0) & (t < L)]
        v = _arr(g, t)
        s = float(np.max(v)) if v.size else 0.0
        if pts[j - 1] <= 0:
            s = max(s, _limit(g, "zero", L, 0.0))
        if pts[j] >= L:
            s = max(s, _limit(g, "L", L, 0.0))
        out.append(s)
    return np.array(out)


def _interval_integrals(g, cs, points=()):
    """``int_{x_{k-1}}^{x_k} g`` for every interval of the sequence."""
    pts, L = cs.points, cs.L
    inner = [p for p in pts if 0 < p < L]
    t, w, edges = composite_nodes(L, 0.25, 8, list(inner) + list(points))
    vals = ext_mul(_arr(g, t), w)
    cum = np.concatenate([[0.0], np.cumsum(vals)])
    # node index where each sequence point starts
    pos = np.searchsorted(t, pts, side="left")
    pos = np.where(pts <= 0, 0, pos)
    pos = np.where(pts >= L, len(t), pos)
    return cum[pos[1:]] - cum[pos[:-1]]


def lemma33_triple(f: Callable, h: Callable, rho: Callable, rep: RepMeasure, cs: CoveringSequence, p: float,
                   points=()) -> tuple[ExtValue, ExtValue, ExtValue]:
    """Interval sups, kernel sups at the sequence points and the representation form."""
    _check_parameter(cs, p, rep, "lemma")
    L = cs.L
    ip = 1.0 / p
    g = lambda t: ext_mul(ext_pow(ext_div(_arr(h, t), _arr(rho, t)), ip), _arr(f, t))
    sups = _interval_sups(g, cs)
    q1 = float(np.sum(ext_pow(sups, p)))
    kg = _KernelGrid(f, L, points)
    rs = ext_pow(_arr(rho, kg.t_sup), ip)
    rk = _seq_rho(cs, ip)
    hk = _sequence_values(cs, h)
    terms = ext_mul(hk, ext_pow(_kernel_sup(rk, rs, kg.f_sup), p))
    _warn_truncation(cs, terms)
    q2 = float(np.sum(terms))
    q3 = 0.0
    if rep.alpha > 0:
        q3 += float(ext_mul(rep.alpha, ext_pow(np.max(ext_div(kg.f_sup, rs)), p)))
    if rep.beta > 0:
        q3 += float(ext_mul(rep.beta, ext_pow(np.max(kg.f_sup), p)))

    def inner(t):
        r = ext_pow(_arr(rho, t), ip)
        return ext_pow(ext_mul(r, _kernel_sup(np.atleast_1d(r), rs, kg.f_sup)), p)

    pos, mass = rep._atom_arrays()
    if pos.size:
        q3 += float(np.sum(ext_mul(inner(pos), mass)))
    if rep.density is not None:
        t, w, _ = composite_nodes(L, 0.5, 6, rep.density_breaks)
        q3 += float(np.sum(ext_mul(inner(t), ext_mul(_arr(rep.density, t), w))))
    return ExtValue(q1), ExtValue(q2), ExtValue(q3)


def lemma34_triple(f: Callable, h: Callable, rho: Callable, rep: RepMeasure, cs: CoveringSequence, p: float,
                   points=()) -> tuple[ExtValue, ExtValue, ExtValue]:
    """Integral version of :func:`lemma33_triple`."""
    _check_parameter(cs, p, rep, "lemma")
    L = cs.L
    ip = 1.0 / p
    g = lambda t: ext_mul(ext_pow(ext_div(_arr(h, t), _arr(rho, t)), ip), _arr(f, t))
    q1 = float(np.sum(ext_pow(_interval_integrals(g, cs, points), p)))
    kg = _KernelGrid(f, L, points)
    rs = ext_pow(_arr(rho, kg.t_int), ip)
    fw = ext_mul(kg.f_int, kg.w_int)
    rk = _seq_rho(cs, ip)
    hk = _sequence_values(cs, h)
    terms = ext_mul(hk, ext_pow(_kernel_int(rk, rs, fw), p))
    _warn_truncation(cs, terms)
    q2 = float(np.sum(terms))
    q3 = 0.0
    if rep.alpha > 0:
        q3 += float(ext_mul(rep.alpha, ext_pow(np.sum(ext_div(fw, rs)), p)))
    if rep.beta > 0:
        q3 += float(ext_mul(rep.beta, ext_pow(np.sum(fw), p)))

    def inner(t):
        r = ext_pow(_arr(rho, t), ip)
        return ext_pow(ext_mul(r, _kernel_int(np.atleast_1d(r), rs, fw)), p)

    pos, mass = rep._atom_arrays()
    if pos.size:
        q3 += float(np.sum(ext_mul(inner(pos), mass)))
    if rep.density is not None:
        t, w, _ = composite_nodes(L, 0.5, 6, rep.density_breaks)
        q3 += float(np.sum(ext_mul(inner(t), ext_mul(_arr(rep.density, t), w))))
    return ExtValue(q1), ExtValue(q2), ExtValue(q3)


def lemma35_pair(f: Callable, phi: Callable, rho: Callable, cs: CoveringSequence, p: float,
                 points=()) -> tuple[ExtValue, ExtValue, ExtValue]:
    """Continuous kernel sup, its restriction to the sequence, and interval-integral sup."""
    L = cs.L
    ip = 1.0 / p
    kg = _KernelGrid(f, L, points)
    rs = ext_pow(_arr(rho, kg.t_int), ip)
    fw = ext_mul(kg.f_int, kg.w_int)
    tt = log_grid(L, 1024, 14.0)
    cont_vals = ext_mul(_arr(phi, tt), ext_pow(_kernel_int(ext_pow(_arr(rho, tt), ip), rs, fw), p))
    cont = float(np.max(cont_vals))
    rk = _seq_rho(cs, ip)
    phik = _sequence_values(cs, phi)
    disc_vals = ext_mul(phik, ext_pow(_kernel_int(rk, rs, fw), p))
    # the endpoint terms of the sequence are limits of the continuous expression
    cont = max(cont, float(disc_vals[0]) if cs.points[0] <= 0 else 0.0,
               float(disc_vals[-1]) if cs.points[-1] >= L else 0.0)
    disc = float(np.max(disc_vals))
    g = lambda t: ext_mul(_arr(f, t), ext_pow(ext_div(_arr(phi, t), _arr(rho, t)), ip))
    ints = _interval_integrals(g, cs, points)
    inter = float(np.max(ext_pow(ints, p))) if ints.size else 0.0
    return ExtValue(cont), ExtValue(disc), ExtValue(inter)
