"""Piecewise power-log weights on (0, L), their primitives and tail integrals.

A piece anchored at zero has density ``c * t**alpha * (1 + |log t|)**beta``; a piece
anchored at ``L`` has density ``c * (L - t)**alpha * (1 + |log(L - t)|)**beta``.
Pieces with ``beta`` in {0, 1} have closed-form antiderivatives; other pieces and
custom densities fall back to tabulated quadrature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .quad import INF, ExtValue, LogMap, RunningIntegral, ext_pow


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    c: float
    alpha: float = 0.0
    beta: float = 0.0
    anchor: str = "zero"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise WeightError(f"piece has empty interval ({self.lo}, {self.hi})")
        if self.c < 0:
            raise WeightError(f"piece coefficient must be nonnegative, got {self.c}")
        if self.anchor not in ("zero", "L"):
            raise WeightError(f"piece anchor must be 'zero' or 'L', got {self.anchor!r}")

    def density(self, t, L):
        t = np.asarray(t, dtype=float)
        s = t if self.anchor == "zero" else L - t
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self.c * ext_pow(s, self.alpha)
            if self.beta:
                out = out * (1.0 + np.abs(np.log(s))) ** self.beta
        return out

    def derivative(self, t, L):
        t = np.asarray(t, dtype=float)
        s = t if self.anchor == "zero" else L - t
        sign = 1.0 if self.anchor == "zero" else -1.0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ell = 1.0 + np.abs(np.log(s))
            dl = np.sign(np.log(s)) / s
            d = self.alpha * ext_pow(s, self.alpha - 1) * ell ** self.beta
            if self.beta:
                d = d + self.beta * ext_pow(s, self.alpha) * ell ** (self.beta - 1) * dl
        return sign * self.c * d

    @property
    def closed_form(self) -> bool:
        return self.beta in (0.0, 1.0)


def _antiderivative(s, alpha, beta):
    """Antiderivative of ``s**alpha * (1 + |log s|)**beta`` for beta in {0, 1}.

    Normalised to vanish at ``s = 0`` when ``alpha > -1``; continuous across ``s = 1``.
    """
    s = np.asarray(s, dtype=float)
    a1 = alpha + 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ls = np.log(s)
        if beta == 0.0:
            if a1 == 0:
                return ls
            out = ext_pow(s, a1) / a1
            if a1 < 0:
                out = np.where(s == 0, -INF, out)
            return out
        # beta == 1
        if a1 == 0:
            return np.where(s <= 1, ls - 0.5 * ls**2, ls + 0.5 * ls**2)
        p = ext_pow(s, a1)
        plog = np.where(p == 0, 0.0, p * ls)
        plog = np.where(np.isinf(s), np.where(a1 > 0, INF, 0.0), plog)
        below = p / a1 - plog / a1 + p / a1**2
        above = p / a1 + plog / a1 - p / a1**2 + 2.0 / a1**2
        out = np.where(s <= 1, below, above)
        if a1 < 0:
            out = np.where(s == 0, -INF, out)
        return out


@dataclass(frozen=True, eq=False)
class WeightSpec:
    """A weight on ``(0, L)``: a list of power-log pieces or a custom density."""

    pieces: tuple[Piece, ...]
    L: float
    custom: Callable | None = None
    custom_primitive: Callable | None = None
    custom_breaks: tuple[float, ...] = ()
    locally_integrable: bool = True
    label: str = ""
    custom_derivative: Callable | None = None

    def __post_init__(self):
        if not self.L > 0:
            raise WeightError(f"L must be positive, got {self.L}")
        if self.custom is None:
            if not self.pieces:
                raise WeightError("weight has no pieces")
            if abs(self.pieces[0].lo) > 0:
                raise WeightError("first piece must start at 0")
            if self.pieces[-1].hi != self.L:
                raise WeightError("last piece must end at L")
            for a, b in zip(self.pieces[:-1], self.pieces[1:]):
                if a.hi != b.lo:
                    raise WeightError("pieces must be contiguous")
            for p in self.pieces:
                if p.anchor == "L" and math.isinf(self.L):
                    raise WeightError("pieces anchored at L need finite L")

    @property
    def is_custom(self) -> bool:
        return self.custom is not None

    @property
    def breaks(self) -> tuple[float, ...]:
        """Points where the density is not smooth (piece ends and log kinks)."""
        if self.is_custom:
            return tuple(self.custom_breaks)
        out = {p.lo for p in self.pieces[1:]}
        for p in self.pieces:
            if p.beta:
                k = 1.0 if p.anchor == "zero" else self.L - 1.0
                if p.lo < k < p.hi:
                    out.add(k)
        return tuple(sorted(out))

    def __call__(self, t):
        return eval_weight(self, t)

    @property
    def is_single_power(self) -> bool:
        return (not self.is_custom and len(self.pieces) == 1 and self.pieces[0].beta == 0
                and self.pieces[0].anchor == "zero")

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_custom:
            if self.custom_derivative is None:
                raise WeightError("custom weight has no derivative")
            return np.asarray(self.custom_derivative(t), dtype=float)
        idx = self._piece_index(t)
        out = np.zeros(np.shape(t))
        for i, p in enumerate(self.pieces):
            sel = idx == i
            if np.any(sel):
                out = np.where(sel, p.derivative(t, self.L), out)
        return out[()] if np.ndim(out) == 0 else out

    def _piece_index(self, t):
        los = np.array([p.lo for p in self.pieces])
        return np.clip(np.searchsorted(los, t, side="right") - 1, 0, len(self.pieces) - 1)


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------

def power(alpha=0.0, c=1.0, L=1.0, beta=0.0) -> WeightSpec:
    return WeightSpec((Piece(0.0, float(L), float(c), float(alpha), float(beta)),), float(L))


def powerlog(alpha, beta, c=1.0, L=1.0) -> WeightSpec:
    return power(alpha, c, L, beta)


def reflected(alpha, c=1.0, L=1.0, beta=0.0) -> WeightSpec:
    """Density ``c (L - t)**alpha (1 + |log(L - t)|)**beta``."""
    return WeightSpec((Piece(0.0, float(L), float(c), float(alpha), float(beta), "L"),), float(L))


def piecewise(breaks: Sequence[float], pieces: Sequence[dict], L=1.0) -> WeightSpec:
    """Pieces given as dicts with keys c, alpha, beta, anchor between consecutive breaks."""
    ends = [0.0, *[float(b) for b in breaks], float(L)]
    if len(pieces) != len(ends) - 1:
        raise WeightError(f"need {len(ends) - 1} pieces for {len(breaks)} breaks, got {len(pieces)}")
    out = []
    for lo, hi, d in zip(ends[:-1], ends[1:], pieces):
        out.append(Piece(lo, hi, float(d.get("c", 1.0)), float(d.get("alpha", 0.0)),
                         float(d.get("beta", 0.0)), d.get("anchor", "zero")))
    return WeightSpec(tuple(out), float(L))


def indicator(a, b, L=1.0, c=1.0) -> WeightSpec:
    """``c`` on ``(a, b)``, zero elsewhere in ``(0, L)``."""
    breaks, vals = [], []
    if a > 0:
        breaks.append(a)
        vals.append(0.0)
    vals.append(c)
    if b < L:
        breaks.append(b)
        vals.append(0.0)
    return piecewise(breaks, [{"c": v} for v in vals], L)


def custom(density: Callable, L=1.0, primitive: Callable | None = None, breaks=(), locally_integrable=True,
           derivative: Callable | None = None, label="custom") -> WeightSpec:
    return WeightSpec((), float(L), density, primitive, tuple(breaks), locally_integrable, label, derivative)


def _num(x, path):
    if isinstance(x, str) and x.lower() in ("inf", "infinity", "+inf"):
        return INF
    if not isinstance(x, (int, float)) or isinstance(x, bool):
        raise WeightError(f"{path}: expected a number, got {x!r}")
    return float(x)


def from_json(obj, L: float, path: str = "weight") -> WeightSpec:
    """Build a weight from its JSON description.

    Accepted forms: ``{"type": "power", "alpha": a, "c": c}``,
    ``{"type": "powerlog", "alpha": a, "beta": b, "c": c}``,
    ``{"type": "reflected", "alpha": a, "beta": b, "c": c}``,
    ``{"type": "piecewise", "breaks": [...], "pieces": [{...}, ...]}``.
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise WeightError(f"{path}: expected an object")
    kind = obj.get("type")
    try:
        if kind in ("power", "powerlog", "reflected"):
            alpha = _num(obj.get("alpha", 0.0), f"{path}.alpha")
            beta = _num(obj.get("beta", 0.0), f"{path}.beta")
            c = _num(obj.get("c", 1.0), f"{path}.c")
            if kind == "reflected":
                return reflected(alpha, c, L, beta)
            return power(alpha, c, L, beta)
        if kind == "piecewise":
            breaks = obj.get("breaks", [])
            pieces = obj.get("pieces")
            if not isinstance(breaks, list):
                raise WeightError(f"{path}.breaks: expected a list")
            if not isinstance(pieces, list):
                raise WeightError(f"{path}.pieces: expected a list")
            bs = [_num(b, f"{path}.breaks[{i}]") for i, b in enumerate(breaks)]
            ps = []
            for i, p in enumerate(pieces):
                if not isinstance(p, dict):
                    raise WeightError(f"{path}.pieces[{i}]: expected an object")
                ps.append({k: (_num(v, f"{path}.pieces[{i}].{k}") if k != "anchor" else v) for k, v in p.items()})
            return piecewise(bs, ps, L)
    except WeightError as e:
        if str(e).startswith(path):
            raise
        raise WeightError(f"{path}: {e}") from None
    raise WeightError(f"{path}.type: unknown weight type {kind!r}")


def to_json(w: WeightSpec) -> dict:
    if w.is_custom:
        return {"type": "custom", "label": w.label}
    return {
        "type": "piecewise",
        "breaks": [p.lo for p in w.pieces[1:]],
        "pieces": [{"c": p.c, "alpha": p.alpha, "beta": p.beta, "anchor": p.anchor} for p in w.pieces],
    }


# ---------------------------------------------------------------------------
# Evaluation and primitives
# ---------------------------------------------------------------------------

def eval_weight(w: WeightSpec, t):
    """Density at ``t``; at a piece boundary the right-hand piece is used."""
    t = np.asarray(t, dtype=float)
    if w.is_custom:
        out = np.asarray(w.custom(t), dtype=float)
        return out[()] if out.ndim == 0 else out
    if len(w.pieces) == 1:
        out = np.asarray(w.pieces[0].density(t, w.L), dtype=float)
        return out[()] if out.ndim == 0 else out
    idx = w._piece_index(t)
    out = np.zeros(np.shape(t))
    for i, p in enumerate(w.pieces):
        sel = idx == i
        if np.any(sel):
            out = np.where(sel, p.density(t, w.L), out)
    return out[()] if np.ndim(out) == 0 else out


class Primitive:
    """``t -> int_0^t w`` with its limit at ``L`` and an inverse."""

    def __init__(self, w: WeightSpec):
        self.base_weight = w
        self.L = w.L
        if w.is_custom:
            self.closed_form_available = w.custom_primitive is not None
            self._table = None if self.closed_form_available else RunningIntegral(w.custom, w.L, w.breaks)
        else:
            self.closed_form_available = all(p.closed_form for p in w.pieces)
            self._tables = {}
            self._offsets = self._piece_offsets()
        self._check()

    # piece integrals -----------------------------------------------------
    def _piece_integral(self, i, t):
        """``int_{lo_i}^t`` of piece ``i`` for ``t`` in ``[lo_i, hi_i]``."""
        p = self.base_weight.pieces[i]
        L = self.L
        t = np.asarray(t, dtype=float)
        if p.c == 0:
            return np.zeros_like(t)
        if p.closed_form:
            if p.anchor == "zero":
                with np.errstate(invalid="ignore"):
                    val = _antiderivative(t, p.alpha, p.beta) - _antiderivative(p.lo, p.alpha, p.beta)
                    if p.lo == 0 and p.alpha <= -1:
                        val = np.full_like(t, INF)
            else:
                with np.errstate(invalid="ignore"):
                    val = _antiderivative(L - p.lo, p.alpha, p.beta) - _antiderivative(L - t, p.alpha, p.beta)
                    if p.alpha <= -1:
                        val = np.where(t >= L, INF, val)
            val = np.where(t <= p.lo, 0.0, val)
            return p.c * np.where(np.isnan(val), INF, val)
        table = self._tables.get(i)
        if table is None:
            table = RunningIntegral(lambda s: p.density(p.lo + s, L), p.hi - p.lo)
            self._tables[i] = table
        val = table.left(np.clip(t, p.lo, p.hi) - p.lo)
        return np.where(t <= p.lo, 0.0, val)

    def _piece_offsets(self):
        offs = [0.0]
        for i, p in enumerate(self.base_weight.pieces[:-1]):
            offs.append(offs[-1] + float(self._piece_integral(i, p.hi)))
        return np.array(offs)

    def _check(self):
        w = self.base_weight
        if not w.is_custom:
            first = w.pieces[0]
            if first.c == 0:
                raise WeightError("not a weight: density vanishes on the first piece, so V(t) = 0 near 0")
            if first.anchor == "zero" and first.alpha <= -1:
                raise WeightError("not a weight: V(t) is infinite (non-integrable at 0)")
            for p in w.pieces[:-1]:
                if p.anchor == "L" and p.alpha <= -1:
                    raise WeightError("not a weight: V(t) is infinite at an interior point")
            if np.isinf(self._offsets).any():
                raise WeightError("not a weight: V(t) is infinite at an interior point")
        elif not w.locally_integrable:
            raise WeightError("not a weight: custom density declared not locally integrable")
        if not w.is_custom:
            return
        # sample check for custom densities
        ts = np.asarray(LogMap(0.0, w.L).t(np.linspace(-20, 20, 32)))
        vals = self.eval(ts)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise WeightError("not a weight: V must satisfy 0 < V(t) < inf inside (0, L)")

    # public API ----------------------------------------------------------
    def eval(self, t):
        """``int_0^t w`` (vectorised), ``t`` clipped to ``[0, L]``."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.L)
        w = self.base_weight
        if w.is_custom:
            out = w.custom_primitive(t) if self.closed_form_available else self._table.left(t)
            out = np.asarray(out, dtype=float)
            return out[()] if out.ndim == 0 else out
        if len(w.pieces) == 1:
            out = np.asarray(self._piece_integral(0, t), dtype=float)
            return out[()] if out.ndim == 0 else out
        idx = w._piece_index(t)
        out = np.zeros(np.shape(t))
        for i in range(len(w.pieces)):
            sel = idx == i
            if np.any(sel):
                out = np.where(sel, self._offsets[i] + self._piece_integral(i, t), out)
        return out[()] if np.ndim(out) == 0 else out

    __call__ = eval

    def interval(self, a, b):
        """``int_a^b w`` computed without cancellation near the end points where possible."""
        return self.eval(b) - self.eval(a)

    @cached_property
    def value_at_L(self) -> ExtValue:
        w = self.base_weight
        if w.is_custom:
            if self.closed_form_available:
                v = float(w.custom_primitive(np.asarray(self.L)))
            else:
                v = float(self._table.total)
            return ExtValue(v)
        last = len(w.pieces) - 1
        if math.isinf(self.L):
            p = w.pieces[-1]
            if p.c == 0:
                tail = 0.0
            elif p.alpha < -1:
                tail = float(self._piece_integral(last, np.inf))
            else:
                tail = INF
        else:
            tail = float(self._piece_integral(last, self.L))
        return ExtValue(self._offsets[-1] + tail)

    def inverse(self, y):
        """Smallest ``t`` with ``eval(t) >= y`` (vectorised bisection in log coordinates)."""
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y)
        w = self.base_weight
        if (not w.is_custom and len(w.pieces) == 1 and w.pieces[0].anchor == "zero"
                and w.pieces[0].beta == 0 and w.pieces[0].alpha > -1):
            p = w.pieces[0]
            a1 = p.alpha + 1
            out = (np.maximum(y, 0.0) * a1 / p.c) ** (1.0 / a1)
            out = np.minimum(out, self.L)
            return out[0] if scalar else out
        m = LogMap(0.0, self.L)
        lo_x, hi_x = -700.0, 700.0
        lo = np.full(y.shape, lo_x)
        hi = np.full(y.shape, hi_x)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            val = self.eval(m.t(mid))
            below = val < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < 1e-13:
                break
        out = m.t(hi)
        out = np.where(y <= 0, 0.0, out)
        out = np.where(y >= self.value_at_L.value, self.L, out)
        return out[0] if scalar else out


def primitive(w: WeightSpec) -> Primitive:
    return Primitive(w)


# ---------------------------------------------------------------------------
# Tail integrals and admissibility
# ---------------------------------------------------------------------------

_TAIL_CACHE: dict = {}


def _power_tail(v: WeightSpec, U: Primitive, p: float, t):
    """Closed form of ``int_t^L v U**-p`` when ``v`` and ``u`` are single power pieces."""
    pv, pu = v.pieces[0], U.base_weight.pieces[0]
    L = v.L
    b1 = pu.alpha + 1
    K = pv.c * (pu.c / b1) ** (-p)
    g = pv.alpha - p * b1 + 1
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if math.isinf(L):
            if g < 0:
                out = -K * ext_pow(t, g) / g
            else:
                out = np.full_like(t, INF)
        elif g == 0:
            out = K * np.log(L / t)
        else:
            out = -K * L**g * np.expm1(g * np.log(t / L)) / g
    out = np.where(t >= L, 0.0, out)
    at_zero = INF if g <= 0 or math.isinf(L) else K * L**g / g
    out = np.where(t <= 0, at_zero, out)
    return out


def tail_integral(v: WeightSpec, U: Primitive, p: float, t):
    """``int_t^L v(s) U(s)**-p ds`` (vectorised); may be infinite."""
    t = np.asarray(t, dtype=float)
    u = U.base_weight
    if v.is_single_power and u.is_single_power:
        out = _power_tail(v, U, p, t)
        return out[()] if np.ndim(out) == 0 else out
    key = (id(v), id(U), float(p))
    entry = _TAIL_CACHE.get(key)
    if entry is None or entry[0] is not v or entry[1] is not U:
        breaks = sorted(set(v.breaks) | set(u.breaks))
        g = lambda s: eval_weight(v, s) * ext_pow(U.eval(s), -p)
        entry = (v, U, RunningIntegral(g, v.L, breaks))
        if len(_TAIL_CACHE) > 64:
            _TAIL_CACHE.clear()
        _TAIL_CACHE[key] = entry
    out = entry[2].right(t)
    return out[()] if np.ndim(out) == 0 else out


def is_admissible(U: Primitive) -> bool:
    """True when ``u > 0`` a.e., so that ``U`` is positive, increasing and continuous."""
    w = U.base_weight
    if not w.is_custom:
        for p in w.pieces:
            if p.c <= 0:
                return False
    ts = np.asarray(LogMap(0.0, w.L).t(np.linspace(-12, 12, 64)))
    vals = np.asarray(eval_weight(w, ts), dtype=float)
    if np.any(~(vals > 0)):
        return False
    Us = U.eval(ts)
    return bool(np.all(np.diff(Us) > 0) and np.all(np.isfinite(Us)) and Us[0] > 0)


def sobolev_exponents(p: float, q: float, m: float, n: float, d: float) -> tuple[float, float]:
    """Lorentz exponents ``(p m / (n - d), q m / (n - d))`` for a trace embedding."""
    if not m < n:
        raise WeightError(f"need m < n, got m={m}, n={n}")
    if not 0 < d < n - m:
        raise WeightError(f"need 0 < d < n - m, got d={d}")
    s = m / (n - d)
    return p * s, q * s
