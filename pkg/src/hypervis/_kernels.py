"""Hot per-scene kernels: shadow half-widths, circle coverage, first hits.

Every kernel exists twice: a scalar-loop version compiled with numba
(@njit, nogil) and a vectorized pure-numpy fallback.  The active path is
chosen at import time; set HYPERVIS_NO_NUMBA=1 to force the numpy path.
benchmarks/bench_kernels.py compares the two.

All angular inputs are offsets relative to some reference direction; the
coverage kernel takes absolute arc centers on [0, 2*pi).
"""

from __future__ import annotations

import math
import os

import numpy as np

TWO_PI = 2.0 * math.pi

_env = os.environ.get("HYPERVIS_NO_NUMBA", "").strip().lower()
_numba_disabled = _env in ("1", "true", "yes")

try:  # pragma: no cover - exercised via env flag in tests
    if _numba_disabled:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# ball shadow half-widths
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _ball_halfwidths_nb(t, rad, r):
    n = t.shape[0]
    out = np.empty(n)
    for i in range(n):
        ti = t[i]
        ri = rad[i]
        if ti <= ri:
            out[i] = math.pi
            continue
        if r <= 0.0:
            out[i] = 0.0
            continue
        shri = math.sinh(ri)
        d = ti - r
        # perpendicular case (foot inside the segment); the tanh form
        # saturates for large arguments, this product form does not
        csh = math.cosh(r) * shri
        if math.sinh(d) * math.sinh(ti + r) < csh * csh:
            out[i] = math.asin(shri / math.sinh(ti))
            continue
        # endpoint case via 1 - cos(w), stable when w is tiny
        u = (math.cosh(ri) - math.cosh(d)) / (math.sinh(ti) * math.sinh(r))
        if u <= 0.0:
            out[i] = 0.0
        elif u >= 2.0:
            out[i] = math.pi
        else:
            out[i] = 2.0 * math.asin(math.sqrt(0.5 * u))
    return out


def _ball_halfwidths_np(t, rad, r):
    t = np.asarray(t, dtype=np.float64)
    rad = np.asarray(rad, dtype=np.float64)
    out = np.zeros_like(t)
    covering = t <= rad
    out[covering] = math.pi
    if r <= 0.0:
        return out
    rest = ~covering
    ti, ri = t[rest], rad[rest]
    shri = np.sinh(ri)
    d = ti - r
    perp = np.sinh(d) * np.sinh(ti + r) < (math.cosh(r) * shri) ** 2
    w = np.empty_like(ti)
    w[perp] = np.arcsin(shri[perp] / np.sinh(ti[perp]))
    ep = ~perp
    u = (np.cosh(ri[ep]) - np.cosh(d[ep])) / (np.sinh(ti[ep]) * math.sinh(r))
    w[ep] = 2.0 * np.arcsin(np.sqrt(np.clip(0.5 * u, 0.0, 1.0)))
    out[rest] = w
    return out


# ---------------------------------------------------------------------------
# line (geodesic) shadow half-widths
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _line_halfwidths_nb(p, r):
    n = p.shape[0]
    out = np.empty(n)
    tr = math.tanh(r)
    for i in range(n):
        tp = math.tanh(p[i])
        if tp >= tr:
            out[i] = 0.0
        else:
            out[i] = math.acos(tp / tr)
    return out


def _line_halfwidths_np(p, r):
    p = np.asarray(p, dtype=np.float64)
    tp = np.tanh(p)
    tr = math.tanh(r)
    return np.where(tp >= tr, 0.0, np.arccos(np.minimum(tp / tr, 1.0)))


# ---------------------------------------------------------------------------
# coverage of an angular window by arcs
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _uncovered_measure_nb(centers, halfwidths, window):
    n = centers.shape[0]
    starts = np.empty(2 * n)
    ends = np.empty(2 * n)
    m = 0
    for i in range(n):
        hw = halfwidths[i]
        if hw <= 0.0:
            continue
        if hw >= math.pi:
            return 0.0
        lo = (centers[i] - hw) % TWO_PI
        hi = lo + 2.0 * hw
        if hi <= TWO_PI:
            if lo < window:
                starts[m] = lo
                ends[m] = min(hi, window)
                m += 1
        else:
            if lo < window:
                starts[m] = lo
                ends[m] = window
                m += 1
            wrapped = hi - TWO_PI
            starts[m] = 0.0
            ends[m] = min(wrapped, window)
            m += 1
    if m == 0:
        return window
    order = np.argsort(starts[:m])
    uncovered = 0.0
    frontier = 0.0
    for k in range(m):
        idx = order[k]
        s = starts[idx]
        if s > frontier:
            uncovered += s - frontier
        e = ends[idx]
        if e > frontier:
            frontier = e
    if window > frontier:
        uncovered += window - frontier
    return uncovered


def _uncovered_measure_np(centers, halfwidths, window):
    centers = np.asarray(centers, dtype=np.float64)
    halfwidths = np.asarray(halfwidths, dtype=np.float64)
    pos = halfwidths > 0.0
    if np.any(halfwidths >= math.pi):
        return 0.0
    c, hw = centers[pos], halfwidths[pos]
    lo = np.mod(c - hw, TWO_PI)
    hi = lo + 2.0 * hw
    wrapped = hi > TWO_PI
    starts = np.concatenate([lo, np.zeros(int(wrapped.sum()))])
    ends = np.concatenate([np.minimum(hi, TWO_PI), hi[wrapped] - TWO_PI])
    keep = starts < window
    starts, ends = starts[keep], np.minimum(ends[keep], window)
    if starts.size == 0:
        return float(window)
    order = np.argsort(starts, kind="stable")
    starts, ends = starts[order], ends[order]
    frontier = np.maximum.accumulate(ends)
    gaps = np.maximum(starts[1:] - frontier[:-1], 0.0)
    lead = starts[0]
    tail = max(window - frontier[-1], 0.0)
    return float(lead + gaps.sum() + tail)


# ---------------------------------------------------------------------------
# first hit of a ray against balls / lines
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _ball_first_hit_nb(t, dphi, rad, r_max):
    best = r_max
    for i in range(t.shape[0]):
        ti = t[i]
        if ti <= rad[i]:
            return 0.0
        sh = math.sinh(ti)
        b = sh * math.cos(dphi[i])
        perp = sh * math.sin(dphi[i])
        m = math.sqrt(1.0 + perp * perp)  # stable: a*a - b*b = 1 + perp^2
        ch = math.cosh(rad[i])
        if ch < m:
            continue
        x = ch / m
        s_in = math.asinh(b / m) - math.log(x + math.sqrt(x * x - 1.0))
        if s_in < 0.0:
            continue  # t > rad, so a negative entry means the ball is behind
        if s_in < best:
            best = s_in
    return best


def _ball_first_hit_np(t, dphi, rad, r_max):
    t = np.asarray(t, dtype=np.float64)
    dphi = np.asarray(dphi, dtype=np.float64)
    rad = np.asarray(rad, dtype=np.float64)
    if np.any(t <= rad):
        return 0.0
    sh = np.sinh(t)
    b = sh * np.cos(dphi)
    m = np.sqrt(1.0 + (sh * np.sin(dphi)) ** 2)
    ch = np.cosh(rad)
    hit = ch >= m
    if not np.any(hit):
        return float(r_max)
    x = ch[hit] / m[hit]
    s_in = np.arcsinh(b[hit] / m[hit]) - np.log(x + np.sqrt(x * x - 1.0))
    s_in = s_in[s_in >= 0.0]
    if s_in.size == 0:
        return float(r_max)
    return float(min(s_in.min(), r_max))


@njit(cache=True, nogil=True)
def _line_first_cross_nb(p, dphi, r_max):
    best = r_max
    for i in range(p.shape[0]):
        c = math.cos(dphi[i])
        if c <= 0.0:
            continue
        x = math.tanh(p[i]) / c
        if x >= 1.0:
            continue
        s = math.atanh(x)
        if s < best:
            best = s
    return best


def _line_first_cross_np(p, dphi, r_max):
    p = np.asarray(p, dtype=np.float64)
    dphi = np.asarray(dphi, dtype=np.float64)
    c = np.cos(dphi)
    ok = c > 0.0
    x = np.tanh(p[ok]) / c[ok]
    x = x[x < 1.0]
    if x.size == 0:
        return float(r_max)
    return float(min(np.arctanh(x).min(), r_max))


# ---------------------------------------------------------------------------
# covered-set visibility: first gap in the union of chord intervals
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _covered_first_gap_nb(t, dphi, rad, r_max):
    n = t.shape[0]
    s_in = np.empty(n)
    s_out = np.empty(n)
    m = 0
    for i in range(n):
        ti = t[i]
        sh = math.sinh(ti)
        b = sh * math.cos(dphi[i])
        perp = sh * math.sin(dphi[i])
        mm = math.sqrt(1.0 + perp * perp)
        ch = math.cosh(rad[i])
        if ch < mm:
            continue
        x = ch / mm
        half = math.log(x + math.sqrt(x * x - 1.0))
        psi = math.asinh(b / mm)
        hi = psi + half
        if hi < 0.0:
            continue
        lo = psi - half
        s_in[m] = lo if lo > 0.0 else 0.0
        s_out[m] = hi
        m += 1
    if m == 0:
        return 0.0
    order = np.argsort(s_in[:m])
    frontier = 0.0
    for k in range(m):
        idx = order[k]
        if s_in[idx] > frontier:
            break
        if s_out[idx] > frontier:
            frontier = s_out[idx]
        if frontier >= r_max:
            return r_max
    return frontier if frontier < r_max else r_max


def _covered_first_gap_np(t, dphi, rad, r_max):
    t = np.asarray(t, dtype=np.float64)
    dphi = np.asarray(dphi, dtype=np.float64)
    rad = np.asarray(rad, dtype=np.float64)
    sh = np.sinh(t)
    b = sh * np.cos(dphi)
    m = np.sqrt(1.0 + (sh * np.sin(dphi)) ** 2)
    ch = np.cosh(rad)
    hit = ch >= m
    if not np.any(hit):
        return 0.0
    x = ch[hit] / m[hit]
    half = np.log(x + np.sqrt(x * x - 1.0))
    psi = np.arcsinh(b[hit] / m[hit])
    lo = np.maximum(psi - half, 0.0)
    hi = psi + half
    fwd = hi >= 0.0
    lo, hi = lo[fwd], hi[fwd]
    if lo.size == 0:
        return 0.0
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    frontier = 0.0
    for s, e in zip(lo, hi):
        if s > frontier:
            break
        if e > frontier:
            frontier = e
        if frontier >= r_max:
            return float(r_max)
    return float(min(frontier, r_max))


# ---------------------------------------------------------------------------
# public bindings
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    ball_halfwidths = _ball_halfwidths_nb
    line_halfwidths = _line_halfwidths_nb
    uncovered_measure = _uncovered_measure_nb
    ball_first_hit = _ball_first_hit_nb
    line_first_cross = _line_first_cross_nb
    covered_first_gap = _covered_first_gap_nb
else:
    ball_halfwidths = _ball_halfwidths_np
    line_halfwidths = _line_halfwidths_np
    uncovered_measure = _uncovered_measure_np
    ball_first_hit = _ball_first_hit_np
    line_first_cross = _line_first_cross_np
    covered_first_gap = _covered_first_gap_np

NUMPY_IMPL = {
    "ball_halfwidths": _ball_halfwidths_np,
    "line_halfwidths": _line_halfwidths_np,
    "uncovered_measure": _uncovered_measure_np,
    "ball_first_hit": _ball_first_hit_np,
    "line_first_cross": _line_first_cross_np,
    "covered_first_gap": _covered_first_gap_np,
}

NUMBA_IMPL = (
    {
        "ball_halfwidths": _ball_halfwidths_nb,
        "line_halfwidths": _line_halfwidths_nb,
        "uncovered_measure": _uncovered_measure_nb,
        "ball_first_hit": _ball_first_hit_nb,
        "line_first_cross": _line_first_cross_nb,
        "covered_first_gap": _covered_first_gap_nb,
    }
    if HAVE_NUMBA
    else None
)
