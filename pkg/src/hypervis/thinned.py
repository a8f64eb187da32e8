"""Thinned radial sampling of the visible-set evolution.

Direct window sampling needs ~exp(r) obstacles per scene, which is hopeless
for deep probes.  This engine marches outward in radial strata and samples,
in each stratum, only the centers whose shadow could ever intersect the
current visible set: a ball's shadow at every probe is contained in the arc
of half-width w_max around its direction (w_max is the perpendicular-case
half-width, the largest the shadow ever gets), and the visible set only
shrinks, so a center outside the w_max-dilated visible set can never matter.
New centers are independent of everything sampled so far, so restricting
the Poisson sampling to the dilated set is exact, not an approximation.

Certification: when the march has extended the sampled frontier to q + C
using the visible set at probe q' < q for the dilation, every probe in
(q', q] is exact.  Strata advance one internal grid step at a time, so each
recorded probe is certified, and the sampled center list supports exact
re-evaluation at any probe up to the last certified one (used by the
total-visibility bisection).

Expected sampled centers grow like alpha * r + lam * y_r * cosh(r); the
second term stays bounded for alpha >= 1 and explodes only deep in the
subcritical regime, where seeing far is the typical event anyway.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import gmpy2
import numpy as np

from .circlearcs import ArcSet
from .sampler import MemoryBudgetError, RadiusLaw

TWO_PI = 2.0 * math.pi


def shadow_halfwidth(t: float, rad: float, r: float) -> float:
    """Closed-form blocked half-width of one ball at probe length r.

    Same case split as hypgeo.dist_point_to_ray; cross-checked against the
    bisection route in visibility.shadow_arc by the tests.
    """
    if t <= rad:
        return math.pi
    if r <= 0.0:
        return 0.0
    shrad = math.sinh(rad)
    d = t - r
    # perpendicular case (foot inside the segment); the tanh form saturates
    # for large arguments, this product form does not
    csh = math.cosh(r) * shrad
    if math.sinh(d) * math.sinh(t + r) < csh * csh:
        return math.asin(shrad / math.sinh(t))
    # endpoint case via 1 - cos(w), stable when w is tiny
    u = (math.cosh(rad) - math.cosh(d)) / (math.sinh(t) * math.sinh(r))
    if u <= 0.0:
        return 0.0
    if u >= 2.0:
        return math.pi
    return 2.0 * math.asin(math.sqrt(0.5 * u))


def max_shadow_halfwidth(t: float, rad: float) -> float:
    """Largest half-width the ball's shadow ever reaches (probe -> infinity)."""
    if t <= rad:
        return math.pi
    return math.asin(math.sinh(rad) / math.sinh(t))


@dataclass
class _Ball:
    t: float
    phi: float
    rad: float
    frozen: bool = False  # shadow has reached its limiting half-width


@dataclass
class EvolutionResult:
    r_grid: np.ndarray
    nonempty: np.ndarray  # visible set nonempty at each grid probe
    uncovered: np.ndarray  # its angular measure
    n_sampled: int
    total_visibility: Optional[float] = None  # set when requested
    # sampled centers (kept on request); every ball that can block any
    # direction before the last certified probe is present, so directional
    # visibility computed from them is exact
    ball_t: Optional[np.ndarray] = None
    ball_phi: Optional[np.ndarray] = None
    ball_rad: Optional[np.ndarray] = None


# Binary64 arc endpoints resolve absolute angles only to ~1e-16, so the
# march switches representation long before that matters.  While the visible
# set is macroscopic it lives in a float ArcSet; once its total measure drops
# below DEEP_SWITCH the surviving gaps are handed to a multiprecision
# tracker (_DeepState) whose working precision is chosen from the deepest
# probe, so gap widths of order exp(-r) stay exactly representable at any
# requested depth.
#
# RESOLUTION is a safety floor for the float phase only: a component
# narrower than it is treated as extinct.  Such a component can only arise
# there when a shadow endpoint lands within 1e-12 of a gap endpoint while
# other macroscopic gaps keep the total measure above DEEP_SWITCH -- an
# event of probability ~1e-12 per shadow insertion.  Without the floor a
# sub-ulp sliver can pin (no later ball is wide enough to close it) and its
# Poisson sampling mean, proportional to cosh(t) * width, explodes.
RESOLUTION = 1e-12
DEEP_SWITCH = 1e-8


def _deep_bits(r_last: float) -> int:
    """Working precision for the deep phase: gap widths scale like exp(-r),
    i.e. ~1.443*r bits below the O(1) angular positions; 1.5*r plus a wide
    margin keeps every live gap far above the representation floor."""
    return max(128, int(1.5 * r_last) + 96)


def _deep_subtract(starts: list, ends: list, lo, hi) -> None:
    """Remove the closed interval [lo, hi] from the sorted disjoint gap
    lists, splitting boundary gaps.  Zero-width remainders are dropped."""
    if hi <= lo:
        return
    i = bisect.bisect_right(ends, lo)
    j = bisect.bisect_left(starts, hi)
    if i >= j:
        return
    new_s, new_e = [], []
    if starts[i] < lo:
        new_s.append(starts[i])
        new_e.append(lo)
    if ends[j - 1] > hi:
        new_s.append(hi)
        new_e.append(ends[j - 1])
    starts[i:j] = new_s
    ends[i:j] = new_e


def _deep_subtract_shadow(starts: list, ends: list, phi, hw: float) -> None:
    """Subtract a ball shadow; gap coordinates are unwrapped (a seam gap
    runs past 2*pi), so the shadow is also applied at the +-2*pi lifts when
    those can reach a gap."""
    h = gmpy2.mpfr(hw)
    lo, hi = phi - h, phi + h
    _deep_subtract(starts, ends, lo, hi)
    if not starts:
        return
    if hi - TWO_PI >= starts[0]:
        _deep_subtract(starts, ends, lo - TWO_PI, hi - TWO_PI)
        if not starts:
            return
    if lo + TWO_PI <= ends[-1]:
        _deep_subtract(starts, ends, lo + TWO_PI, hi + TWO_PI)


class _DeepState:
    """Surviving gaps and the not-yet-frozen balls, in multiprecision
    angles.  snap_* hold the gaps as of the last certified probe, used by
    the total-visibility bisection."""

    __slots__ = ("starts", "ends", "balls", "snap_starts", "snap_ends")

    def __init__(self, components, balls):
        self.starts = [gmpy2.mpfr(a) for a, _ in components]
        self.ends = [gmpy2.mpfr(b) for _, b in components]
        self.balls = balls
        self.snap_starts = list(self.starts)
        self.snap_ends = list(self.ends)


def _deep_dilated(starts: list, ends: list, w: float):
    """Merged union of the gaps dilated by w, plus float piece lengths."""
    ds: list = []
    de: list = []
    for a, b in zip(starts, ends):
        lo, hi = a - w, b + w
        if ds and lo <= de[-1]:
            if hi > de[-1]:
                de[-1] = hi
        else:
            ds.append(lo)
            de.append(hi)
    lengths = [float(b - a) for a, b in zip(ds, de)]
    return ds, de, lengths


def _deep_covered_at(snap_starts, snap_ends, balls, r: float) -> bool:
    starts, ends = list(snap_starts), list(snap_ends)
    for b in balls:
        hw = shadow_halfwidth(b.t, b.rad, r)
        if hw > 0.0:
            _deep_subtract_shadow(starts, ends, b.phi, hw)
            if not starts:
                return True
    return not starts


def _live_components(blocked: ArcSet, window: float, resolution: float):
    return [
        (a, b)
        for a, b in blocked.uncovered_components(window)
        if b - a >= resolution
    ]


def _dilated_region(components, w_max: float) -> ArcSet:
    region = ArcSet()
    for a, b in components:
        center = 0.5 * (a + b)
        region._insert_arc_inplace(center, 0.5 * (b - a) + w_max)
    return region


def _sample_angles(region: ArcSet, u: np.ndarray) -> np.ndarray:
    """Map uniforms on [0, measure) to angles uniform over the region."""
    starts = np.array(region._starts)
    lengths = np.array(region._ends) - starts
    cum = np.cumsum(lengths)
    pos = u * cum[-1]
    idx = np.searchsorted(cum, pos, side="right")
    idx = np.minimum(idx, len(starts) - 1)
    prev = np.concatenate([[0.0], cum[:-1]])
    return starts[idx] + (pos - prev[idx])


def visible_evolution(
    lam: float,
    law: RadiusLaw,
    r_grid: Sequence[float],
    stream: np.random.Generator,
    window: float = TWO_PI,
    step: float = 0.5,
    want_total_visibility: bool = False,
    vis_tol: float = 1e-6,
    ball_budget: int = 5_000_000,
    keep_balls: bool = False,
) -> EvolutionResult:
    """Evolve the visible set of one Boolean scene over an increasing probe
    grid, with exact thinned sampling.

    window restricts the tracked directions to [0, window); obstacles are
    still drawn wherever they can shade into the window.  With
    want_total_visibility, the march continues to r_grid[-1] and the exit
    probe is located by bisection (exact to vis_tol) using the sampled
    centers.
    """
    r_grid = np.asarray(r_grid, dtype=np.float64)
    if len(r_grid) == 0 or np.any(np.diff(r_grid) <= 0.0) or r_grid[0] <= 0.0:
        raise ValueError("r_grid must be positive and strictly increasing")
    c_bound = law.bound
    r_max = float(r_grid[-1])

    # internal march grid: multiples of step joined with the user grid
    internal = set(float(g) for g in r_grid)
    internal.update(np.arange(step, r_max, step).tolist())
    probes = sorted(internal)

    blocked = ArcSet()
    balls: List[_Ball] = []
    nonempty = np.zeros(len(r_grid), dtype=bool)
    uncovered = np.zeros(len(r_grid))
    grid_idx = 0
    frontier = 0.0
    q_prev = 0.0
    total_vis: Optional[float] = None
    covered_at: Optional[Tuple[float, float]] = None  # bracket once covered
    deep: Optional[_DeepState] = None
    deep_bracket = None  # (snap_starts, snap_ends, balls) at coverage
    n_sampled = 0
    kept: List[Tuple[float, float, float]] = []  # (t, phi, rad) if requested

    bits = _deep_bits(r_max)
    with gmpy2.context(precision=bits):
        gap_floor = gmpy2.mpfr(2.0) ** (16 - bits)
        for q in probes:
            # extend the sampled frontier to q + C, dilating the visible set
            # at probe q_prev (lagging by one step keeps every probe in
            # (q_prev, q] exactly re-evaluable from the sampled centers)
            hi = q + c_bound
            if deep is None:
                live = _live_components(blocked, window, RESOLUTION)
                region = None
                if live:
                    w_max = max_shadow_halfwidth(max(frontier, 1e-12), c_bound)
                    region = _dilated_region(live, w_max)
                measure = region.measure if region is not None else 0.0
            else:
                w_max = max_shadow_halfwidth(frontier, c_bound)
                d_s, d_e, d_len = _deep_dilated(deep.starts, deep.ends, w_max)
                measure = math.fsum(d_len)

            if measure > 0.0:
                mean = lam * (math.cosh(hi) - math.cosh(frontier)) * measure
                n = int(stream.poisson(mean))
                if n_sampled + n > ball_budget:
                    raise MemoryBudgetError(
                        f"thinned sampling exceeded ball budget {ball_budget}"
                    )
                if n > 0:
                    n_sampled += n
                    c_lo, c_hi = math.cosh(frontier), math.cosh(hi)
                    ts = np.arccosh(c_lo + stream.random(n) * (c_hi - c_lo))
                    if deep is None:
                        phis = _sample_angles(region, stream.random(n))
                        rads = law.sample(stream, n)
                        for i in range(n):
                            b = _Ball(float(ts[i]), float(phis[i]), float(rads[i]))
                            balls.append(b)
                            if keep_balls:
                                kept.append((b.t, b.phi % TWO_PI, b.rad))
                            hw = shadow_halfwidth(b.t, b.rad, q_prev)
                            if hw > 0.0:
                                blocked._insert_arc_inplace(b.phi, hw)
                    else:
                        # two uniforms per center: piece choice needs only the
                        # float piece lengths, the position within the piece
                        # needs full relative precision
                        cum = np.cumsum(d_len)
                        idxs = np.searchsorted(
                            cum, stream.random(n) * cum[-1], side="right"
                        )
                        idxs = np.minimum(idxs, len(d_len) - 1)
                        fracs = stream.random(n)
                        rads = law.sample(stream, n)
                        for i in range(n):
                            k = int(idxs[i])
                            phi = d_s[k] + gmpy2.mpfr(fracs[i]) * (d_e[k] - d_s[k])
                            b = _Ball(float(ts[i]), phi, float(rads[i]))
                            deep.balls.append(b)
                            if keep_balls:
                                kept.append((b.t, float(phi) % TWO_PI, b.rad))
                            hw = shadow_halfwidth(b.t, b.rad, q_prev)
                            if hw > 0.0:
                                _deep_subtract_shadow(
                                    deep.starts, deep.ends, phi, hw
                                )
            frontier = hi

            if deep is not None:
                # certify the previous probe for the bisection, then drop
                # balls whose shadow already reached its limit
                deep.snap_starts = list(deep.starts)
                deep.snap_ends = list(deep.ends)
                deep.balls = [b for b in deep.balls if not b.frozen]

            # advance the probe to q: grow the shadows that are still growing
            active = balls if deep is None else deep.balls
            for b in active:
                if b.frozen:
                    continue
                hw = shadow_halfwidth(b.t, b.rad, q)
                if hw > 0.0:
                    if deep is None:
                        blocked._insert_arc_inplace(b.phi, hw)
                    else:
                        _deep_subtract_shadow(deep.starts, deep.ends, b.phi, hw)
                # frozen once the perpendicular case applies: the shadow has
                # reached its limiting half-width and never grows again
                csh = math.cosh(q) * math.sinh(b.rad)
                if b.t <= b.rad or math.sinh(b.t - q) * math.sinh(b.t + q) < csh * csh:
                    b.frozen = True

            if deep is None:
                live = _live_components(blocked, window, RESOLUTION)
                gap_measure = math.fsum(b - a for a, b in live)
                now_covered = not live
                if not now_covered and gap_measure < DEEP_SWITCH:
                    deep = _DeepState(live, [b for b in balls if not b.frozen])
            else:
                # drop gaps at the representation floor (~16 bits above the
                # working-precision ulp; live widths sit far above it)
                keep = [
                    k
                    for k in range(len(deep.starts))
                    if deep.ends[k] - deep.starts[k] >= gap_floor
                ]
                if len(keep) != len(deep.starts):
                    deep.starts = [deep.starts[k] for k in keep]
                    deep.ends = [deep.ends[k] for k in keep]
                gap_measure = math.fsum(
                    float(b - a) for a, b in zip(deep.starts, deep.ends)
                )
                now_covered = not deep.starts

            if now_covered and covered_at is None:
                covered_at = (q_prev, q)
                if deep is not None:
                    deep_bracket = (deep.snap_starts, deep.snap_ends, deep.balls)

            while grid_idx < len(r_grid) and r_grid[grid_idx] <= q:
                if r_grid[grid_idx] == q and not now_covered:
                    nonempty[grid_idx] = True
                    uncovered[grid_idx] = gap_measure
                grid_idx += 1

            if now_covered:
                break
            q_prev = q

        if want_total_visibility:
            if covered_at is None:
                total_vis = r_max
            else:
                lo, hi_r = covered_at

                if deep_bracket is None:
                    covered = lambda m: _covered_at_probe(balls, m, window)
                else:
                    s_snap, e_snap, d_balls = deep_bracket
                    covered = lambda m: _deep_covered_at(s_snap, e_snap, d_balls, m)

                if lo == 0.0 and covered(0.0):
                    total_vis = 0.0
                else:
                    while hi_r - lo > vis_tol:
                        mid = 0.5 * (lo + hi_r)
                        if covered(mid):
                            hi_r = mid
                        else:
                            lo = mid
                    total_vis = 0.5 * (lo + hi_r)

    out = EvolutionResult(
        r_grid=r_grid,
        nonempty=nonempty,
        uncovered=uncovered,
        n_sampled=n_sampled,
        total_visibility=total_vis,
    )
    if keep_balls:
        out.ball_t = np.array([k[0] for k in kept])
        out.ball_phi = np.array([k[1] for k in kept])
        out.ball_rad = np.array([k[2] for k in kept])
    return out


def _covered_at_probe(balls: List[_Ball], r: float, window: float) -> bool:
    s = ArcSet()
    for b in balls:
        hw = shadow_halfwidth(b.t, b.rad, r)
        if hw > 0.0:
            s._insert_arc_inplace(b.phi, hw)
            if s.is_covered(window):
                return True
    return not _live_components(s, window, RESOLUTION)
