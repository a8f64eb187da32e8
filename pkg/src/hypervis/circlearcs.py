"""Unions of closed angular arcs on the circle [0, 2*pi).

Arcs are stored unwrapped: a sorted list of disjoint, non-touching closed
intervals [start, end] with 0 <= start < end <= 2*pi.  An arc crossing the
0/2*pi seam is split into two stored pieces; component queries re-join them.
Endpoints are compared exactly in binary64 -- under Poisson input exact ties
have probability zero, and exact comparison keeps coverage decisions
deterministic.
"""

from __future__ import annotations

import bisect
import math
from typing import List, Sequence, Tuple

TWO_PI = 2.0 * math.pi


class ArcSet:
    """Immutable-by-convention union of closed arcs.

    The mutating helpers are private; public operations return new sets, so
    instances can be shared freely.
    """

    __slots__ = ("_starts", "_ends")

    def __init__(self):
        self._starts: List[float] = []
        self._ends: List[float] = []

    @classmethod
    def empty(cls) -> "ArcSet":
        return cls()

    @classmethod
    def full_circle(cls) -> "ArcSet":
        s = cls()
        s._starts, s._ends = [0.0], [TWO_PI]
        return s

    def copy(self) -> "ArcSet":
        s = ArcSet()
        s._starts = self._starts.copy()
        s._ends = self._ends.copy()
        return s

    @property
    def arcs(self) -> List[Tuple[float, float]]:
        """Stored (start, end) pieces, sorted, no wrapping."""
        return list(zip(self._starts, self._ends))

    @property
    def measure(self) -> float:
        return math.fsum(e - s for s, e in zip(self._starts, self._ends))

    def is_full(self) -> bool:
        """True iff the set covers the whole circle under exact endpoint
        chaining (touching arcs have been merged on insertion)."""
        return (
            len(self._starts) == 1
            and self._starts[0] == 0.0
            and self._ends[0] == TWO_PI
        )

    def _add_interval(self, lo: float, hi: float) -> None:
        """Union with the non-wrapping closed interval [lo, hi] in [0, 2pi]."""
        if hi <= lo:
            return
        starts, ends = self._starts, self._ends
        # arcs with end >= lo and start <= hi overlap or touch [lo, hi]
        i = bisect.bisect_left(ends, lo)
        j = bisect.bisect_right(starts, hi)
        if i < j:
            lo = min(lo, starts[i])
            hi = max(hi, ends[j - 1])
        starts[i:j] = [lo]
        ends[i:j] = [hi]

    def insert_arc(self, center: float, halfwidth: float) -> "ArcSet":
        """Union with the closed arc [center - halfwidth, center + halfwidth]
        (mod 2*pi).  halfwidth >= pi yields the full circle."""
        if halfwidth < 0.0:
            raise ValueError("halfwidth must be >= 0")
        out = self.copy()
        out._insert_arc_inplace(center, halfwidth)
        return out

    def _insert_arc_inplace(self, center: float, halfwidth: float) -> None:
        if halfwidth == 0.0:
            return
        if halfwidth >= math.pi:
            self._starts, self._ends = [0.0], [TWO_PI]
            return
        lo = center - halfwidth
        lo = math.fmod(lo, TWO_PI)
        if lo < 0.0:
            lo += TWO_PI
        hi = lo + 2.0 * halfwidth
        if hi <= TWO_PI:
            self._add_interval(lo, hi)
        else:
            self._add_interval(lo, TWO_PI)
            self._add_interval(0.0, hi - TWO_PI)

    def uncovered_components(
        self, window: float = TWO_PI
    ) -> List[Tuple[float, float]]:
        """Closure of [0, window) minus the set, as (start, end) pairs in
        increasing start order.  For the full-circle window a component may
        wrap; it is reported with end > 2*pi.
        """
        if not 0.0 < window <= TWO_PI:
            raise ValueError("window must be in (0, 2*pi]")
        starts, ends = self._starts, self._ends
        if not starts:
            return [(0.0, window)]
        full = window == TWO_PI
        gaps: List[Tuple[float, float]] = []
        cursor = 0.0
        for s, e in zip(starts, ends):
            if s >= window:
                break
            if s > cursor:
                gaps.append((cursor, min(s, window)))
            cursor = max(cursor, e)
            if cursor >= window:
                break
        if cursor < window:
            gaps.append((cursor, window))
        if full and gaps:
            # re-join the seam: a gap ending at 2*pi continues into a gap
            # starting at 0 (arcs touching the seam were not merged across it)
            first, last = gaps[0], gaps[-1]
            if len(gaps) >= 2 and first[0] == 0.0 and last[1] == TWO_PI:
                gaps = gaps[1:-1] + [(last[0], TWO_PI + first[1])]
        return gaps

    def uncovered_measure(self, window: float = TWO_PI) -> float:
        """Lebesgue measure of [0, window) minus the set."""
        return math.fsum(e - s for s, e in self.uncovered_components(window))

    def is_covered(self, window: float = TWO_PI) -> bool:
        """True iff the window is fully covered, by exact endpoint
        comparison (no tolerance)."""
        return not self.uncovered_components(window)


def arcset_from_arcs(arcs: Sequence[Tuple[float, float]]) -> ArcSet:
    """Build an ArcSet from (center, halfwidth) pairs."""
    out = ArcSet()
    for center, halfwidth in arcs:
        out._insert_arc_inplace(center, halfwidth)
    return out
