"""Per-scene exact visibility: visible direction sets, directional and total
visibility, star area, and the covered-set analogues.

This module is the readable reference route built on hypgeo and circlearcs;
the Monte Carlo drivers in experiments use the compiled kernels and are
cross-checked against this module in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from . import hypgeo
from .circlearcs import ArcSet
from .hypgeo import angular_offset, dist_point_to_ray
from .sampler import BooleanScene, LineScene

TWO_PI = 2.0 * math.pi

SHADOW_ANGLE_TOL = 1e-12


class WindowTooSmallError(ValueError):
    """Scene window cannot certify exactness at the requested probe length."""


@dataclass
class VisibilityResult:
    r: float
    blocked: ArcSet  # union of shadow arcs; the visible set is its complement
    y: float  # angular measure of the visible set
    nonempty: bool

    @property
    def visible_components(self) -> List[Tuple[float, float]]:
        """Visible arcs as (start, end) pairs, increasing start order; a
        wrapping component is reported with end > 2*pi."""
        return self.blocked.uncovered_components()


def _boolean_bound(scene: BooleanScene) -> float:
    if scene.config is not None:
        return scene.config.radius_law.bound
    return float(scene.radius.max()) if len(scene) else 0.0


def _check_window(scene, r: float) -> None:
    if isinstance(scene, BooleanScene):
        needed = r + _boolean_bound(scene)
        if scene.window_radius < needed - 1e-12:
            raise WindowTooSmallError(
                f"window {scene.window_radius} < r + C = {needed}; "
                "visibility at this probe would be truncation-biased"
            )
    else:
        if scene.p_max < r - 1e-12:
            raise WindowTooSmallError(f"line cutoff {scene.p_max} < probe {r}")


def shadow_arc(t: float, phi: float, ball_radius: float, r: float) -> Tuple[float, float]:
    """(center, halfwidth) of the direction arc blocked by one ball at probe
    length r: direction phi + delta is blocked iff |delta| <= halfwidth.

    Solved by bisection on delta (dist_point_to_ray is monotone in delta),
    to angular tolerance 1e-12; robust across the three distance cases.
    """
    if r <= 0.0:
        raise ValueError("probe length must be > 0")
    if t <= ball_radius:
        return (phi, math.pi)
    if dist_point_to_ray(t, 0.0, r) > ball_radius:
        return (phi, 0.0)
    lo, hi = 0.0, 0.5 * math.pi  # at pi/2 the distance is t > ball_radius
    while hi - lo > SHADOW_ANGLE_TOL:
        mid = 0.5 * (lo + hi)
        if dist_point_to_ray(t, mid, r) <= ball_radius:
            lo = mid
        else:
            hi = mid
    return (phi, 0.5 * (lo + hi))


def blocked_arcset(scene: Union[BooleanScene, LineScene], r: float) -> ArcSet:
    """Union of all shadow arcs of the scene at probe length r."""
    out = ArcSet()
    if isinstance(scene, BooleanScene):
        for t, phi, rad in zip(scene.t, scene.phi, scene.radius):
            c, w = shadow_arc(float(t), float(phi), float(rad), r)
            out._insert_arc_inplace(c, w)
    else:
        for p, phi in zip(scene.p, scene.phi):
            w = hypgeo.line_hit_halfwidth(float(p), r)
            out._insert_arc_inplace(float(phi), w)
    return out


def visible_set(scene: Union[BooleanScene, LineScene], r: float) -> VisibilityResult:
    """Exact visible direction set at probe length r."""
    _check_window(scene, r)
    blocked = blocked_arcset(scene, r)
    y = blocked.uncovered_measure()
    nonempty = not blocked.is_covered()
    return VisibilityResult(r=r, blocked=blocked, y=y, nonempty=nonempty)


def direction_visibility(
    scene: Union[BooleanScene, LineScene], theta: float, r_max: float
) -> float:
    """V(theta) clipped at r_max: length of the unobstructed initial segment
    of the ray in direction theta."""
    _check_window(scene, r_max)
    best = r_max
    if isinstance(scene, BooleanScene):
        for t, phi, rad in zip(scene.t, scene.phi, scene.radius):
            hit = hypgeo.ball_hit_interval(
                float(t), angular_offset(float(phi), theta), float(rad)
            )
            if hit is not None and hit[0] < best:
                best = hit[0]
                if best == 0.0:
                    return 0.0
    else:
        for p, phi in zip(scene.p, scene.phi):
            s = hypgeo.line_crossing_param(float(p), angular_offset(float(phi), theta))
            if s < best:
                best = s
    return best


def total_visibility(
    scene: Union[BooleanScene, LineScene], r_max: float, tol: float = 1e-9
) -> float:
    """min(total visibility, r_max), by bisection on the monotone predicate
    "some direction is visible at probe r" (shadows grow with r)."""
    _check_window(scene, r_max)
    if not blocked_arcset(scene, r_max).is_covered():
        return r_max
    # is the origin itself covered?
    if isinstance(scene, BooleanScene) and len(scene):
        if np.any(scene.t <= scene.radius):
            return 0.0
    lo, hi = 0.0, r_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if blocked_arcset(scene, mid).is_covered():
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def star_area(
    scene: Union[BooleanScene, LineScene], r_max: float, n_grid: int = 4096
) -> Tuple[float, bool]:
    """Area of the visibility star truncated at r_max, by quadrature of the
    hyperbolic sector formula area = integral (cosh(V(theta)) - 1) dtheta
    over a uniform direction grid.

    Returns (area, truncated): truncated is set when some direction reached
    r_max, i.e. the star may extend beyond the truncation radius.
    """
    _check_window(scene, r_max)
    step = TWO_PI / n_grid
    total = 0.0
    truncated = False
    for k in range(n_grid):
        v = direction_visibility(scene, k * step, r_max)
        if v >= r_max:
            truncated = True
        total += math.cosh(v) - 1.0
    return total * step, truncated


def covered_direction_visibility(
    scene: BooleanScene, theta: float, r_max: float
) -> float:
    """Covered-set visibility V'(theta): length of the initial ray segment
    contained in the union of balls (0 when the origin is uncovered)."""
    _check_window(scene, r_max)
    intervals: List[Tuple[float, float]] = []
    for t, phi, rad in zip(scene.t, scene.phi, scene.radius):
        hit = hypgeo.ball_hit_interval(
            float(t), angular_offset(float(phi), theta), float(rad)
        )
        if hit is not None:
            intervals.append(hit)
    intervals.sort()
    frontier = 0.0
    for s_in, s_out in intervals:
        if s_in > frontier:
            break
        frontier = max(frontier, s_out)
        if frontier >= r_max:
            return r_max
    return min(frontier, r_max)


def covered_total_visibility_grid(
    scene: BooleanScene, r_max: float, n_grid: int = 4096
) -> float:
    """Grid maximum of V' over directions; a lower estimator of the covered
    total visibility (the grid max never exceeds the true supremum)."""
    _check_window(scene, r_max)
    step = TWO_PI / n_grid
    return max(
        covered_direction_visibility(scene, k * step, r_max) for k in range(n_grid)
    )
