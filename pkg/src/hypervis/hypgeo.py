"""Hyperbolic-plane primitives in the Poincare disc.

Everything downstream reduces to rays from the origin, so the workhorse
functions take ray-relative polar arguments (t, delta): the obstacle sits at
hyperbolic distance t from the origin, at angular offset delta from the ray
direction.  Rotations are exact in polar form, which keeps round-off out of
the hot loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

TWO_PI = 2.0 * math.pi


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def acosh_clamped(x: float) -> float:
    """arcosh with the argument clamped up to 1 (absorbs ~1e-14 round-off)."""
    if x < 1.0:
        if x < 1.0 - 1e-12:
            raise ValueError(f"acosh argument {x} out of domain")
        return 0.0
    return math.acosh(x)


def wrap_angle(phi: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    phi = math.fmod(phi, TWO_PI)
    return phi + TWO_PI if phi < 0.0 else phi


def angular_offset(phi: float, theta: float) -> float:
    """Absolute angular difference between two directions, in [0, pi]."""
    d = abs(wrap_angle(phi) - wrap_angle(theta))
    return TWO_PI - d if d > math.pi else d


@dataclass(frozen=True)
class HPoint:
    """A point of the hyperbolic plane, stored in disc coordinates (u, v).

    Invariant: u*u + v*v < 1 strictly.  The polar form (t, phi) with
    t = 2*artanh(|z|) is available through properties.
    """

    u: float
    v: float

    def __post_init__(self):
        if self.u * self.u + self.v * self.v >= 1.0:
            raise ValueError(f"point ({self.u}, {self.v}) not inside the unit disc")

    @classmethod
    def origin(cls) -> "HPoint":
        return cls(0.0, 0.0)

    @classmethod
    def from_polar(cls, t: float, phi: float) -> "HPoint":
        """Point at hyperbolic distance t from the origin, direction phi."""
        if t < 0.0:
            raise ValueError("radial distance must be >= 0")
        rho = math.tanh(0.5 * t)
        return cls(rho * math.cos(phi), rho * math.sin(phi))

    @property
    def z(self) -> complex:
        return complex(self.u, self.v)

    @property
    def t(self) -> float:
        """Hyperbolic distance from the origin."""
        return 2.0 * math.atanh(math.hypot(self.u, self.v))

    @property
    def phi(self) -> float:
        """Direction seen from the origin, in [0, 2*pi)."""
        return wrap_angle(math.atan2(self.v, self.u))


@dataclass(frozen=True)
class Ray:
    """Geodesic segment from the origin: direction theta, length r.

    length=None means the full geodesic ray.
    """

    theta: float
    length: Optional[float] = None

    def __post_init__(self):
        if self.length is not None and self.length < 0.0:
            raise ValueError("ray length must be >= 0")


@dataclass(frozen=True)
class BallObstacle:
    """Closed hyperbolic ball: center and hyperbolic radius."""

    center: HPoint
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("ball radius must be > 0")


@dataclass(frozen=True)
class GeodesicObstacle:
    """Full geodesic, parameterized by its closest point to the origin.

    footpoint_dist is the hyperbolic distance of that point from the origin
    (> 0), footpoint_dir its direction.
    """

    footpoint_dist: float
    footpoint_dir: float

    def __post_init__(self):
        if self.footpoint_dist <= 0.0:
            raise ValueError("footpoint distance must be > 0")


def dist(a: HPoint, b: HPoint) -> float:
    """Hyperbolic distance between two disc points."""
    za, zb = a.z, b.z
    # take moduli before dividing so the result is bit-symmetric in (a, b)
    num = abs(za - zb)
    den = abs(1.0 - za.conjugate() * zb)
    return 2.0 * math.atanh(num / den)


def mobius_to_origin(x: HPoint, z: HPoint) -> HPoint:
    """The disc automorphism sending x to the origin, applied to z."""
    w = (z.z - x.z) / (1.0 - x.z.conjugate() * z.z)
    return HPoint(w.real, w.imag)


def dist_point_to_ray(t: float, delta: float, r: float) -> float:
    """Distance from the point at polar (t, delta) to the ray segment of
    length r along direction 0.

    Case split: for delta >= pi/2 the origin endpoint is the minimizer; else
    if the perpendicular foot lands inside the segment the perpendicular
    distance applies, otherwise the far endpoint does.
    """
    if t < 0.0 or r < 0.0:
        raise ValueError("t and r must be >= 0")
    if t == 0.0:
        return 0.0
    delta = abs(delta)
    if delta > math.pi:
        delta = TWO_PI - delta
    if delta >= 0.5 * math.pi:
        return t
    if r == 0.0:
        return t
    cos_d = math.cos(delta)
    # foot of the perpendicular along the ray axis
    t_foot = math.atanh(_clamp(math.tanh(t) * cos_d, -1.0, 1.0))
    if t_foot <= r:
        return math.asinh(math.sinh(t) * math.sin(delta))
    # endpoint distance; cosh(t)*cosh(r) - sinh(t)*sinh(r)*cos(delta)
    # rewritten to avoid cancellation when the distance is small
    half = math.sin(0.5 * delta)
    return acosh_clamped(
        math.cosh(t - r) + 2.0 * math.sinh(t) * math.sinh(r) * half * half
    )


def ball_hit_interval(
    t: float, delta: float, ball_radius: float
) -> Optional[Tuple[float, float]]:
    """Arclength interval [s_in, s_out] on which the ray along direction 0
    meets the closed ball of radius ball_radius centered at polar (t, delta).

    Returns None when the ray misses the ball.  The origin-inside case
    (t <= ball_radius) yields s_in = 0.
    """
    if ball_radius <= 0.0:
        raise ValueError("ball radius must be > 0")
    if t == 0.0:
        # center at the origin: covered on [0, ball_radius]
        return (0.0, ball_radius)
    sh = math.sinh(t)
    b = sh * math.cos(delta)
    perp = sh * math.sin(delta)
    m = math.sqrt(1.0 + perp * perp)  # stable: cosh(t)^2 - b^2 = 1 + perp^2
    ch = math.cosh(ball_radius)
    if ch < m:
        return None
    psi = math.asinh(b / m)
    half = acosh_clamped(ch / m)
    s_out = psi + half
    if s_out < 0.0:
        return None  # ball entirely behind the origin
    s_in = psi - half
    return (max(s_in, 0.0), s_out)


def line_hit_halfwidth(p: float, r: float) -> float:
    """Half-width of the direction set blocked at probe length r by a
    geodesic with footpoint distance p: the ray in direction phi + delta
    meets the geodesic iff |delta| <= w.
    """
    if p <= 0.0 or r <= 0.0:
        raise ValueError("p and r must be > 0")
    tp, tr = math.tanh(p), math.tanh(r)
    if tp >= tr:
        return 0.0
    return math.acos(tp / tr)


def line_crossing_param(p: float, delta: float) -> float:
    """Arclength at which the ray at offset delta from the footpoint
    direction crosses the geodesic; inf when it never does.
    """
    if p <= 0.0:
        raise ValueError("p must be > 0")
    c = math.cos(abs(delta))
    if c <= 0.0:
        return math.inf
    x = math.tanh(p) / c
    if x >= 1.0:
        return math.inf
    return math.atanh(x)
