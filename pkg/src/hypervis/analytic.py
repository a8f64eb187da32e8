"""Closed-form evaluators: the ground truth the Monte Carlo drivers are
compared against.

Covers the single-ray vacancy probability, the decay rate alpha and the
critical quantities derived from it, the two-ray geometry (t_theta, h),
the line-process laws, the near-critical scaling predictions, and the
shrinking-radius intensity calibration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .sampler import RadiusLaw

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Boolean model: vacancy and criticality
# ---------------------------------------------------------------------------


def vacancy_f(r: float, lam: float, law: RadiusLaw) -> float:
    """P[a length-r segment is vacant] =
    exp(-lam * (2*pi*E[cosh R - 1] + 2*r*E[sinh R]))."""
    if r < 0.0:
        raise ValueError("r must be >= 0")
    return math.exp(-lam * (TWO_PI * law.e_cosh_minus_one + 2.0 * r * law.e_sinh))


def alpha(lam: float, law: RadiusLaw) -> float:
    """Exponential decay rate of the single-ray vacancy: 2*lam*E[sinh R]."""
    return 2.0 * lam * law.e_sinh


def lambda_gv(law: RadiusLaw) -> float:
    """Critical intensity for visibility to infinity: alpha = 1 there."""
    return 1.0 / (2.0 * law.e_sinh)


def intensity_for_alpha(target_alpha: float, law: RadiusLaw) -> float:
    """Intensity at which the decay rate equals target_alpha."""
    if target_alpha <= 0.0:
        raise ValueError("alpha must be > 0")
    return target_alpha / (2.0 * law.e_sinh)


def critical_radius(lam: float) -> float:
    """Critical deterministic ball radius at intensity lam: arsinh(1/(2*lam))."""
    if lam <= 0.0:
        raise ValueError("intensity must be > 0")
    return math.asinh(1.0 / (2.0 * lam))


# ---------------------------------------------------------------------------
# two-ray geometry
# ---------------------------------------------------------------------------


def t_theta(theta: float, c_bound: float) -> float:
    """Distance along a ray at angle theta beyond which its points are at
    least 2*C from the other ray's geodesic."""
    if not 0.0 < theta <= 0.5 * math.pi:
        raise ValueError("theta must be in (0, pi/2]")
    if c_bound <= 0.0:
        raise ValueError("C must be > 0")
    num = math.cosh(4.0 * c_bound) - math.cos(2.0 * theta)
    den = 1.0 - math.cos(2.0 * theta)
    return math.acosh(math.sqrt(num / den))


def h_of(c_bound: float, r: float) -> float:
    """Angle below which the 2*C decoupling distance is not reached within
    probe length r; decays like e^{-r}.

    Convention: when cosh(r)^2 < cosh(4*C) no angle decouples, return pi/2.
    """
    if c_bound <= 0.0 or r <= 0.0:
        raise ValueError("C and r must be > 0")
    c2 = math.cosh(r) ** 2
    c4 = math.cosh(4.0 * c_bound)
    if c2 < c4:
        return 0.5 * math.pi
    # 0.5*acos(1 - (c4-1)/(c2-1)) rewritten without the 1-x cancellation
    return math.asin(math.sinh(2.0 * c_bound) / math.sinh(r))


# ---------------------------------------------------------------------------
# line process
# ---------------------------------------------------------------------------


def line_vacancy(lam: float, r: float) -> float:
    """P[a length-r ray meets no line] = exp(-2*lam*r)."""
    if r < 0.0:
        raise ValueError("r must be >= 0")
    return math.exp(-2.0 * lam * r)


def triangle_perimeter(r: float, theta: float) -> float:
    """Perimeter of the triangle spanned by the origin and the two ray
    endpoints at angle theta: 2r + arcosh(cosh(r)^2*(1-cos theta) + cos theta)."""
    if r < 0.0 or not 0.0 <= theta <= math.pi:
        raise ValueError("need r >= 0 and theta in [0, pi]")
    x = math.cosh(r) ** 2 * (1.0 - math.cos(theta)) + math.cos(theta)
    return 2.0 * r + math.acosh(max(x, 1.0))


def line_joint(lam: float, r: float, theta: float) -> float:
    """P[both rays of length r at angle theta avoid every line]."""
    return math.exp(-lam * triangle_perimeter(r, theta))


# ---------------------------------------------------------------------------
# near-critical scaling predictions (rates only, constants unknown)
# ---------------------------------------------------------------------------


def mean_visibility_scale(a: float) -> float:
    """Predicted magnitude of E[total visibility] and E[star area] for
    a > 1: proportional to 1/(a - 1)."""
    if a <= 1.0:
        raise ValueError("supercritical scale needs alpha > 1")
    return 1.0 / (a - 1.0)


def infinite_visibility_scale(a: float) -> float:
    """Predicted magnitude of P[some direction visible to infinity] for
    a < 1: proportional to (1 - a)."""
    if a >= 1.0:
        raise ValueError("subcritical scale needs alpha < 1")
    return 1.0 - a


# ---------------------------------------------------------------------------
# shrinking radii with growing intensity (circle-covering calibration)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JansonCalibration:
    ball_radius: float
    target_r: float
    target_p: float
    intensity: float
    mean_count: float  # expected number of balls reaching the probe disc
    b_constant: float
    t_level: float


def reach_radius_euclidean(r_bar: float, big_r_bar: float) -> float:
    """Euclidean radius alpha(r_bar) within which a ball center can reach the
    probe disc of Euclidean radius r_bar."""
    rb = big_r_bar
    disc = (1.0 - rb * rb) ** 2 + 4.0 * (rb + r_bar) * (rb + rb * rb * r_bar)
    return (math.sqrt(disc) - (1.0 - rb * rb)) / (2.0 * rb * (1.0 + rb * r_bar))


def shadow_onset_radius(r_bar: float, big_r_bar: float) -> float:
    """beta(r_bar): Euclidean center radius up to which the full shadow
    formula applies."""
    rb2, r2 = big_r_bar**2, r_bar**2
    return math.sqrt((rb2 + r2) / (rb2 * r2 + 1.0))


def normalized_shadow_size(x_norm: float, big_r_bar: float) -> float:
    """Normalized (perimeter-1) shadow length of a ball centered at Euclidean
    radius x_norm, valid up to beta(r_bar)."""
    arg = big_r_bar * (1.0 - x_norm * x_norm) / (x_norm * (1.0 - big_r_bar**2))
    return math.asin(min(arg, 1.0)) / math.pi


def mean_count_lambda(lam: float, r_bar: float, big_r_bar: float) -> float:
    """Lambda: mean number of relevant centers divided by 2*pi."""
    a2 = reach_radius_euclidean(r_bar, big_r_bar) ** 2
    return 2.0 * lam * a2 / (1.0 - a2)


def janson_b(r: float, quad_tol: float = 1e-10) -> float:
    """The covering constant b = E[Rtilde] / pi with Rtilde = (1-X^2)/X.

    X follows the small-radius limit of the center's radial density,
    proportional to rho/(1-rho^2)^2 on [0, tanh(r/2)].  The normalization of
    Rtilde is a free calibration constant; it is fixed so that b * R_bar
    equals the limit mean normalized shadow length, which makes the covering
    condition agree with the exact expected-gap count
    E[#gaps] = count * exp(-count * mean_length) and is validated by the
    shrinking-radius coverage experiment.
    """
    r_bar = math.tanh(0.5 * r)
    norm = r_bar * r_bar / (2.0 * (1.0 - r_bar * r_bar))  # density normalizer

    def integrand(rho: float) -> float:
        density = rho / (1.0 - rho * rho) ** 2 / norm
        return density * (1.0 - rho * rho) / rho

    val, _ = integrate.quad(integrand, 0.0, r_bar, epsabs=quad_tol, epsrel=quad_tol)
    return val / math.pi


def janson_t_level(p: float) -> float:
    """t with exp(-e^{-t}) = p."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    return -math.log(-math.log(p))


def janson_intensity(ball_radius: float, r: float, p: float) -> JansonCalibration:
    """Intensity lambda(R) under which P[total visibility <= r] tends to p
    as the ball radius R shrinks to 0."""
    if not 0.0 < ball_radius < r:
        raise ValueError("need 0 < R < r")
    t = janson_t_level(p)
    r_bar = math.tanh(0.5 * r)
    big_r_bar = math.tanh(0.5 * ball_radius)
    b = janson_b(r)
    a2 = reach_radius_euclidean(r_bar, big_r_bar) ** 2
    bracket = (
        -math.log(big_r_bar)
        + math.log(-math.log(big_r_bar))
        + t
        - math.log(b)
    )
    lam = (1.0 - a2) / (2.0 * a2) * bracket / (TWO_PI * b * big_r_bar)
    mean_count = TWO_PI * mean_count_lambda(lam, r_bar, big_r_bar)
    return JansonCalibration(
        ball_radius=ball_radius,
        target_r=r,
        target_p=p,
        intensity=lam,
        mean_count=mean_count,
        b_constant=b,
        t_level=t,
    )


def janson_condition_value(cal: JansonCalibration) -> float:
    """Left side of the covering condition; tends to t_level as R -> 0."""
    eps = math.tanh(0.5 * cal.ball_radius)
    big_lambda = cal.mean_count / TWO_PI
    be = cal.b_constant * eps
    return TWO_PI * be * big_lambda + math.log(be) - math.log(-math.log(be))
