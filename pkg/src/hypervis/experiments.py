"""Monte Carlo drivers: tail curves, moment ratios, slope fits, the
near-critical sweep and the shrinking-radius calibration experiment.

Determinism contract: replicate i draws from replicate_stream(seed, i);
replicates are processed in fixed-size chunks and chunk results are reduced
in index order with exact accumulation (integer counts, math.fsum), so every
table is bit-identical at any worker count.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels, analytic, thinned
from .sampler import (
    MemoryBudgetError,
    RadiusLaw,
    replicate_stream,
    window_for_visibility,
)

TWO_PI = 2.0 * math.pi

# fixed chunk size: chunk boundaries must not depend on the worker count
CHUNK_SIZE = 4096


# ---------------------------------------------------------------------------
# model descriptors and events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BooleanModel:
    intensity: float
    radius_law: RadiusLaw

    def model_hash(self) -> str:
        spec = f"boolean|{self.intensity!r}|{self.radius_law.values!r}|{self.radius_law.weights!r}"
        return hashlib.sha256(spec.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class LineModel:
    intensity: float

    def model_hash(self) -> str:
        spec = f"lines|{self.intensity!r}"
        return hashlib.sha256(spec.encode()).hexdigest()[:12]


Model = Union[BooleanModel, LineModel]


@dataclass(frozen=True)
class SegmentVacancy:
    """The length-r segment in a fixed direction avoids every obstacle."""

    r: float


@dataclass(frozen=True)
class YrNonempty:
    """Some direction in [0, eps) is visible to length r."""

    r: float
    eps: float = TWO_PI


@dataclass(frozen=True)
class JointVacancy:
    """Both length-r rays at angle theta apart are vacant."""

    r: float
    theta: float


@dataclass(frozen=True)
class VisibilityAtMost:
    """Total visibility <= r: shadows at probe r cover the whole circle."""

    r: float


@dataclass(frozen=True)
class CoveredVacancy:
    """The length-r segment lies inside the occupied set."""

    r: float


Event = Union[SegmentVacancy, YrNonempty, JointVacancy, VisibilityAtMost, CoveredVacancy]


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n: int


@dataclass(frozen=True)
class TailRow:
    r: float
    p_hat: float
    stderr: float
    n: int


@dataclass(frozen=True)
class TailCurve:
    rows: Tuple[TailRow, ...]
    model: Model
    seed: int

    @property
    def model_hash(self) -> str:
        return self.model.model_hash()


# ---------------------------------------------------------------------------
# chunked deterministic execution
# ---------------------------------------------------------------------------


def _chunks(n: int) -> List[Tuple[int, int]]:
    return [(lo, min(lo + CHUNK_SIZE, n)) for lo in range(0, n, CHUNK_SIZE)]


def _run_chunked(worker, args: tuple, n: int, threads: int) -> list:
    """Run worker(*args, lo, hi) over fixed chunks; results in index order."""
    bounds = _chunks(n)
    if threads <= 1:
        return [worker(*args, lo, hi) for lo, hi in bounds]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, *args, lo, hi) for lo, hi in bounds]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# per-replicate scene evaluation
# ---------------------------------------------------------------------------


def _draw_boolean(stream, intensity: float, law: RadiusLaw, window: float):
    cw = math.cosh(window) - 1.0
    n = int(stream.poisson(intensity * TWO_PI * cw))
    t = np.arccosh(1.0 + stream.random(n) * cw)
    phi = stream.random(n) * TWO_PI
    rad = law.sample(stream, n)
    return t, phi, rad


def _draw_lines(stream, intensity: float, p_max: float):
    n = int(stream.poisson(TWO_PI * intensity * math.sinh(p_max)))
    p = np.arcsinh(stream.random(n) * math.sinh(p_max))
    phi = stream.random(n) * TWO_PI
    return p, phi


def _event_outcome(model: Model, event: Event, stream) -> bool:
    if isinstance(model, BooleanModel):
        lam, law = model.intensity, model.radius_law
        r = event.r
        window = window_for_visibility(r, law)
        t, phi, rad = _draw_boolean(stream, lam, law, window)
        if isinstance(event, SegmentVacancy):
            return _kernels.ball_first_hit(t, phi, rad, r) >= r
        if isinstance(event, YrNonempty):
            hw = _kernels.ball_halfwidths(t, rad, r)
            return _kernels.uncovered_measure(phi, hw, event.eps) > 0.0
        if isinstance(event, JointVacancy):
            if _kernels.ball_first_hit(t, phi, rad, r) < r:
                return False
            return _kernels.ball_first_hit(t, phi - event.theta, rad, r) >= r
        if isinstance(event, VisibilityAtMost):
            hw = _kernels.ball_halfwidths(t, rad, r)
            return _kernels.uncovered_measure(phi, hw, TWO_PI) == 0.0
        if isinstance(event, CoveredVacancy):
            return _kernels.covered_first_gap(t, phi, rad, r) >= r
    else:
        lam = model.intensity
        r = event.r
        p, phi = _draw_lines(stream, lam, r)
        if isinstance(event, SegmentVacancy):
            return _kernels.line_first_cross(p, phi, r) >= r
        if isinstance(event, YrNonempty):
            hw = _kernels.line_halfwidths(p, r)
            return _kernels.uncovered_measure(phi, hw, event.eps) > 0.0
        if isinstance(event, JointVacancy):
            if _kernels.line_first_cross(p, phi, r) < r:
                return False
            return _kernels.line_first_cross(p, phi - event.theta, r) >= r
        if isinstance(event, VisibilityAtMost):
            hw = _kernels.line_halfwidths(p, r)
            return _kernels.uncovered_measure(phi, hw, TWO_PI) == 0.0
        if isinstance(event, CoveredVacancy):
            raise ValueError("covered-set events need a Boolean model")
    raise TypeError(f"unknown event {event!r}")


def _bernoulli_chunk(model, event, seed, lo, hi) -> int:
    count = 0
    for i in range(lo, hi):
        if _event_outcome(model, event, replicate_stream(seed, i)):
            count += 1
    return count


def estimate_event(
    model: Model, event: Event, n: int, seed: int, threads: int = 1
) -> Estimate:
    """Bernoulli Monte Carlo of one event with binomial standard error."""
    if n < 1:
        raise ValueError("n must be >= 1")
    successes = sum(_run_chunked(_bernoulli_chunk, (model, event, seed), n, threads))
    p = successes / n
    return Estimate(mean=p, stderr=math.sqrt(p * (1.0 - p) / n), n=n)


# ---------------------------------------------------------------------------
# tail curves (coupled over r)
# ---------------------------------------------------------------------------


def _tail_chunk_boolean(intensity, law, r_list, seed, lo, hi) -> np.ndarray:
    counts = np.zeros(len(r_list), dtype=np.int64)
    for i in range(lo, hi):
        ev = thinned.visible_evolution(
            intensity, law, r_list, replicate_stream(seed, i)
        )
        counts += ev.nonempty
    return counts


def _tail_chunk_lines(intensity, r_list, seed, lo, hi) -> np.ndarray:
    counts = np.zeros(len(r_list), dtype=np.int64)
    p_max = r_list[-1]
    for i in range(lo, hi):
        p, phi = _draw_lines(replicate_stream(seed, i), intensity, p_max)
        alive = True
        for k, r in enumerate(r_list):
            if alive:
                hw = _kernels.line_halfwidths(p, r)
                alive = _kernels.uncovered_measure(phi, hw, TWO_PI) > 0.0
            if alive:
                counts[k] += 1
            # containment of visible sets makes the curve monotone; once the
            # probe dies it stays dead
    return counts


def tail_curve(
    model: Model, r_list: Sequence[float], n: int, seed: int, threads: int = 1
) -> TailCurve:
    """Empirical P[Y_r != 0] on a coupled scene set: one scene per replicate,
    tested at every r, so the curve is exactly monotone non-increasing."""
    r_arr = [float(r) for r in r_list]
    if len(r_arr) == 0 or any(b <= a for a, b in zip(r_arr, r_arr[1:])):
        raise ValueError("r_list must be strictly increasing")
    if isinstance(model, BooleanModel):
        parts = _run_chunked(
            _tail_chunk_boolean,
            (model.intensity, model.radius_law, r_arr, seed),
            n,
            threads,
        )
    else:
        parts = _run_chunked(
            _tail_chunk_lines, (model.intensity, r_arr, seed), n, threads
        )
    counts = np.sum(parts, axis=0)
    rows = tuple(
        TailRow(
            r=r,
            p_hat=int(c) / n,
            stderr=math.sqrt((int(c) / n) * (1 - int(c) / n) / n),
            n=n,
        )
        for r, c in zip(r_arr, counts)
    )
    return TailCurve(rows=rows, model=model, seed=seed)


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------


def _select_rows(curve: TailCurve, r_range: Tuple[float, float]) -> List[TailRow]:
    lo, hi = r_range
    rows = [row for row in curve.rows if lo <= row.r <= hi]
    if len(rows) < 2:
        raise ValueError("need at least two rows in the fit range")
    if any(row.p_hat <= 0.0 for row in rows):
        raise ValueError("fit range contains p_hat = 0")
    return rows


def fit_loglinear(
    curve: TailCurve, r_range: Tuple[float, float]
) -> Tuple[float, float]:
    """Weighted least-squares slope of log p_hat against r.

    Weights 1/stderr(log p)^2 with stderr(log p) = stderr/p_hat; noiseless
    rows (stderr 0) fall back to an unweighted fit with residual-based
    slope error.
    """
    rows = _select_rows(curve, r_range)
    x = np.array([row.r for row in rows])
    y = np.log([row.p_hat for row in rows])
    se = np.array([row.stderr / row.p_hat for row in rows])
    if np.all(se > 0.0):
        w = 1.0 / se**2
        known_var = True
    else:
        w = np.ones_like(x)
        known_var = False
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
    if known_var:
        slope_se = math.sqrt(1.0 / sxx)
    else:
        resid = y - ybar - slope * (x - xbar)
        dof = max(len(x) - 2, 1)
        slope_se = math.sqrt((w * resid**2).sum() / dof / sxx)
    return float(slope), float(slope_se)


@dataclass(frozen=True)
class InverseRReport:
    max_rp: float
    min_rp: float
    ratio: float  # max/min of r * p_hat over the range
    n_rows: int


def fit_inverse_r(curve: TailCurve, r_range: Tuple[float, float]) -> InverseRReport:
    """Boundedness report for the critical case: spread of r * p_hat."""
    rows = _select_rows(curve, r_range)
    rp = [row.r * row.p_hat for row in rows]
    return InverseRReport(
        max_rp=max(rp), min_rp=min(rp), ratio=max(rp) / min(rp), n_rows=len(rows)
    )


# ---------------------------------------------------------------------------
# second-moment sandwich
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentReport:
    m: float  # mean of y_r(eps)
    m_stderr: float
    s: float  # mean of y_r(eps)^2
    s_stderr: float
    p: float  # P[Y_r(eps) != 0]
    p_stderr: float
    ratio: float  # m^2 / s
    lower: float  # sandwich lower bound m^2/s
    upper: float  # sandwich upper bound 4 m^2/s
    bound_stderr: float  # delta-method stderr of the lower bound
    verdict: bool
    n: int


def _moment_chunk(model, r, eps, seed, lo, hi):
    s1 = []
    s2 = []
    s3 = []
    s4 = []
    pos = 0
    for i in range(lo, hi):
        stream = replicate_stream(seed, i)
        if isinstance(model, BooleanModel):
            window = window_for_visibility(r, model.radius_law)
            t, phi, rad = _draw_boolean(stream, model.intensity, model.radius_law, window)
            hw = _kernels.ball_halfwidths(t, rad, r)
        else:
            p_, phi = _draw_lines(stream, model.intensity, r)
            hw = _kernels.line_halfwidths(p_, r)
        y = _kernels.uncovered_measure(phi, hw, eps)
        if y > 0.0:
            pos += 1
        s1.append(y)
        s2.append(y * y)
        s3.append(y * y * y)
        s4.append(y * y * y * y)
    return (math.fsum(s1), math.fsum(s2), math.fsum(s3), math.fsum(s4), pos)


def moment_ratio(
    model: Model, r: float, eps: float, n: int, seed: int, threads: int = 1
) -> MomentReport:
    """Second-moment sandwich check: the nonemptiness probability must lie in
    [m^2/s, 4 m^2/s] up to 3 propagated standard errors."""
    if not 0.0 < eps < 0.5 * math.pi:
        raise ValueError("eps must be in (0, pi/2)")
    parts = _run_chunked(_moment_chunk, (model, r, eps, seed), n, threads)
    e1 = math.fsum(p[0] for p in parts) / n
    e2 = math.fsum(p[1] for p in parts) / n
    e3 = math.fsum(p[2] for p in parts) / n
    e4 = math.fsum(p[3] for p in parts) / n
    pos = sum(p[4] for p in parts)
    p_hat = pos / n
    var_m = max(e2 - e1 * e1, 0.0) / n
    var_s = max(e4 - e2 * e2, 0.0) / n
    cov_ms = (e3 - e1 * e2) / n
    m, s = e1, e2
    if s <= 0.0:
        # every replicate fully blocked: sandwich is vacuous 0 <= p <= 0
        lower = upper = 0.0
        bound_se = 0.0
        ratio = 0.0
    else:
        ratio = m * m / s
        lower, upper = ratio, 4.0 * ratio
        g_m = 2.0 * m / s
        g_s = -m * m / (s * s)
        bound_se = math.sqrt(
            max(g_m * g_m * var_m + 2.0 * g_m * g_s * cov_ms + g_s * g_s * var_s, 0.0)
        )
    p_se = math.sqrt(p_hat * (1.0 - p_hat) / n)
    lo_margin = 3.0 * math.sqrt(bound_se**2 + p_se**2)
    hi_margin = 3.0 * math.sqrt((4.0 * bound_se) ** 2 + p_se**2)
    verdict = (p_hat >= lower - lo_margin) and (p_hat <= upper + hi_margin)
    return MomentReport(
        m=m,
        m_stderr=math.sqrt(var_m),
        s=s,
        s_stderr=math.sqrt(var_s),
        p=p_hat,
        p_stderr=p_se,
        ratio=ratio,
        lower=lower,
        upper=upper,
        bound_stderr=bound_se,
        verdict=verdict,
        n=n,
    )


# ---------------------------------------------------------------------------
# near-critical sweep
# ---------------------------------------------------------------------------

STAR_DIRECTIONS = 64  # rotation invariance makes any fixed grid unbiased


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    intensity: float
    mean_vis: float  # E[min(total visibility, r_max)]
    mean_vis_stderr: float
    mean_star_area: float  # truncated at r_max
    star_area_stderr: float
    p_nonempty: float  # P[Y_{r_max} != 0], the seeing-to-infinity proxy
    p_stderr: float
    r_max: float
    n: int
    stabilized: Optional[bool]  # doubling r_max moves the proxy < its stderr


def _sweep_chunk(intensity, law, r_max, seed, lo, hi):
    vis1 = []
    vis2 = []
    area1 = []
    area2 = []
    nonempty = 0
    thetas = np.arange(STAR_DIRECTIONS) * (TWO_PI / STAR_DIRECTIONS)
    for i in range(lo, hi):
        ev = thinned.visible_evolution(
            intensity,
            law,
            [r_max],
            replicate_stream(seed, i),
            want_total_visibility=True,
            vis_tol=1e-4,
            keep_balls=True,
        )
        v = ev.total_visibility
        vis1.append(v)
        vis2.append(v * v)
        if ev.nonempty[0]:
            nonempty += 1
        area = 0.0
        for theta in thetas:
            vt = _kernels.ball_first_hit(
                ev.ball_t, ev.ball_phi - theta, ev.ball_rad, r_max
            )
            area += math.cosh(vt) - 1.0
        area *= TWO_PI / STAR_DIRECTIONS
        area1.append(area)
        area2.append(area * area)
    return (
        math.fsum(vis1),
        math.fsum(vis2),
        math.fsum(area1),
        math.fsum(area2),
        nonempty,
    )


def _stabilization_chunk(intensity, law, r_max, seed, lo, hi):
    # coupled comparison of Y_{r_max} and Y_{2 r_max} on the same scenes
    died = 0
    for i in range(lo, hi):
        try:
            ev = thinned.visible_evolution(
                intensity, law, [r_max, 2.0 * r_max], replicate_stream(seed, i)
            )
        except MemoryBudgetError:
            # the deep march outgrew its sampling budget, so the comparison is
            # undecided; count it against stabilization (conservative)
            died += 1
            continue
        if ev.nonempty[0] and not ev.nonempty[1]:
            died += 1
    return died


def near_critical_sweep(
    law: RadiusLaw,
    alpha_list: Sequence[float],
    r_max: float,
    n: int,
    seed: int,
    threads: int = 1,
    stab_n: Optional[int] = None,
) -> List[SweepRow]:
    """Mean truncated total visibility, mean truncated star area and the
    seeing-to-infinity proxy P[Y_{r_max} != 0] for each alpha.

    For subcritical rows (alpha < 1) the proxy is validated by a coupled
    doubling run: the fraction of scenes alive at r_max but dead at 2*r_max
    must be smaller than the proxy's standard error.  Replicate indices n..
    n+stab_n keep the check independent of the main estimate.
    """
    if stab_n is None:
        stab_n = max(min(n // 10, 2000), 200)
    rows = []
    for a in alpha_list:
        lam = analytic.intensity_for_alpha(a, law)
        parts = _run_chunked(_sweep_chunk, (lam, law, r_max, seed), n, threads)
        sv = math.fsum(p[0] for p in parts)
        svv = math.fsum(p[1] for p in parts)
        sa = math.fsum(p[2] for p in parts)
        saa = math.fsum(p[3] for p in parts)
        pos = sum(p[4] for p in parts)
        mean_vis = sv / n
        mean_area = sa / n
        vis_se = math.sqrt(max(svv / n - mean_vis**2, 0.0) / n)
        area_se = math.sqrt(max(saa / n - mean_area**2, 0.0) / n)
        p_hat = pos / n
        p_se = math.sqrt(p_hat * (1.0 - p_hat) / n)
        stabilized: Optional[bool] = None
        if a < 1.0:
            bounds = [(n + lo, n + hi) for lo, hi in _chunks(stab_n)]
            if threads <= 1:
                died = sum(
                    _stabilization_chunk(lam, law, r_max, seed, lo, hi)
                    for lo, hi in bounds
                )
            else:
                with ProcessPoolExecutor(max_workers=threads) as pool:
                    futs = [
                        pool.submit(_stabilization_chunk, lam, law, r_max, seed, lo, hi)
                        for lo, hi in bounds
                    ]
                    died = sum(f.result() for f in futs)
            stabilized = died / stab_n < max(p_se, 1.0 / stab_n)
        rows.append(
            SweepRow(
                alpha=a,
                intensity=lam,
                mean_vis=mean_vis,
                mean_vis_stderr=vis_se,
                mean_star_area=mean_area,
                star_area_stderr=area_se,
                p_nonempty=p_hat,
                p_stderr=p_se,
                r_max=r_max,
                n=n,
                stabilized=stabilized,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# shrinking radii
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JansonRow:
    ball_radius: float
    intensity: float
    p_hat: float  # P[total visibility <= r]
    stderr: float
    n: int


def janson_experiment(
    radius_list: Sequence[float],
    r: float,
    p: float,
    n: int,
    seed: int,
    threads: int = 1,
) -> List[JansonRow]:
    """Coverage probabilities under the calibrated intensity lambda(R);
    P[total visibility <= r] should approach p as R shrinks."""
    if any(b >= a for a, b in zip(radius_list, radius_list[1:])):
        raise ValueError("radius_list must be strictly decreasing")
    rows = []
    for big_r in radius_list:
        cal = analytic.janson_intensity(big_r, r, p)
        model = BooleanModel(
            intensity=cal.intensity, radius_law=RadiusLaw.constant(big_r)
        )
        est = estimate_event(model, VisibilityAtMost(r), n, seed, threads)
        rows.append(
            JansonRow(
                ball_radius=big_r,
                intensity=cal.intensity,
                p_hat=est.mean,
                stderr=est.stderr,
                n=n,
            )
        )
    return rows
