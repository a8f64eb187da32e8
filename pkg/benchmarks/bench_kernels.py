"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run as a script; prints per-kernel timings at several obstacle counts.
Synthetic inputs mimic a critical-intensity scene at probe length r: radial
coordinates are cosh-distributed up to r + 1, angles uniform.
"""

from __future__ import annotations

import math
import timeit

import numpy as np

from hypervis import _kernels

R_PROBE = 8.0
SIZES = (100, 1_000, 10_000, 100_000)
REPEAT = 5


def _scene(n: int, rng: np.random.Generator):
    w = R_PROBE + 1.0
    cw = math.cosh(w) - 1.0
    t = np.arccosh(1.0 + rng.random(n) * cw)
    phi = rng.random(n) * 2.0 * math.pi
    rad = np.full(n, 1.0)
    return t, phi, rad


def _calls(t, phi, rad):
    hw = _kernels.NUMPY_IMPL["ball_halfwidths"](t, rad, R_PROBE)
    p = np.minimum(t, R_PROBE - 1e-3) + 1e-6
    return {
        "ball_halfwidths": (("ball_halfwidths",), (t, rad, R_PROBE)),
        "uncovered_measure": (("uncovered_measure",), (phi, hw, 2.0 * math.pi)),
        "ball_first_hit": (("ball_first_hit",), (t, phi, rad, R_PROBE)),
        "covered_first_gap": (("covered_first_gap",), (t, phi, rad, R_PROBE)),
        "line_halfwidths": (("line_halfwidths",), (p, R_PROBE)),
        "line_first_cross": (("line_first_cross",), (p, phi, R_PROBE)),
    }


def _time(fn, args) -> float:
    fn(*args)  # warm-up (and numba compilation)
    number = max(1, 10_000 // len(args[0]))
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=REPEAT)) / number


def main() -> None:
    if _kernels.NUMBA_IMPL is None:
        print("numba unavailable or disabled (HYPERVIS_NO_NUMBA); nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'n':>9}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    for n in SIZES:
        t, phi, rad = _scene(n, rng)
        for name, (key, args) in _calls(t, phi, rad).items():
            np_t = _time(_kernels.NUMPY_IMPL[key[0]], args)
            nb_t = _time(_kernels.NUMBA_IMPL[key[0]], args)
            print(
                f"{name:<20}{n:>9}{np_t * 1e6:>10.1f}us{nb_t * 1e6:>10.1f}us"
                f"{np_t / nb_t:>8.1f}x"
            )


if __name__ == "__main__":
    main()
