"""Poisson sampling: exact means, radial laws, determinism, window exactness."""

import math

import numpy as np
import pytest
from scipy import stats

from hypervis.sampler import (
    BooleanModelConfig,
    MemoryBudgetError,
    RadiusLaw,
    replicate_stream,
    sample_boolean_scene,
    sample_line_scene,
    sample_radial,
    window_for_visibility,
)
from hypervis.visibility import visible_set
from hypervis.sampler import BooleanScene

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# replicate streams
# ---------------------------------------------------------------------------


def test_replicate_stream_deterministic():
    a = replicate_stream(42, 7).random(10)
    b = replicate_stream(42, 7).random(10)
    assert np.array_equal(a, b)


def test_replicate_stream_distinct():
    a = replicate_stream(42, 7).random(10)
    b = replicate_stream(42, 8).random(10)
    c = replicate_stream(43, 7).random(10)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_replicate_stream_validation():
    with pytest.raises(ValueError):
        replicate_stream(-1, 0)
    with pytest.raises(ValueError):
        replicate_stream(2**64, 0)
    with pytest.raises(ValueError):
        replicate_stream(0, -1)


# ---------------------------------------------------------------------------
# radius laws
# ---------------------------------------------------------------------------


def test_radius_law_moments_exact():
    law = RadiusLaw.discrete([(0.5, 0.25), (1.0, 0.75)])
    assert law.bound == 1.0
    assert abs(law.e_sinh - (0.25 * math.sinh(0.5) + 0.75 * math.sinh(1.0))) < 1e-15
    assert (
        abs(
            law.e_cosh_minus_one
            - (0.25 * (math.cosh(0.5) - 1.0) + 0.75 * (math.cosh(1.0) - 1.0))
        )
        < 1e-15
    )


def test_radius_law_validation():
    with pytest.raises(ValueError):
        RadiusLaw((), ())
    with pytest.raises(ValueError):
        RadiusLaw((0.0,), (1.0,))
    with pytest.raises(ValueError):
        RadiusLaw((1.0,), (0.9,))
    with pytest.raises(ValueError):
        RadiusLaw((1.0, 2.0), (0.5, -0.5))


def test_radius_law_sample_frequencies():
    law = RadiusLaw.discrete([(0.5, 0.3), (1.5, 0.7)])
    draws = law.sample(replicate_stream(0, 0), 100_000)
    frac = float(np.mean(draws == 0.5))
    assert abs(frac - 0.3) < 4.0 * math.sqrt(0.3 * 0.7 / 100_000)


# ---------------------------------------------------------------------------
# Boolean scenes
# ---------------------------------------------------------------------------


def test_boolean_expected_count():
    config = BooleanModelConfig(
        intensity=0.2, radius_law=RadiusLaw.constant(1.0), window_radius=3.0
    )
    mean = 0.2 * TWO_PI * (math.cosh(3.0) - 1.0)
    assert abs(config.expected_count - mean) < 1e-12
    assert abs(mean - 11.394) < 5e-3  # frozen desk value

    n_scenes = 100_000
    counts = np.array(
        [len(sample_boolean_scene(config, replicate_stream(1, i))) for i in range(n_scenes)]
    )
    se = counts.std(ddof=1) / math.sqrt(n_scenes)
    assert abs(counts.mean() - mean) < 3.0 * se


def test_boolean_counts_poisson_chisq():
    config = BooleanModelConfig(
        intensity=0.1, radius_law=RadiusLaw.constant(1.0), window_radius=2.0
    )
    mean = config.expected_count
    n_scenes = 100_000
    counts = np.array(
        [len(sample_boolean_scene(config, replicate_stream(2, i))) for i in range(n_scenes)]
    )
    kmax = int(stats.poisson.ppf(0.9999, mean)) + 1
    observed = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
    expected = stats.poisson.pmf(np.arange(kmax + 1), mean) * n_scenes
    expected[kmax] = n_scenes - expected[:kmax].sum()
    keep = expected >= 5.0
    chi2 = float(((observed[keep] - expected[keep]) ** 2 / expected[keep]).sum())
    # absorb the pooled tail into the dof count
    pval = stats.chi2.sf(chi2, keep.sum() - 1)
    assert pval > 1e-3


def test_radial_inversion_ks():
    t_hi = 3.0
    draws = sample_radial(replicate_stream(3, 0), 100_000, 0.0, t_hi)
    assert np.all((draws >= 0.0) & (draws <= t_hi))
    cdf = lambda t: (np.cosh(t) - 1.0) / (math.cosh(t_hi) - 1.0)
    stat = stats.kstest(draws, cdf)
    assert stat.pvalue > 1e-3


def test_boolean_scene_determinism():
    config = BooleanModelConfig(
        intensity=0.5, radius_law=RadiusLaw.discrete([(0.5, 0.5), (1.0, 0.5)]), window_radius=4.0
    )
    a = sample_boolean_scene(config, replicate_stream(9, 3))
    b = sample_boolean_scene(config, replicate_stream(9, 3))
    assert np.array_equal(a.t, b.t)
    assert np.array_equal(a.phi, b.phi)
    assert np.array_equal(a.radius, b.radius)


def test_memory_budget_guard():
    config = BooleanModelConfig(
        intensity=1.0,
        radius_law=RadiusLaw.constant(1.0),
        window_radius=40.0,
        memory_budget=10_000,
    )
    with pytest.raises(MemoryBudgetError):
        sample_boolean_scene(config, replicate_stream(0, 0))
    with pytest.raises(MemoryBudgetError):
        sample_line_scene(1.0, 40.0, replicate_stream(0, 0), memory_budget=10_000)


def test_window_for_visibility():
    law = RadiusLaw.constant(1.0)
    assert window_for_visibility(5.0, law) == 6.0
    assert window_for_visibility(0.0, law) == 1.0
    with pytest.raises(ValueError):
        window_for_visibility(-1.0, law)


def test_window_truncation_exactness():
    # balls beyond r + C never contribute a shadow at probe r: dropping them
    # from an oversized window leaves the visible set bit-identical
    law = RadiusLaw.constant(1.0)
    r = 3.0
    config = BooleanModelConfig(
        intensity=0.4, radius_law=law, window_radius=window_for_visibility(r, law) + 2.0
    )
    for i in range(50):
        scene = sample_boolean_scene(config, replicate_stream(11, i))
        keep = scene.t <= r + law.bound
        truncated = BooleanScene(
            scene.t[keep], scene.phi[keep], scene.radius[keep], scene.window_radius, config
        )
        assert visible_set(scene, r).blocked.arcs == visible_set(truncated, r).blocked.arcs


def test_rotation_invariance_coupled():
    law = RadiusLaw.constant(1.0)
    config = BooleanModelConfig(intensity=0.3, radius_law=law, window_radius=4.0)
    offset = 1.234
    for i in range(20):
        scene = sample_boolean_scene(config, replicate_stream(13, i))
        rotated = BooleanScene(
            scene.t,
            np.mod(scene.phi + offset, TWO_PI),
            scene.radius,
            scene.window_radius,
            config,
        )
        y0 = visible_set(scene, 3.0).y
        y1 = visible_set(rotated, 3.0).y
        assert abs(y0 - y1) < 1e-9


# ---------------------------------------------------------------------------
# line scenes
# ---------------------------------------------------------------------------


def test_line_expected_count():
    lam, p_max = 0.5, 3.0
    mean = TWO_PI * lam * math.sinh(p_max)
    assert abs(mean - math.pi * math.sinh(3.0)) < 1e-12
    assert abs(mean - 31.47) < 5e-3  # frozen desk value
    n_scenes = 50_000
    counts = np.array(
        [len(sample_line_scene(lam, p_max, replicate_stream(4, i))) for i in range(n_scenes)]
    )
    se = counts.std(ddof=1) / math.sqrt(n_scenes)
    assert abs(counts.mean() - mean) < 3.0 * se


def test_line_footpoint_cdf():
    lam, p_max = 0.5, 3.0
    scene = sample_line_scene(lam, p_max, replicate_stream(5, 0))
    draws = []
    for i in range(2000):
        draws.append(sample_line_scene(lam, p_max, replicate_stream(5, i)).p)
    draws = np.concatenate(draws)
    cdf = lambda p: np.sinh(p) / math.sinh(p_max)
    stat = stats.kstest(draws, cdf)
    assert stat.pvalue > 1e-3
    assert np.all((draws > 0.0) & (draws <= p_max))


def test_line_scene_validation():
    with pytest.raises(ValueError):
        sample_line_scene(0.0, 1.0, replicate_stream(0, 0))
    with pytest.raises(ValueError):
        sample_line_scene(1.0, 0.0, replicate_stream(0, 0))
