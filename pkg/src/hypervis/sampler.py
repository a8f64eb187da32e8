"""Poisson sampling of the two obstacle processes.

Both processes are sampled in exact windows: a disc of hyperbolic radius
window_radius for the Boolean model, a footpoint-distance cutoff p_max for
the line process.  Radial coordinates are drawn by closed-form CDF
inversion; replicate streams come from a counter-based construction
(Philox keyed by (seed, replicate index)), so replicates are reproducible
in any order and at any parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .hypgeo import BallObstacle, GeodesicObstacle, HPoint

TWO_PI = 2.0 * math.pi

# reject windows whose expected point count exceeds this
DEFAULT_MEMORY_BUDGET = 50_000_000


class MemoryBudgetError(ValueError):
    """Window so large the expected point count exceeds the budget."""


def replicate_stream(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one replicate: Philox keyed by (seed, index)."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if index < 0:
        raise ValueError("replicate index must be >= 0")
    return np.random.Generator(np.random.Philox(key=(seed << 64) + index))


@dataclass(frozen=True)
class RadiusLaw:
    """Law of the random ball radius: finitely many atoms in (0, C].

    Moments are exact finite sums, never sampled.
    """

    values: Tuple[float, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.weights) or not self.values:
            raise ValueError("values and weights must be non-empty, same length")
        if any(v <= 0.0 for v in self.values):
            raise ValueError("radius values must be > 0")
        if any(w <= 0.0 for w in self.weights):
            raise ValueError("weights must be > 0")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @classmethod
    def constant(cls, radius: float) -> "RadiusLaw":
        return cls((float(radius),), (1.0,))

    @classmethod
    def discrete(cls, atoms: Sequence[Tuple[float, float]]) -> "RadiusLaw":
        values = tuple(float(v) for v, _ in atoms)
        weights = tuple(float(w) for _, w in atoms)
        return cls(values, weights)

    @property
    def bound(self) -> float:
        """C: the essential supremum of the radius."""
        return max(self.values)

    @property
    def e_sinh(self) -> float:
        return math.fsum(w * math.sinh(v) for v, w in zip(self.values, self.weights))

    @property
    def e_cosh_minus_one(self) -> float:
        return math.fsum(
            w * (math.cosh(v) - 1.0) for v, w in zip(self.values, self.weights)
        )

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if len(self.values) == 1:
            return np.full(n, self.values[0])
        return rng.choice(np.array(self.values), size=n, p=np.array(self.weights))


@dataclass(frozen=True)
class BooleanModelConfig:
    intensity: float
    radius_law: RadiusLaw
    window_radius: float
    seed: int = 0
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        if self.intensity <= 0.0:
            raise ValueError("intensity must be > 0")
        if self.window_radius <= 0.0:
            raise ValueError("window radius must be > 0")

    @property
    def expected_count(self) -> float:
        return self.intensity * TWO_PI * (math.cosh(self.window_radius) - 1.0)


@dataclass
class BooleanScene:
    """One sampled Boolean-model configuration, exact inside its window."""

    t: np.ndarray  # hyperbolic radial distances of centers
    phi: np.ndarray  # directions in [0, 2*pi)
    radius: np.ndarray
    window_radius: float
    config: BooleanModelConfig = None

    def __len__(self) -> int:
        return len(self.t)

    @property
    def obstacles(self) -> List[BallObstacle]:
        return [
            BallObstacle(HPoint.from_polar(t, p), r)
            for t, p, r in zip(self.t, self.phi, self.radius)
        ]


@dataclass
class LineScene:
    """One sampled line-process configuration, exact up to footpoint p_max."""

    p: np.ndarray  # footpoint distances in (0, p_max]
    phi: np.ndarray  # footpoint directions
    p_max: float
    intensity: float

    def __len__(self) -> int:
        return len(self.p)

    @property
    def obstacles(self) -> List[GeodesicObstacle]:
        return [GeodesicObstacle(p, f) for p, f in zip(self.p, self.phi)]


def sample_radial(
    rng: np.random.Generator, n: int, t_lo: float, t_hi: float
) -> np.ndarray:
    """Radial distances with density proportional to sinh(t) on (t_lo, t_hi],
    by inversion of the cosh CDF."""
    c_lo, c_hi = math.cosh(t_lo), math.cosh(t_hi)
    return np.arccosh(c_lo + rng.random(n) * (c_hi - c_lo))


def sample_boolean_scene(
    config: BooleanModelConfig, stream: np.random.Generator
) -> BooleanScene:
    """Draw one Boolean-model scene in the disc of radius window_radius."""
    mean = config.expected_count
    if mean > config.memory_budget:
        raise MemoryBudgetError(
            f"expected point count {mean:.3g} exceeds budget {config.memory_budget}"
        )
    n = int(stream.poisson(mean))
    t = sample_radial(stream, n, 0.0, config.window_radius)
    phi = stream.random(n) * TWO_PI
    radius = config.radius_law.sample(stream, n)
    return BooleanScene(t, phi, radius, config.window_radius, config)


def window_for_visibility(r_max: float, law: RadiusLaw) -> float:
    """Smallest window making every visibility query up to r_max exact:
    a ball can touch a length-r ray only if its center is within r + C."""
    if r_max < 0.0:
        raise ValueError("r_max must be >= 0")
    return r_max + law.bound


def sample_line_scene(
    intensity: float,
    p_max: float,
    stream: np.random.Generator,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> LineScene:
    """Draw one line-process scene with footpoint distances up to p_max.

    The process is sampled directly in hyperbolic footpoint coordinates;
    integrating the Euclidean intensity 2*lam*(1+rho^2)/(1-rho^2)^2 drho
    gives total mass 2*pi*lam*sinh(p_max) and footpoint CDF
    sinh(p)/sinh(p_max).
    """
    if intensity <= 0.0 or p_max <= 0.0:
        raise ValueError("intensity and p_max must be > 0")
    mean = TWO_PI * intensity * math.sinh(p_max)
    if mean > memory_budget:
        raise MemoryBudgetError(
            f"expected line count {mean:.3g} exceeds budget {memory_budget}"
        )
    n = int(stream.poisson(mean))
    p = np.arcsinh(stream.random(n) * math.sinh(p_max))
    phi = stream.random(n) * TWO_PI
    return LineScene(p, phi, p_max, intensity)
