"""Visibility through Poisson obstacle fields in the hyperbolic plane.

Simulation and closed-form analysis of two obstacle processes seen from the
origin of the Poincare disc: a Poisson Boolean model of balls with bounded
random radii, and a Poisson process of complete geodesics.  The package
computes exact per-scene visibility (visible direction sets, directional and
total visibility, star areas), the matching closed-form laws, and Monte
Carlo experiments for the tail and near-critical behaviour.
"""

from .analytic import (
    alpha,
    critical_radius,
    intensity_for_alpha,
    janson_intensity,
    lambda_gv,
    line_joint,
    line_vacancy,
    vacancy_f,
)
from .circlearcs import ArcSet
from .hypgeo import BallObstacle, GeodesicObstacle, HPoint, Ray
from .sampler import (
    BooleanModelConfig,
    BooleanScene,
    LineScene,
    MemoryBudgetError,
    RadiusLaw,
    replicate_stream,
    sample_boolean_scene,
    sample_line_scene,
    window_for_visibility,
)
from .visibility import (
    VisibilityResult,
    WindowTooSmallError,
    direction_visibility,
    star_area,
    total_visibility,
    visible_set,
)

__version__ = "0.1.0"

__all__ = [
    "ArcSet",
    "BallObstacle",
    "BooleanModelConfig",
    "BooleanScene",
    "GeodesicObstacle",
    "HPoint",
    "LineScene",
    "MemoryBudgetError",
    "RadiusLaw",
    "Ray",
    "VisibilityResult",
    "WindowTooSmallError",
    "alpha",
    "critical_radius",
    "direction_visibility",
    "intensity_for_alpha",
    "janson_intensity",
    "lambda_gv",
    "line_joint",
    "line_vacancy",
    "replicate_stream",
    "sample_boolean_scene",
    "sample_line_scene",
    "star_area",
    "total_visibility",
    "vacancy_f",
    "visible_set",
    "window_for_visibility",
    "__version__",
]
