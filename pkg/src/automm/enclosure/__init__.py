"""Automatic majorizer engine.

Propagates degree-k Taylor interval polynomials (one step-size variable)
and multivariate quadratic interval enclosures (a vector of direction
weights) through a loss graph, yielding locally-tight upper and lower
polynomial bounds over an adaptive trust region.
"""

from .dpoly import (
    DirectionalPoly,
    Trust,
    dpoly_add,
    dpoly_compose_elementary,
    dpoly_mul,
    dpoly_scale,
    lower_poly,
    range_bound,
    upper_poly,
)
from .propagate import propagate_directional
from .quad import QuadEnclosure, propagate_quadratic
from .remainders import elementary_remainder

__all__ = [
    "DirectionalPoly",
    "QuadEnclosure",
    "Trust",
    "dpoly_add",
    "dpoly_compose_elementary",
    "dpoly_mul",
    "dpoly_scale",
    "elementary_remainder",
    "lower_poly",
    "propagate_directional",
    "propagate_quadratic",
    "range_bound",
    "upper_poly",
]
