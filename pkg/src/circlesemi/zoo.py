"""Named maps used by the tests and experiment scripts."""
from __future__ import annotations

from fractions import Fraction as F

from .circle import LiftedCircleMap, PeriodicPart, lift_pwl_map, pwl_map, standard_map

# Lift breakpoints (x, g(x)) of a degree-two map with one fold per period.
# Slopes are 3, -7, 7 and every breakpoint is dyadic, so the lift sends the
# grid k/2^m to itself for m >= 3 and grid-based cross-checks are exact.
# g(0) = 0 is the leftmost fixed point (g(y) < y + 1 on [0, 1)).
FOLDED_LIFT = ((0, 0), (F(3, 8), F(9, 8)), (F(5, 8), F(-5, 8)), (1, 2))

# Increasing degree-two lift with slope 1/2 near 0: [-1/6, 1/6] is invariant,
# so the semiconjugacy is constant on it (and on all its preimages).
PLATEAU_LIFT = ((0, 0), (F(1, 8), F(1, 16)), (F(7, 8), F(31, 16)), (1, 2))

# Three-piece periodic part from the map-file example.
THREE_PIECE_PHI = ((0.0, 0.0), (0.33, 1.2), (0.66, -0.8), (1.0, 0.0))


def doubling() -> LiftedCircleMap:
    return LiftedCircleMap(2, PeriodicPart.zero())


def rotation_doubling(omega: float) -> LiftedCircleMap:
    return standard_map(0.0, omega)


def folded() -> LiftedCircleMap:
    return lift_pwl_map([(float(x), float(y)) for x, y in FOLDED_LIFT])


def plateau() -> LiftedCircleMap:
    return lift_pwl_map([(float(x), float(y)) for x, y in PLATEAU_LIFT])


def three_piece() -> LiftedCircleMap:
    return pwl_map(THREE_PIECE_PHI)


def cubic_monotone() -> LiftedCircleMap:
    """``3x + 0.1 sin(2 pi x)``."""
    return standard_map(0.1, 0.0, degree=3)
