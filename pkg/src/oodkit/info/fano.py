"""Fano-inequality bounds linking prediction error and mutual information."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ValidationError

BISECTION_TOL = 1e-10
_EDGE_TOL = 1e-12


def binary_entropy(e: float) -> float:
    """H_b(e) = -e ln e - (1-e) ln(1-e) in nats, with 0 ln 0 = 0."""
    if not (0.0 <= e <= 1.0):
        raise ValidationError(f"binary entropy needs e in [0, 1], got {e}")
    h = 0.0
    if e > 0.0:
        h -= e * math.log(e)
    if e < 1.0:
        h -= (1.0 - e) * math.log(1.0 - e)
    return h


@dataclass(frozen=True)
class FanoQuery:
    """Inputs to the minimum-error bound: label entropy, MI, label count."""

    h_y: float
    mi: float
    cardinality: int

    def __post_init__(self):
        if self.cardinality < 2:
            raise ValidationError("cardinality must be at least 2")
        if not (0.0 <= self.mi <= self.h_y + _EDGE_TOL):
            raise ValidationError(f"need 0 <= mi <= h_y, got mi={self.mi} h_y={self.h_y}")
        if self.h_y > math.log(self.cardinality) + _EDGE_TOL:
            raise ValidationError(
                f"h_y={self.h_y} exceeds ln(cardinality)={math.log(self.cardinality)}"
            )


def fano_min_error(q: FanoQuery) -> float:
    """Smallest error probability consistent with the Fano inequality.

    Solves H_b(e) + e ln(|Y|-1) >= H(y) - I(x;y) for the smallest
    e in [0, 1 - 1/|Y|] by bisection to 1e-10; monotone non-increasing in mi.
    """
    rhs = q.h_y - q.mi
    if rhs <= 0.0:
        return 0.0
    e_max = 1.0 - 1.0 / q.cardinality
    log_rest = math.log(q.cardinality - 1) if q.cardinality > 2 else 0.0

    def f(e: float) -> float:
        return binary_entropy(e) + e * log_rest

    if f(e_max) <= rhs:
        # The bound cannot be met below the cap (the h_y = ln|Y|, mi = 0
        # edge); returning the cap exactly avoids bisection plateau drift.
        return e_max
    lo, hi = 0.0, e_max
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) >= rhs:
            hi = mid
        else:
            lo = mid
    return hi


def mi_lower_bound_from_error(error_rate: float, cardinality: int, h_d: float) -> float:
    """Fano-implied lower bound on mutual information from a probe error rate.

    Returns max(0, h_d - H_b(e) - e ln(cardinality - 1)): the information a
    predictor achieving held-out error `e` over `cardinality` labels with
    prior entropy `h_d` certifies about its target.
    """
    if cardinality < 2:
        raise ValidationError("cardinality must be at least 2")
    e_max = 1.0 - 1.0 / cardinality
    if not (0.0 <= error_rate <= e_max + _EDGE_TOL):
        raise ValidationError(
            f"error_rate must lie in [0, 1 - 1/{cardinality}], got {error_rate}"
        )
    if h_d < 0.0:
        raise ValidationError("h_d must be non-negative")
    e = min(error_rate, e_max)
    log_rest = math.log(cardinality - 1) if cardinality > 2 else 0.0
    return max(0.0, h_d - binary_entropy(e) - e * log_rest)
