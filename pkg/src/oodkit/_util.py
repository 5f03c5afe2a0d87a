"""Small shared numeric helpers."""

from __future__ import annotations

import math

# Absolute slack when a rank product like p * n should be an exact integer
# but float rounding nudged it just above one.
_RANK_EPS = 1e-9


def ceil_rank(x: float) -> int:
    """ceil(x) robust to float round-off on exact-integer products."""
    return int(math.ceil(x - _RANK_EPS))
