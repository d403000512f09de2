from __future__ import annotations

import math
from fractions import Fraction


def floor_nt(n: int, t: float) -> int:
    """Exact ``floor(n * t)`` for a float ``t`` in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    return math.floor(Fraction(t) * n)
