"""Named weight functions on [0, 1] for weighted partial sums.

Weights are resolved from short names: ``one``, ``zero``, ``linear`` (``g(x) =
x``), ``const:<c>`` and ``pl:<x0>:<y0>,<x1>:<y1>,...`` for a piecewise-linear
function through the given knots.  The Lipschitz constant is metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Weight:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    lipschitz: float

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=np.float64))


def constant(c: float) -> Weight:
    c = float(c)
    return Weight(f"const:{c!r}", lambda x: np.full(np.shape(x), c), 0.0)


def piecewise_linear(knots: list[tuple[float, float]]) -> Weight:
    knots = sorted((float(a), float(b)) for a, b in knots)
    if len(knots) < 2:
        raise DomainError("piecewise-linear weight needs at least two knots")
    xs = np.array([k[0] for k in knots])
    ys = np.array([k[1] for k in knots])
    if np.any(np.diff(xs) <= 0):
        raise DomainError("piecewise-linear knots must have distinct abscissae")
    lip = float(np.max(np.abs(np.diff(ys) / np.diff(xs))))
    name = "pl:" + ",".join(f"{a!r}:{b!r}" for a, b in knots)
    return Weight(name, lambda x: np.interp(x, xs, ys), lip)


ONE = Weight("one", lambda x: np.ones(np.shape(x)), 0.0)
ZERO = Weight("zero", lambda x: np.zeros(np.shape(x)), 0.0)
LINEAR = Weight("linear", lambda x: np.array(x, dtype=np.float64), 1.0)

_REGISTRY = {w.name: w for w in (ONE, ZERO, LINEAR)}


def resolve(spec: str | Weight) -> Weight:
    if isinstance(spec, Weight):
        return spec
    spec = spec.strip()
    if spec in _REGISTRY:
        return _REGISTRY[spec]
    try:
        if spec.startswith("const:"):
            return constant(float(spec[6:]))
        if spec.startswith("pl:"):
            pts = [tuple(map(float, part.split(":"))) for part in spec[3:].split(",")]
            return piecewise_linear(pts)
    except ValueError as exc:
        raise DomainError(f"cannot parse weight {spec!r}: {exc}") from None
    raise DomainError(f"unknown weight {spec!r}")
