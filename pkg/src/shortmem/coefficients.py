"""Absolutely summable coefficient sequences for two-sided linear filters.

A :class:`CoefficientSequence` stores a finite window ``a_j, j = lo..hi`` and a
certified bound on the l1 mass that lies outside the window.  Four families
are supported:

* ``identity`` / ``finite``: finite support, zero tail.
* ``geometric``: ``a_j = rho**|j|`` (two-sided) and ``causal-geometric``:
  ``a_j = rho**j`` for ``j >= 0``.  Tails are closed-form geometric sums.
* ``polynomial``: ``a_j = max(1, |j|)**(-beta)`` with ``beta > 1``.  Tails are
  bounded with ``sum_{j>m} j**-beta <= m**(1-beta) / (beta-1)``.
* ``prop10``: the block sequence ``t_j = u_r`` on ``(4**r, 4**(r+1)]`` with
  ``u_r = 1 / (3 r**4 2**r)``, ``r = 1..r_max``; see :class:`Prop10Blocks`.

Sums over the window always run in ascending ``|j|`` with the negative index
first at equal ``|j|``, left to right, so results are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import CapacityError, DomainError, TailToleranceError

DEFAULT_CAPACITY = 2**24
DEFAULT_EPS_TAIL = 1e-10

KINDS = ("identity", "finite", "geometric", "causal-geometric", "polynomial", "prop10")


@dataclass(frozen=True)
class CoeffDescriptor:
    """Serializable recipe for a coefficient sequence.

    ``param`` is ``rho`` for the geometric kinds, ``beta`` for ``polynomial``,
    ``r_max`` for ``prop10`` and a tuple of ``(j, a_j)`` pairs for ``finite``.
    ``window`` optionally fixes the stored half-width instead of deriving it
    from the tail tolerance.
    """

    kind: str
    param: Any = None
    window: int | None = None

    def to_config(self) -> dict[str, Any]:
        out: dict[str, Any] = {"coeffs.kind": self.kind}
        if self.kind == "finite":
            out["coeffs.param"] = [[int(j), float(a)] for j, a in self.param]
        elif self.param is not None:
            out["coeffs.param"] = self.param
        if self.window is not None:
            out["coeffs.window"] = int(self.window)
        return out

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "CoeffDescriptor":
        kind = cfg["coeffs.kind"]
        param = cfg.get("coeffs.param")
        if kind == "finite" and param is not None:
            param = tuple((int(j), float(a)) for j, a in param)
        elif kind == "prop10" and param is not None:
            param = int(param)
        elif kind in ("geometric", "causal-geometric", "polynomial") and param is not None:
            param = float(param)
        return cls(kind, param, cfg.get("coeffs.window"))


@dataclass(frozen=True)
class Prop10Blocks:
    """Exact block structure of the non-regularly-varying counterexample.

    Blocks are ``(n_r, n_{r+1}]`` with ``n_r = 4**r``.  Index ``j = n_1 = 4``
    lies in no block and carries ``t_4 = 0``.
    """

    r_max: int

    def __post_init__(self):
        if self.r_max < 1:
            raise DomainError("r_max must be >= 1")

    @staticmethod
    def n(r: int) -> int:
        return 4**r

    @staticmethod
    def u(r: int) -> Fraction:
        return Fraction(1, 3 * r**4 * 2**r)

    @property
    def support_end(self) -> int:
        return 4 ** (self.r_max + 1)

    def t(self, j: int) -> Fraction:
        for r in range(1, self.r_max + 1):
            if self.n(r) < j <= self.n(r + 1):
                return self.u(r)
        return Fraction(0)

    def block_sum(self, r: int) -> Fraction:
        """``(n_{r+1} - n_r) u_r``, which simplifies to ``2**r / r**4``."""
        return (self.n(r + 1) - self.n(r)) * self.u(r)

    def _overlaps(self, lo: int, hi: int):
        for r in range(1, self.r_max + 1):
            a = max(lo, self.n(r))
            b = min(hi, self.n(r + 1))
            if b > a:
                yield r, b - a

    def mass_between(self, lo: int, hi: int) -> Fraction:
        """Exact ``sum_{lo < j <= hi} t_j``."""
        return sum((cnt * self.u(r) for r, cnt in self._overlaps(lo, hi)), Fraction(0))

    def square_mass_between(self, lo: int, hi: int) -> Fraction:
        """Exact ``sum_{lo < j <= hi} t_j**2``."""
        return sum((cnt * self.u(r) ** 2 for r, cnt in self._overlaps(lo, hi)), Fraction(0))

    def cumulative(self, m: int) -> Fraction:
        """Exact ``T(m) = sum_{j <= m} t_j``."""
        return self.mass_between(0, m)


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    values: np.ndarray
    lo: int
    descriptor: CoeffDescriptor
    tail: float = 0.0
    blocks: Prop10Blocks | None = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size == 0:
            raise DomainError("coefficient window must be a non-empty 1-d array")
        if not np.all(np.isfinite(vals)):
            raise DomainError("coefficients must be finite")
        if self.tail < 0:
            raise DomainError("tail mass must be non-negative")

    @property
    def hi(self) -> int:
        return self.lo + self.values.size - 1

    @property
    def is_causal(self) -> bool:
        return self.lo >= 0 or not np.any(self.values[: -self.lo] != 0.0)

    @property
    def is_finite_support(self) -> bool:
        return self.descriptor.kind in ("identity", "finite", "prop10")

    def __getitem__(self, j: int) -> float:
        if self.lo <= j <= self.hi:
            return float(self.values[j - self.lo])
        return 0.0

    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def ordered(self) -> tuple[np.ndarray, np.ndarray]:
        """Indices and values in the documented summation order."""
        idx = self.indices()
        order = np.lexsort((idx >= 0, np.abs(idx)))
        return idx[order], self.values[order]

    def stored_l1(self) -> float:
        _, v = self.ordered()
        return float(np.add.accumulate(np.abs(v))[-1])

    def l1_norm(self) -> float:
        return self.stored_l1() + self.tail

    def max_abs_index(self) -> int:
        return max(abs(self.lo), abs(self.hi))

    def restricted(self, m: int) -> "CoefficientSequence":
        """Copy keeping only ``|j| <= m`` (tail mass recomputed)."""
        idx = self.indices()
        vals = np.where(np.abs(idx) <= m, self.values, 0.0)
        return CoefficientSequence(vals, self.lo, self.descriptor, tail_mass(self, m), self.blocks)


def _sequential_sum(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    return float(np.add.accumulate(values)[-1])


# -- constructors -----------------------------------------------------------


def identity() -> CoefficientSequence:
    return CoefficientSequence(np.array([1.0]), 0, CoeffDescriptor("identity"))


def finite(pairs: Mapping[int, float] | Sequence[tuple[int, float]]) -> CoefficientSequence:
    """Finite-support sequence from ``{j: a_j}`` or ``[(j, a_j), ...]``."""
    items = sorted(dict(pairs).items())
    if not items:
        raise DomainError("finite coefficient sequence needs at least one entry")
    lo, hi = items[0][0], items[-1][0]
    vals = np.zeros(hi - lo + 1)
    for j, a in items:
        vals[j - lo] = a
    desc = CoeffDescriptor("finite", tuple((int(j), float(a)) for j, a in items))
    return CoefficientSequence(vals, lo, desc)


def _geometric_tail(rho: float, m: int, two_sided: bool) -> float:
    # sum_{j > m} rho**j, doubled for two sides
    one = rho ** (m + 1) / (1.0 - rho)
    return 2.0 * one if two_sided else one


def geometric(
    rho: float,
    *,
    causal: bool = False,
    window: int | None = None,
    eps_tail: float = DEFAULT_EPS_TAIL,
    capacity: int = DEFAULT_CAPACITY,
) -> CoefficientSequence:
    if not 0.0 < rho < 1.0:
        raise DomainError("geometric ratio must lie in (0, 1)")
    two_sided = not causal
    if window is None:
        window = max(0, math.ceil(math.log(eps_tail * (1.0 - rho) / (2.0 if two_sided else 1.0)) / math.log(rho)) - 1)
        while _geometric_tail(rho, window, two_sided) >= eps_tail:
            window += 1
    if window < 0:
        raise DomainError("window must be non-negative")
    size = window + 1 if causal else 2 * window + 1
    if size > capacity:
        raise CapacityError(f"geometric window {window} exceeds capacity {capacity}")
    lo = 0 if causal else -window
    idx = np.arange(lo, window + 1)
    vals = np.power(rho, np.abs(idx).astype(np.float64))
    kind = "causal-geometric" if causal else "geometric"
    return CoefficientSequence(vals, lo, CoeffDescriptor(kind, float(rho), int(window)), _geometric_tail(rho, window, two_sided))


def _polynomial_tail(beta: float, m: int) -> float:
    # 2 * sum_{j > m} j**-beta, integral bound; m = 0 adds the j = 1 term
    if m == 0:
        return 2.0 * (1.0 + 1.0 / (beta - 1.0))
    return 2.0 * m ** (1.0 - beta) / (beta - 1.0)


def polynomial(
    beta: float,
    *,
    window: int | None = None,
    eps_tail: float = DEFAULT_EPS_TAIL,
    capacity: int = DEFAULT_CAPACITY,
) -> CoefficientSequence:
    if not beta > 1.0:
        raise DomainError("polynomial exponent must exceed 1")
    if window is None:
        need = (eps_tail * (beta - 1.0) / 2.0) ** (1.0 / (1.0 - beta))
        if not math.isfinite(need) or 2 * need + 1 > capacity:
            raise TailToleranceError(
                f"polynomial beta={beta}: tail tolerance {eps_tail} needs window ~{need:.3g} beyond capacity {capacity}"
            )
        window = max(1, math.ceil(need))
        while _polynomial_tail(beta, window) >= eps_tail:
            window += 1
    if 2 * window + 1 > capacity:
        raise CapacityError(f"polynomial window {window} exceeds capacity {capacity}")
    idx = np.arange(-window, window + 1)
    vals = np.power(np.maximum(1, np.abs(idx)).astype(np.float64), -beta)
    return CoefficientSequence(vals, -window, CoeffDescriptor("polynomial", float(beta), int(window)), _polynomial_tail(beta, window))


def build_prop10(r_max: int, *, capacity: int = DEFAULT_CAPACITY) -> CoefficientSequence:
    """One-sided block sequence ``t_0..t_{4**(r_max+1)}``."""
    blocks = Prop10Blocks(int(r_max))
    end = blocks.support_end
    if end + 1 > capacity:
        raise CapacityError(f"prop10 with r_max={r_max} needs {end + 1} entries, capacity is {capacity}")
    vals = np.zeros(end + 1)
    for r in range(1, blocks.r_max + 1):
        vals[blocks.n(r) + 1 : blocks.n(r + 1) + 1] = 1.0 / (3 * r**4 * 2**r)
    return CoefficientSequence(vals, 0, CoeffDescriptor("prop10", int(r_max)), 0.0, blocks)


def from_descriptor(
    desc: CoeffDescriptor, *, eps_tail: float = DEFAULT_EPS_TAIL, capacity: int = DEFAULT_CAPACITY
) -> CoefficientSequence:
    kind = desc.kind
    if kind == "identity":
        return identity()
    if kind == "finite":
        if not desc.param:
            raise DomainError("finite coefficients need (j, a_j) pairs")
        return finite(desc.param)
    if kind in ("geometric", "causal-geometric"):
        return geometric(desc.param, causal=kind == "causal-geometric", window=desc.window, eps_tail=eps_tail, capacity=capacity)
    if kind == "polynomial":
        return polynomial(desc.param, window=desc.window, eps_tail=eps_tail, capacity=capacity)
    if kind == "prop10":
        return build_prop10(desc.param, capacity=capacity)
    raise DomainError(f"unknown coefficient kind {kind!r}")


# -- operations -------------------------------------------------------------


def total_sum(coeffs: CoefficientSequence) -> float:
    """``A = sum_j a_j``: stored window plus the closed-form tail when one exists.

    For ``polynomial`` there is no closed form and the stored sum is returned;
    use :func:`total_sum_interval` for the certified enclosure.
    """
    _, v = coeffs.ordered()
    stored = _sequential_sum(v)
    kind = coeffs.descriptor.kind
    if kind in ("geometric", "causal-geometric"):
        return stored + coeffs.tail
    return stored


def total_sum_interval(coeffs: CoefficientSequence) -> tuple[float, float]:
    a = total_sum(coeffs)
    if coeffs.descriptor.kind == "polynomial":
        return a - coeffs.tail, a + coeffs.tail
    return a, a


def tail_mass(coeffs: CoefficientSequence, m: int) -> float:
    """``sum_{|j| > m} |a_j|`` (exact, closed form, or an upper bound for polynomial)."""
    if m < 0:
        raise DomainError("m must be >= 0")
    kind = coeffs.descriptor.kind
    if kind in ("geometric", "causal-geometric"):
        return _geometric_tail(coeffs.descriptor.param, m, kind == "geometric")
    if kind == "prop10":
        b = coeffs.blocks
        return float(b.mass_between(m, b.support_end))
    idx, v = coeffs.ordered()
    stored = _sequential_sum(np.abs(v[np.abs(idx) > m]))
    if kind == "polynomial":
        window = coeffs.max_abs_index()
        if m >= window:
            return _polynomial_tail(coeffs.descriptor.param, m)
        return stored + coeffs.tail
    return stored


def autocovariance(coeffs: CoefficientSequence, sigma2: float, h: int) -> float:
    """``gamma(h) = sigma2 * sum_k a_k a_{k+h}`` over the stored window."""
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    h = abs(int(h))
    v = coeffs.values
    if h >= v.size:
        return 0.0
    return float(sigma2 * np.dot(v[: v.size - h], v[h:]))


def autocovariances(coeffs: CoefficientSequence, sigma2: float, max_lag: int | None = None) -> np.ndarray:
    """``gamma(0..max_lag)``; lags beyond the window are zero."""
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    v = coeffs.values
    full = np.correlate(v, v, mode="full")[v.size - 1 :] * sigma2
    if max_lag is None:
        return full
    out = np.zeros(max_lag + 1)
    k = min(max_lag + 1, full.size)
    out[:k] = full[:k]
    return out
