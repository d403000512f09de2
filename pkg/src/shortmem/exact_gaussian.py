"""Exact second moments of partial sums of linear processes.

Two independent routes to ``Var(S_n)`` are provided:

* :func:`exact_variance` squares the innovation loadings
  ``c_i = sum_{k=1}^n a_{k-i}`` (prefix sums, compensated outer sum);
* :func:`variance_double_sum` sums ``gamma(i - j)`` over ``1 <= i, j <= n``.

For the block counterexample a third, exact rational route is available
(:func:`prop10_variance_exact`) that never materializes the coefficients, so
it reaches ``n = 4**30`` and beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._util import floor_nt
from .coefficients import CoefficientSequence, Prop10Blocks, autocovariances
from .errors import BoundViolation, CapacityError, DomainError
from .weights import Weight, resolve

VARIANCE_CAPACITY = 2**26
WORK_LIMIT = 2 * 10**9


def _loadings(coeffs: CoefficientSequence, n: int) -> np.ndarray:
    lo, hi = coeffs.lo, coeffs.hi
    count = n + hi - lo
    if count > VARIANCE_CAPACITY:
        raise CapacityError(f"n={n} with window {coeffs.values.size} exceeds capacity")
    prefix = np.concatenate(([0.0], np.cumsum(coeffs.values)))
    i = np.arange(1 - hi, n - lo + 1)
    a = np.maximum(1 - i, lo) - lo
    b = np.minimum(n - i, hi) - lo
    return prefix[b + 1] - prefix[a]


def exact_variance(coeffs: CoefficientSequence, n: int, sigma2: float = 1.0) -> float:
    """``sigma2 * sum_i (sum_{k=1}^n a_{k-i})**2`` over the stored window."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    c = _loadings(coeffs, n)
    return sigma2 * math.fsum(c * c)


def variance_double_sum(coeffs: CoefficientSequence, n: int, sigma2: float = 1.0) -> float:
    """``sum_{i,j<=n} gamma(i-j) = n gamma(0) + 2 sum_h (n-h) gamma(h)``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    gam = autocovariances(coeffs, sigma2, n - 1)
    h = np.arange(1, n)
    return math.fsum(np.concatenate(([n * gam[0]], 2.0 * (n - h) * gam[1:])))


def _sum_squares_linear(c0: Fraction, slope: Fraction, length: int) -> Fraction:
    # sum_{d=0}^{length-1} (c0 + slope d)^2
    s1 = Fraction(length * (length - 1), 2)
    s2 = Fraction((length - 1) * length * (2 * length - 1), 6)
    return length * c0 * c0 + 2 * c0 * slope * s1 + slope * slope * s2


def prop10_variance_exact(blocks: Prop10Blocks, n: int) -> Fraction:
    """Exact rational ``Var(S_n)`` for unit-variance innovations.

    The loading ``c_i = T(n-i) - T(-i)`` with ``T`` the cumulative block sum is
    piecewise linear in ``i``, with kinks only at ``n - 4**s`` and ``-4**s``;
    squares are summed segment by segment in closed form.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    end = blocks.support_end
    first, last = 1 - end, n - (blocks.n(1) + 1)
    if last < first:
        return Fraction(0)

    def c(i: int) -> Fraction:
        return blocks.cumulative(n - i) - blocks.cumulative(-i)

    kinks = {first, last + 1}
    for s in range(1, blocks.r_max + 2):
        for p in (n - blocks.n(s), -blocks.n(s)):
            if first < p <= last:
                kinks.add(p)
    pts = sorted(kinks)
    total = Fraction(0)
    for p, q in zip(pts, pts[1:]):
        c0 = c(p)
        length = q - p
        slope = c(p + 1) - c0 if length > 1 else Fraction(0)
        total += _sum_squares_linear(c0, slope, length)
    return total


@dataclass(frozen=True)
class VarianceProfile:
    grid: tuple[int, ...]
    variance: np.ndarray
    normalized: np.ndarray
    slopes: np.ndarray

    def rows(self):
        for k, n in enumerate(self.grid):
            slope = float(self.slopes[k - 1]) if k > 0 else float("nan")
            yield int(n), float(self.variance[k]), float(self.normalized[k]), slope


def _profile(grid: Sequence[int], var: Sequence[float]) -> VarianceProfile:
    g = tuple(int(n) for n in grid)
    v = np.asarray(var, dtype=np.float64)
    norm = v / np.array(g, dtype=np.float64)
    prof = VarianceProfile(g, v, norm, np.empty(0))
    return VarianceProfile(g, v, norm, regular_variation_slope(prof))


def variance_profile(coeffs: CoefficientSequence, grid: Sequence[int], sigma2: float = 1.0) -> VarianceProfile:
    grid = [int(n) for n in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must be strictly ascending")
    return _profile(grid, [exact_variance(coeffs, n, sigma2) for n in grid])


def prop10_variance_profile(blocks: Prop10Blocks, grid: Sequence[int]) -> VarianceProfile:
    """Same as :func:`variance_profile` but through the exact rational route."""
    return _profile(grid, [float(prop10_variance_exact(blocks, int(n))) for n in grid])


def regular_variation_slope(profile: VarianceProfile) -> np.ndarray:
    """``Delta log Var(S_n) / Delta log n`` between consecutive grid points."""
    if len(profile.grid) < 2:
        raise DomainError("need at least two grid points")
    logn = np.log(np.array(profile.grid, dtype=np.float64))
    logv = np.log(profile.variance)
    return np.diff(logv) / np.diff(logn)


# -- the block counterexample ----------------------------------------------


@dataclass(frozen=True)
class Prop10VarianceRecord:
    r: int
    n: int
    exact: float
    oracle: float
    defensible_bound: float
    paper_bound: float

    @property
    def exceeds_paper_bound(self) -> bool:
        return self.exact >= self.paper_bound

    @property
    def oracle_rel_error(self) -> float:
        return abs(self.exact - self.oracle) / abs(self.oracle)


def prop10_bounds(r: int) -> tuple[float, float]:
    """``(u_r**2 n**3 / 12, n**2 / (9 r**8))`` at ``n = 4**(r+1)``."""
    n = 4 ** (r + 1)
    u = Prop10Blocks.u(r)
    return float(u * u * n**3 / 12), float(Fraction(n * n, 9 * r**8))


def prop10_variance_report(source: CoefficientSequence | Prop10Blocks, r: int) -> Prop10VarianceRecord:
    """Exact ``Var(S_{n_{r+1}})`` against both lower bounds.

    With a materialized coefficient sequence the exact value comes from
    :func:`exact_variance` and the oracle from :func:`variance_double_sum`;
    with bare blocks both come from the rational route.  Raises
    :class:`BoundViolation` if the value falls below ``u_r**2 n**3 / 12``.
    """
    blocks = source.blocks if isinstance(source, CoefficientSequence) else source
    if blocks is None:
        raise DomainError("source is not a prop10 coefficient sequence")
    if not 1 <= r <= blocks.r_max - 1:
        raise DomainError(f"r must lie in 1..{blocks.r_max - 1}")
    n = blocks.n(r + 1)
    if isinstance(source, CoefficientSequence):
        exact = exact_variance(source, n)
        oracle = variance_double_sum(source, n)
    else:
        exact = oracle = float(prop10_variance_exact(blocks, n))
    defensible, paper = prop10_bounds(r)
    if exact < defensible:
        raise BoundViolation(f"Var(S_{n}) = {exact!r} below proven bound {defensible!r}")
    return Prop10VarianceRecord(r, n, exact, oracle, defensible, paper)


def projection_block_norm(blocks: Prop10Blocks, r: int, k: int) -> float:
    """``||P_i(X_k)||**2 = sum_{j=k+n_r+1}^{k+n_{r+1}} t_j**2`` for the block-``r`` index ``i``."""
    if not 1 <= r <= blocks.r_max:
        raise DomainError(f"r must lie in 1..{blocks.r_max}")
    if k < 0:
        raise DomainError("k must be >= 0")
    return float(blocks.square_mass_between(k + blocks.n(r), k + blocks.n(r + 1)))


@dataclass(frozen=True)
class ProjectionProfile:
    r: np.ndarray
    block_norm: np.ndarray
    block_bound: np.ndarray
    paper_bound: np.ndarray
    cumulative: np.ndarray

    def rows(self):
        for k in range(len(self.r)):
            yield (int(self.r[k]), float(self.block_norm[k]), float(self.block_bound[k]),
                   float(self.paper_bound[k]), float(self.cumulative[k]))


def projection_profile(blocks: Prop10Blocks, k: int = 0) -> ProjectionProfile:
    """Per-block projection norms at time ``k`` with the monotonicity bound."""
    rs = np.arange(1, blocks.r_max + 1)
    norms = np.array([projection_block_norm(blocks, int(r), k) for r in rs])
    bounds = np.array([projection_block_norm(blocks, int(r), 0) for r in rs])
    paper = rs.astype(np.float64) ** -8
    if np.any(norms > bounds):
        raise BoundViolation("projection norm exceeds its block bound")
    cum = np.array([math.fsum(np.sqrt(norms[: i + 1])) for i in range(len(rs))])
    return ProjectionProfile(rs, norms, bounds, paper, cum)


ZETA4 = math.pi**4 / 90


def projection_norm_sum(r_max: int | Prop10Blocks) -> float:
    """``sum_{r<=r_max} sqrt(||P(X_0)||_block_r**2)``, checked against ``sum r**-4``."""
    blocks = r_max if isinstance(r_max, Prop10Blocks) else Prop10Blocks(int(r_max))
    total = math.fsum(math.sqrt(projection_block_norm(blocks, r, 0)) for r in range(1, blocks.r_max + 1))
    if total > ZETA4:
        raise BoundViolation(f"projection norm sum {total!r} exceeds pi^4/90")
    return total


# -- weighted sums ----------------------------------------------------------


def weighted_exact_variance(
    coeffs: CoefficientSequence,
    g: Weight | str,
    n: int,
    t: float = 1.0,
    sigma2: float = 1.0,
    *,
    work_limit: int = WORK_LIMIT,
) -> float:
    """``Var(n**-0.5 sum_{i<=[nt]} g(i/n) X_i)`` from the banded autocovariance."""
    g = resolve(g)
    if n < 1:
        raise DomainError("n must be >= 1")
    N = floor_nt(n, t)
    if N == 0:
        return 0.0
    band = min(coeffs.values.size - 1, N - 1)
    if N * (band + 1) > work_limit:
        raise CapacityError(f"weighted variance work {N * (band + 1)} exceeds limit {work_limit}")
    v = g(np.arange(1, N + 1) / n)
    gam = autocovariances(coeffs, sigma2, band)
    terms = [gam[0] * np.dot(v, v)]
    terms += [2.0 * gam[h] * np.dot(v[:-h], v[h:]) for h in range(1, band + 1)]
    return math.fsum(terms) / n
