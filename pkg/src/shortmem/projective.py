"""Martingale approximation for causal linear processes with iid innovations.

Throughout, the filtration is the natural one, ``F_k = sigma(xi_j, j <= k)``.
For a linear functional of independent innovations, ``E(. | F_k)`` keeps the
terms in ``xi_j, j <= k`` and drops the rest, so projections, conditional
expectations and the coboundary corrector all have closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._util import floor_nt
from .coefficients import CoefficientSequence, tail_mass
from .errors import DomainError
from .innovations import InnovationModel, Stream
from .linproc import apply_filter, replicate_seeds
from .weights import Weight, resolve


def _require_causal(coeffs: CoefficientSequence) -> None:
    if not coeffs.is_causal:
        raise DomainError("projective decompositions need causal coefficients (a_i = 0 for i < 0)")


def _causal_taps(coeffs: CoefficientSequence, count: int) -> np.ndarray:
    """``a_0 .. a_{count-1}``, zero-padded past the window."""
    return np.array([coeffs[i] for i in range(count)])


@dataclass(frozen=True)
class ProjectionComponents:
    k: int
    components: np.ndarray
    M: int
    residual_bound: float
    value: float

    @property
    def residual(self) -> float:
        return abs(self.value - math.fsum(self.components))


def project(coeffs: CoefficientSequence, stream: Stream, k: int, M: int | None = None) -> ProjectionComponents:
    """``P_{k-i}(X_k) = a_i xi_{k-i}`` for ``i = 0..M``.

    ``value`` is ``X_k`` over the whole stored window; the reconstruction
    error is bounded by ``tail_mass(M) * max|xi|``.
    """
    _require_causal(coeffs)
    M = coeffs.hi if M is None else int(M)
    if M < 0:
        raise DomainError("M must be >= 0")
    taps = _causal_taps(coeffs, M + 1)
    xi = stream.segment(k - M, k)[::-1]
    comps = taps * xi
    full = _causal_taps(coeffs, coeffs.hi + 1)
    window = stream.segment(k - coeffs.hi, k)[::-1]
    value = math.fsum(full * window)
    bound = tail_mass(coeffs, M) * float(np.max(np.abs(window)))
    return ProjectionComponents(k, comps, M, bound, value)


def condition15_check(coeffs: CoefficientSequence, M: int, sigma: float = 1.0) -> float:
    """``||E(X_k | F_{k-M})||_2 = sigma sqrt(sum_{i>=M} a_i**2)`` (stored window)."""
    _require_causal(coeffs)
    if M < 0:
        raise DomainError("M must be >= 0")
    tail = coeffs.values[max(0, M - coeffs.lo):]
    return sigma * math.sqrt(math.fsum(tail * tail))


@dataclass(frozen=True)
class DoobCheck:
    i: int
    empirical: float
    se: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + 3.0 * self.se


def doob_check(coeffs: CoefficientSequence, model: InnovationModel, n: int, i: int, replicates: int) -> DoobCheck:
    """Monte Carlo ``E max_j |sum_{k<=j} a_i xi_{k-i}|**2`` against ``4 n p_i**2``.

    ``p_i = |a_i| * std(xi)``.  Replicate seeds derive from ``model.seed``.
    """
    _require_causal(coeffs)
    if replicates < 1:
        raise DomainError("replicates must be >= 1")
    a = coeffs[i]
    vals = np.empty(replicates)
    for rep, seed in enumerate(replicate_seeds(model.seed, n, replicates)):
        xi = model.with_seed(seed).extended(1 - i, n - i).values
        vals[rep] = np.max(np.abs(np.cumsum(a * xi))) ** 2
    se = float(vals.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    p = abs(a) * model.std
    return DoobCheck(i, float(vals.mean()), se, 4.0 * n * p * p)


@dataclass(frozen=True)
class CoboundaryDecomposition:
    """Arrays indexed by time: ``Y``, ``increments`` over 1..n; ``theta``, ``Q``, ``M`` over 0..n."""

    m: int
    n: int
    Y: np.ndarray
    theta: np.ndarray
    Q: np.ndarray
    M: np.ndarray
    increments: np.ndarray
    A_m: float

    @property
    def S_Y(self) -> np.ndarray:
        return np.cumsum(self.Y)

    def identity_residuals(self) -> np.ndarray:
        """``S_j^(Y) - M_j - Q_0 + Q_j`` for ``j = 1..n``."""
        return self.S_Y - self.M[1:] - self.Q[0] + self.Q[1:]

    def rows(self):
        for k in range(self.n + 1):
            y = float(self.Y[k - 1]) if k else float("nan")
            yield k, y, float(self.theta[k]), float(self.Q[k]), float(self.M[k])


def coboundary(coeffs: CoefficientSequence, stream: Stream, m: int, n: int) -> CoboundaryDecomposition:
    """Coboundary decomposition of the order-``m`` truncation.

    ``Y_k = sum_{i<m} a_i xi_{k-i}``, ``theta_k = sum_{j=k}^{k+m-1} E(Y_j|F_k)``,
    ``Q_k = theta_k - Y_k`` and martingale increments
    ``theta_k - E(theta_k|F_{k-1})`` with ``E(theta_k|F_{k-1}) = theta_{k-1} - Y_{k-1}``.
    ``stream`` must cover ``[1 - m, n]``.
    """
    _require_causal(coeffs)
    if m < 1:
        raise DomainError("m must be >= 1")
    if n < 1:
        raise DomainError("n must be >= 1")
    a = _causal_taps(coeffs, m)
    seg = stream.segment(1 - m, n)  # seg[q] = xi_{q + 1 - m}

    def lagged(l: int, start: int) -> np.ndarray:
        # xi_{k-l} for k = start..n
        return seg[start - l + m - 1 : n - l + m]

    Y_full = np.zeros(n + 1)  # Y_0 .. Y_n
    theta = np.zeros(n + 1)
    for l in range(m):
        Y_full += a[l] * lagged(l, 0)
    # E(Y_j | F_k) for j = k + d keeps taps i >= d: sum_{i=d}^{m-1} a_i xi_{j-i}
    for d in range(m):
        for i in range(d, m):
            theta += a[i] * lagged(i - d, 0)
    Q = theta - Y_full
    cond_prev = theta[:-1] - Y_full[:-1]
    incr = theta[1:] - cond_prev
    M = np.concatenate(([0.0], np.cumsum(incr)))
    return CoboundaryDecomposition(m, n, Y_full[1:], theta, Q, M, incr, float(np.sum(a)))


def quadratic_variation_path(coeffs: CoefficientSequence, stream: Stream, m: int, n: int, t: float) -> float:
    """``n**-1 sum_{j<=[nt]} (P_j(S_{j+m-1} - S_{j-1}))**2`` with ``P_j(...) = A_m xi_j``."""
    return weighted_quadratic_variation(coeffs, stream, "one", m, n, t)


def weighted_quadratic_variation(
    coeffs: CoefficientSequence, stream: Stream, g: Weight | str, m: int, n: int, t: float
) -> float:
    g = resolve(g)
    _require_causal(coeffs)
    N = floor_nt(n, t)
    if N == 0:
        return 0.0
    A_m = float(np.sum(_causal_taps(coeffs, m)))
    xi = stream.segment(1, N)
    w = g(np.arange(1, N + 1) / n)
    return math.fsum(w * w * (A_m * xi) ** 2) / n


def projection_increments(coeffs: CoefficientSequence, stream: Stream, m: int, n: int) -> np.ndarray:
    """``P_j(S_{j+m-1} - S_{j-1})`` for ``j = 1..n`` from the process itself.

    Builds ``S_{j+m-1} - S_{j-1}`` as a linear form in the innovations and
    keeps the ``xi_j`` loading, ``sum_{k=j}^{j+m-1} a_{k-j}``.
    """
    _require_causal(coeffs)
    out = np.empty(n)
    for j in range(1, n + 1):
        loading = math.fsum(coeffs[k - j] for k in range(j, j + m))
        out[j - 1] = loading * stream.at(j)
    return out


def abel_identity_residual(G_values: Sequence[float], psi_values: Sequence[float], center: float = 0.0) -> float:
    """``|sum G_j psi'_j - (G_N U_N + sum_{j<N} (G_j - G_{j+1}) U_j)|``.

    ``psi'_j = psi_j - center`` and ``U_j`` are its prefix sums.
    """
    G = np.asarray(G_values, dtype=np.float64)
    psi = np.asarray(psi_values, dtype=np.float64) - center
    if G.shape != psi.shape or G.ndim != 1 or G.size == 0:
        raise DomainError("G and psi must be non-empty sequences of equal length")
    U = np.cumsum(psi)
    lhs = math.fsum(G * psi)
    rhs = math.fsum(np.concatenate(([G[-1] * U[-1]], (G[:-1] - G[1:]) * U[:-1])))
    return abs(lhs - rhs)


def weighted_partial_sum(coeffs: CoefficientSequence, stream: Stream, g: Weight | str, n: int, t: float) -> float:
    """``n**-0.5 sum_{i<=[nt]} g(i/n) X_i``; ``stream`` must cover ``[1 - hi, n - lo]``."""
    g = resolve(g)
    N = floor_nt(n, t)
    if N == 0:
        return 0.0
    x = apply_filter(coeffs, stream, n)[:N]
    w = g(np.arange(1, N + 1) / n)
    return float(np.dot(w, x) / math.sqrt(n))
