"""Linear filtering, partial-sum paths and coupling statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.signal import fftconvolve

from ._util import floor_nt
from .coefficients import DEFAULT_EPS_TAIL, CoefficientSequence, tail_mass
from .errors import CapacityError, DomainError, TailToleranceError
from .innovations import BrownianGrid, InnovationModel, Stream, brownian_grid

PATH_CAPACITY = 2**26
# direct accumulation below this many nonzero taps, FFT convolution above
DIRECT_TAPS = 512


def apply_filter(coeffs: CoefficientSequence, stream: Stream, n: int) -> np.ndarray:
    """``X_k = sum_j a_j xi_{k-j}`` for ``k = 1..n``.

    ``stream`` must cover ``[1 - hi, n - lo]``.  Short filters accumulate one
    tap at a time in the documented coefficient order, so a unit tap
    reproduces the innovations exactly.
    """
    lo, hi = coeffs.lo, coeffs.hi
    seg = stream.segment(1 - hi, n - lo)
    idx, vals = coeffs.ordered()
    nz = vals != 0.0
    if np.count_nonzero(nz) > DIRECT_TAPS:
        return fftconvolve(seg, coeffs.values, mode="valid")
    x = np.zeros(n)
    for j, a in zip(idx[nz], vals[nz]):
        off = hi - j
        x += a * seg[off : off + n]
    return x


@dataclass(frozen=True, eq=False)
class ProcessPath:
    n: int
    X: np.ndarray
    S: np.ndarray
    S_xi: np.ndarray
    b_n: float
    truncation_error: float
    coeffs: CoefficientSequence = field(repr=False)
    model: InnovationModel = field(repr=False)
    stream: Stream = field(repr=False)
    grid: BrownianGrid | None = field(default=None, repr=False)

    @property
    def provenance(self) -> dict[str, Any]:
        out = {"n": self.n, "b_n": self.b_n, "seed": self.model.seed}
        out.update(self.coeffs.descriptor.to_config())
        out.update(self.model.to_config())
        return out

    def scaled_path(self) -> np.ndarray:
        """``S_j / b_n`` for ``j = 0..n``."""
        out = np.empty(self.n + 1)
        out[0] = 0.0
        out[1:] = self.S / self.b_n
        return out

    def rows(self):
        for j in range(self.n):
            yield j + 1, float(self.X[j]), float(self.S[j]), float(self.S_xi[j])


def filter(
    coeffs: CoefficientSequence,
    model: InnovationModel,
    n: int,
    *,
    b_n: float | None = None,
    eps_tail: float = DEFAULT_EPS_TAIL,
) -> ProcessPath:
    """Build ``X_1..X_n`` and both partial-sum sequences from one seeded model."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if coeffs.tail >= eps_tail and coeffs.tail > 0:
        raise TailToleranceError(
            f"coefficient tail mass {coeffs.tail:.3g} is not below tolerance {eps_tail:.3g}; widen the window"
        )
    if n + coeffs.values.size > PATH_CAPACITY:
        raise CapacityError(f"path of length {n} with window {coeffs.values.size} exceeds capacity")
    if model.kind == "bm-coupled" and model.n != n:
        raise DomainError(f"bm-coupled model has grid n={model.n}, path needs n={n}")
    b_n = math.sqrt(n) if b_n is None else float(b_n)
    if not b_n > 0:
        raise DomainError("b_n must be positive")
    stream = model.extended(min(1 - coeffs.hi, 1), max(n - coeffs.lo, n))
    x = apply_filter(coeffs, stream, n)
    grid = brownian_grid(model.seed, n) if model.kind == "bm-coupled" else None
    return ProcessPath(
        n=n,
        X=x,
        S=np.cumsum(x),
        S_xi=np.cumsum(stream.segment(1, n)),
        b_n=b_n,
        truncation_error=coeffs.tail * model.mean_abs,
        coeffs=coeffs,
        model=model,
        stream=stream,
        grid=grid,
    )


def partial_sum_path(path: ProcessPath, t: float) -> float:
    """``S_[nt] / b_n`` with ``S_0 = 0``."""
    j = floor_nt(path.n, t)
    return 0.0 if j == 0 else float(path.S[j - 1] / path.b_n)


def coupling_stat(path: ProcessPath, A: float) -> float:
    """``max_j |S_j - A S_j^(xi)| / b_n``."""
    return float(np.max(np.abs(path.S - A * path.S_xi)) / path.b_n)


def lp_coupling_stat(path: ProcessPath, A: float, p: float) -> float:
    if p < 1:
        raise DomainError("p must be >= 1")
    return coupling_stat(path, A) ** p


def sup_bm_distance(path: ProcessPath, A: float, grid: BrownianGrid | None = None) -> float:
    """``max_{0<=j<=n} |S_j / sqrt(n) - A W(j/n)|`` against the coupled grid.

    Both paths are constant between grid points, so the grid maximum is the
    supremum over ``t`` in [0, 1].
    """
    grid = path.grid if grid is None else grid
    if grid is None:
        raise DomainError("sup_bm_distance needs a path built on a bm-coupled model")
    if grid.n != path.n:
        raise DomainError(f"grid resolution {grid.n} does not match path length {path.n}")
    scaled = path.S / math.sqrt(path.n)
    # j = 0 contributes |0 - A W(0)| = 0
    return float(np.max(np.abs(scaled - A * grid.values[1:])))


@dataclass(frozen=True)
class Lemma2Check:
    m: int
    mean_gap: float
    se_gap: float
    bound: float
    sup_mean_norm: float
    passed: bool


def _weighted_u_sum(a_idx, a_vals, cums, hi, n, b_n):
    out = np.zeros(n)
    for i, a in zip(a_idx, a_vals):
        off = hi - i
        out += a * (cums[off + 1 : off + n + 1] - cums[off])
    return out / b_n


def lemma2_truncation_check(
    coeffs: CoefficientSequence,
    model: InnovationModel,
    n: int,
    m: int,
    replicates: int,
    *,
    b_n: float | None = None,
    slack_se: float = 3.0,
) -> Lemma2Check:
    """Monte Carlo check of ``E||psi - psi_m|| <= 2 tail(m) sup_i E||U_i||``.

    ``psi(t) = S_[nt]/b_n = sum_i a_i U_i(t)`` with
    ``U_i(t) = b_n^-1 sum_{k<=[nt]} xi_{k-i}``; ``psi_m`` keeps ``|i| <= m``.
    The sup norm over t in [0, 1] is the maximum over the grid ``j/n``.
    """
    if replicates < 1:
        raise DomainError("replicates must be >= 1")
    b_n = math.sqrt(n) if b_n is None else float(b_n)
    lo, hi = coeffs.lo, coeffs.hi
    idx, vals = coeffs.ordered()
    keep = np.abs(idx) <= m
    gaps = np.empty(replicates)
    norms = np.zeros((replicates, idx.size))
    for rep, seed in enumerate(replicate_seeds(model.seed, n, replicates)):
        stream = model.with_seed(seed).extended(1 - hi, n - lo)
        cums = np.concatenate(([0.0], np.cumsum(stream.values)))
        for col, i in enumerate(idx):
            off = hi - i
            u = (cums[off + 1 : off + n + 1] - cums[off]) / b_n
            norms[rep, col] = np.max(np.abs(u))
        full = _weighted_u_sum(idx, vals, cums, hi, n, b_n)
        part = _weighted_u_sum(idx[keep], vals[keep], cums, hi, n, b_n)
        gaps[rep] = np.max(np.abs(full - part))
    sup_norm = float(np.max(norms.mean(axis=0)))
    bound = 2.0 * tail_mass(coeffs, m) * sup_norm
    mean_gap = float(gaps.mean())
    se = float(gaps.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    return Lemma2Check(m, mean_gap, se, bound, sup_norm, mean_gap <= bound + slack_se * se)


def replicate_seeds(master: int, n: int, replicates: int) -> list[int]:
    """Per-replicate seeds, a pure function of ``(master, n, replicate)``."""
    return [derive_seed(master, n, r) for r in range(replicates)]


def derive_seed(master: int, n: int, replicate: int) -> int:
    state = np.random.SeedSequence([int(master), int(n), int(replicate)]).generate_state(2, np.uint64)
    return int(state[0])
