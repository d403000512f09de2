"""Counter-based innovation streams.

Every innovation ``xi_k`` is a pure function of ``(seed, k)``: index ``k`` is
mapped to a fixed position of a Philox4x64 stream keyed by the seed, so any
two requested ranges agree on their overlap and replicates need no shared
generator state.  Indices run over all integers (``|k| < 2**62``).

The ``bm-coupled`` model is tied to a Brownian grid at resolution ``n``:
``xi_k = z_k`` for ``k = 1..n`` and ``W(j/n) = (z_1 + ... + z_j) / sqrt(n)``.
Indices outside ``1..n`` (which a two-sided filter still needs) come from an
independent auxiliary stream via :meth:`InnovationModel.extended`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
from scipy.special import ndtri

from ._util import floor_nt
from .errors import CapacityError, DomainError

KINDS = ("gaussian", "uniform", "exponential", "martingale-difference", "bm-coupled")

_OFFSET = 2**62
_MAIN, _AUX = 0, 1
_SEED_MASK = 2**64 - 1


def _uniforms(seed: int, tag: int, first: int, last: int) -> np.ndarray:
    """Uniforms in (0, 1) at indices first..last of stream ``(seed, tag)``."""
    count = last - first + 1
    if count <= 0:
        return np.empty(0)
    if not (-_OFFSET <= first and last < _OFFSET):
        raise CapacityError(f"index range [{first}, {last}] outside supported capacity")
    q = first + _OFFSET
    block, skip = divmod(q, 4)
    key = np.array([int(seed) & _SEED_MASK, tag], dtype=np.uint64)
    bitgen = np.random.Philox(key=key, counter=np.array([block, 0, 0, 0], dtype=np.uint64))
    raw = bitgen.random_raw(count + skip)[skip:]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _gaussians(seed: int, tag: int, first: int, last: int) -> np.ndarray:
    return ndtri(_uniforms(seed, tag, first, last))


@dataclass(frozen=True)
class Stream:
    """Innovations ``xi_first .. xi_last`` with absolute indexing."""

    first: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def last(self) -> int:
        return self.first + self.values.size - 1

    def __len__(self) -> int:
        return self.values.size

    def at(self, k: int) -> float:
        if not self.first <= k <= self.last:
            raise IndexError(f"index {k} outside stream [{self.first}, {self.last}]")
        return float(self.values[k - self.first])

    def segment(self, a: int, b: int) -> np.ndarray:
        """Values at indices ``a..b`` inclusive."""
        if a < self.first or b > self.last:
            raise IndexError(f"segment [{a}, {b}] outside stream [{self.first}, {self.last}]")
        return self.values[a - self.first : b - self.first + 1]

    def to_rows(self):
        for i, v in enumerate(self.values):
            yield self.first + i, float(v)


@dataclass(frozen=True)
class BrownianGrid:
    n: int
    values: np.ndarray
    seed: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def at(self, t: float) -> float:
        return float(self.values[floor_nt(self.n, t)])


@dataclass(frozen=True)
class InnovationModel:
    """Mean-zero stationary innovation law plus master seed.

    ``param`` is sigma (``gaussian``), the half-width (``uniform``) or the rate
    (``exponential``, centered at its mean).  ``martingale-difference`` uses
    ``xi_k = eps_k * sign(eps_{k-1})`` with standard Gaussian ``eps``.
    ``bm-coupled`` needs the grid resolution ``n``.
    """

    kind: str
    seed: int
    param: float | None = None
    n: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown innovation kind {self.kind!r}")
        if not 0 <= int(self.seed) <= _SEED_MASK:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.kind in ("gaussian", "uniform", "exponential"):
            if self.param is None:
                object.__setattr__(self, "param", 1.0)
            if not self.param > 0:
                raise DomainError(f"{self.kind} parameter must be positive")
        if self.kind == "bm-coupled" and (self.n is None or self.n < 1):
            raise DomainError("bm-coupled model needs grid resolution n >= 1")

    def with_seed(self, seed: int) -> "InnovationModel":
        return InnovationModel(self.kind, seed, self.param, self.n)

    def with_n(self, n: int) -> "InnovationModel":
        return InnovationModel(self.kind, self.seed, self.param, n if self.kind == "bm-coupled" else self.n)

    @property
    def std(self) -> float:
        if self.kind == "gaussian":
            return float(self.param)
        if self.kind == "uniform":
            return float(self.param) / math.sqrt(3.0)
        if self.kind == "exponential":
            return 1.0 / float(self.param)
        return 1.0

    @property
    def mean_abs(self) -> float:
        """``E|xi_0|``, used to express coefficient truncation in data units."""
        if self.kind == "gaussian":
            return float(self.param) * math.sqrt(2.0 / math.pi)
        if self.kind == "uniform":
            return float(self.param) / 2.0
        if self.kind == "exponential":
            return 2.0 / (float(self.param) * math.e)
        return math.sqrt(2.0 / math.pi)

    def to_config(self) -> dict[str, Any]:
        out: dict[str, Any] = {"model.kind": self.kind}
        if self.param is not None:
            out["model.param"] = self.param
        return out

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any], seed: int, n: int | None = None) -> "InnovationModel":
        param = cfg.get("model.param")
        return cls(cfg["model.kind"], seed, None if param is None else float(param), n)

    def _draw(self, tag: int, first: int, last: int) -> np.ndarray:
        kind = self.kind
        if kind == "gaussian":
            return self.param * _gaussians(self.seed, tag, first, last)
        if kind == "uniform":
            return self.param * (2.0 * _uniforms(self.seed, tag, first, last) - 1.0)
        if kind == "exponential":
            u = _uniforms(self.seed, tag, first, last)
            return -np.log1p(-u) / self.param - 1.0 / self.param
        if kind == "martingale-difference":
            eps = _gaussians(self.seed, tag, first - 1, last)
            return eps[1:] * np.sign(eps[:-1])
        return _gaussians(self.seed, tag, first, last)

    def extended(self, first: int, last: int) -> Stream:
        """Stream over any range; for ``bm-coupled`` off-grid indices use the auxiliary stream."""
        if first > last:
            raise DomainError("first must not exceed last")
        if self.kind != "bm-coupled":
            return Stream(first, self._draw(_MAIN, first, last))
        vals = self._draw(_AUX, first, last)
        a, b = max(first, 1), min(last, self.n)
        if a <= b:
            vals[a - first : b - first + 1] = self._draw(_MAIN, a, b)
        return Stream(first, vals)


def sample_stream(model: InnovationModel, first: int, last: int) -> Stream:
    """``xi_first .. xi_last``; bit-identical for identical ``(model, index)``."""
    if first > last:
        raise DomainError("first must not exceed last")
    if model.kind == "bm-coupled" and (first < 1 or last > model.n):
        raise DomainError(f"bm-coupled stream is defined on 1..{model.n} only")
    return Stream(first, model._draw(_MAIN, first, last))


def brownian_grid(seed: int, n: int) -> BrownianGrid:
    """``W(k/n), k = 0..n`` built from the same Gaussians as ``bm-coupled(n)``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    z = _gaussians(seed, _MAIN, 1, n)
    w = np.empty(n + 1)
    w[0] = 0.0
    w[1:] = np.cumsum(z) / math.sqrt(n)
    return BrownianGrid(n, w, seed)


def max_abs(stream, b_n: float) -> float:
    """``max_j |xi_j| / b_n``."""
    if not b_n > 0:
        raise DomainError("b_n must be positive")
    vals = stream.values if isinstance(stream, Stream) else np.asarray(stream, dtype=np.float64)
    if vals.size == 0:
        raise DomainError("stream must be non-empty")
    return float(np.max(np.abs(vals)) / b_n)
