"""Monte Carlo ensembles, convergence reports and small statistical tools."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .coefficients import DEFAULT_EPS_TAIL, CoefficientSequence, total_sum
from .errors import CellError, DomainError, QuadratureError
from .innovations import InnovationModel, max_abs
from .io import dumps
from .linproc import coupling_stat, derive_seed, filter, sup_bm_distance

STATS = ("coupling", "sup_bm", "max_innov", "terminal")

KS_CRITICAL = {0.05: 1.36, 0.01: 1.63}


@dataclass(frozen=True, eq=False)
class EnsembleConfig:
    coeffs: CoefficientSequence
    model: InnovationModel  # template; its seed is the master seed
    grid: tuple[int, ...]
    replicates: int
    p_list: tuple[float, ...] = (1.0, 2.0)
    eps_tail: float = DEFAULT_EPS_TAIL

    def __post_init__(self):
        grid = tuple(int(n) for n in self.grid)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "p_list", tuple(float(p) for p in self.p_list))
        if not grid or any(n < 1 for n in grid):
            raise DomainError("grid must be a non-empty list of positive integers")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("grid must be strictly ascending")
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if any(p < 1 for p in self.p_list):
            raise DomainError("every p must be >= 1")


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    grid: tuple[int, ...]
    replicates: int
    master_seed: int
    seeds: np.ndarray  # uint64, shape (len(grid), replicates)
    stats: dict[str, np.ndarray]  # each shape (len(grid), replicates)
    A: float
    p_list: tuple[float, ...] = (1.0, 2.0)

    def rows(self):
        for gi, n in enumerate(self.grid):
            for r in range(self.replicates):
                yield (n, r, int(self.seeds[gi, r])) + tuple(float(self.stats[s][gi, r]) for s in STATS)


def _cell(coeffs, model, n, seed, A, eps_tail):
    try:
        m = model.with_seed(seed).with_n(n)
        path = filter(coeffs, m, n, eps_tail=eps_tail)
        sup = sup_bm_distance(path, A) if path.grid is not None else float("nan")
        return (
            coupling_stat(path, A),
            sup,
            max_abs(path.stream.segment(1, n), path.b_n),
            float(path.S[-1] / path.b_n),
        )
    except Exception as exc:  # reported with cell coordinates by the caller
        return f"{type(exc).__name__}: {exc}"


def _run_chunk(args):
    coeffs, model, A, eps_tail, cells = args
    return [_cell(coeffs, model, n, seed, A, eps_tail) for n, seed in cells]


def run_ensemble(config: EnsembleConfig, workers: int = 1) -> PathEnsemble:
    """Run every ``(n, replicate)`` cell; results do not depend on ``workers``."""
    A = total_sum(config.coeffs)
    master = config.model.seed
    cells = [(n, derive_seed(master, n, r)) for n in config.grid for r in range(config.replicates)]
    if workers <= 1:
        results = _run_chunk((config.coeffs, config.model, A, config.eps_tail, cells))
    else:
        size = max(1, math.ceil(len(cells) / (4 * workers)))
        chunks = [cells[i : i + size] for i in range(0, len(cells), size)]
        jobs = [(config.coeffs, config.model, A, config.eps_tail, ch) for ch in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [res for part in pool.map(_run_chunk, jobs) for res in part]
    shape = (len(config.grid), config.replicates)
    stats = {s: np.empty(shape) for s in STATS}
    for idx, res in enumerate(results):
        gi, r = divmod(idx, config.replicates)
        if isinstance(res, str):
            raise CellError(res, n=config.grid[gi], replicate=r)
        for s, v in zip(STATS, res):
            stats[s][gi, r] = v
    seeds = np.array([seed for _, seed in cells], dtype=np.uint64).reshape(shape)
    return PathEnsemble(config.grid, config.replicates, master, seeds, stats, A, config.p_list)


# -- summaries --------------------------------------------------------------


def _summary(x: np.ndarray) -> dict[str, float]:
    return {"mean": float(np.mean(x)), "median": float(np.median(x)), "q90": float(np.quantile(x, 0.9))}


def trend_verdict(values: Sequence) -> bool:
    """Medians non-increasing across the grid and the last at most half the first.

    Entries may be per-n scalars (already medians) or per-n sample arrays.
    """
    if len(values) < 3:
        raise DomainError("trend verdict needs at least 3 grid points")
    med = [float(np.median(v)) for v in values]
    if any(math.isnan(v) for v in med):
        return False
    monotone = all(b <= a for a, b in zip(med, med[1:]))
    return monotone and med[-1] <= med[0] / 2.0


def lp_estimate(ensemble: PathEnsemble, p: float, stat: str = "sup_bm") -> np.ndarray:
    """Per-n Monte Carlo mean of ``stat**p``."""
    if p < 1:
        raise DomainError("p must be >= 1")
    return np.mean(ensemble.stats[stat] ** p, axis=1)


@dataclass
class CouplingReport:
    grid: tuple[int, ...]
    per_n: list[dict] = field(default_factory=list)
    verdicts: dict[str, bool | None] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"grid": list(self.grid), "per_n": self.per_n, "verdicts": self.verdicts}

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def csv_rows(self):
        for entry in self.per_n:
            for name in ("coupling", "sup_bm"):
                s = entry[name]
                yield entry["n"], name, s["mean"], s["median"], s["q90"]
            for key in sorted(entry["lp"]):
                yield entry["n"], key, entry["lp"][key], float("nan"), float("nan")


def coupling_report(ensemble: PathEnsemble) -> CouplingReport:
    rep = CouplingReport(ensemble.grid)
    has_bm = not np.any(np.isnan(ensemble.stats["sup_bm"]))
    lp = {}
    for p in ensemble.p_list:
        lp[f"coupling_L{p:g}"] = lp_estimate(ensemble, p, "coupling")
        lp[f"sup_bm_L{p:g}"] = lp_estimate(ensemble, p, "sup_bm")
    for gi, n in enumerate(ensemble.grid):
        rep.per_n.append(
            {
                "n": n,
                "coupling": _summary(ensemble.stats["coupling"][gi]),
                "sup_bm": _summary(ensemble.stats["sup_bm"][gi]),
                "max_innov": _summary(ensemble.stats["max_innov"][gi]),
                "lp": {k: float(v[gi]) for k, v in lp.items()},
            }
        )
    if len(ensemble.grid) >= 3:
        rep.verdicts["coupling_median"] = trend_verdict(list(ensemble.stats["coupling"]))
        rep.verdicts["sup_bm_median"] = trend_verdict(list(ensemble.stats["sup_bm"])) if has_bm else None
        for key, vals in lp.items():
            ok = has_bm or key.startswith("coupling")
            rep.verdicts[key] = trend_verdict(list(vals)) if ok else None
    return rep


# -- goodness of fit --------------------------------------------------------


def ks_statistic(samples: Sequence[float], mean: float, std: float) -> float:
    """``sup_x |F_N(x) - Phi((x - mean) / std)|`` evaluated at the order statistics."""
    if not std > 0:
        raise DomainError("std must be positive")
    x = np.sort(np.asarray(samples, dtype=np.float64))
    N = x.size
    if N == 0:
        raise DomainError("samples must be non-empty")
    cdf = ndtr((x - mean) / std)
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - cdf), np.max(cdf - (i - 1) / N)))


def ks_critical(N: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value ``c_alpha / sqrt(N)``."""
    return KS_CRITICAL[alpha] / math.sqrt(N)


# -- necessity diagnostics --------------------------------------------------


@dataclass(frozen=True)
class PositiveLaw:
    """Non-negative law with density and survival function on ``[0, upper]``."""

    name: str
    pdf: Callable[[float], float] | None
    sf: Callable[[float], float]
    upper: float = math.inf


def positive_law(model: InnovationModel | str) -> PositiveLaw:
    """Non-negative companion of an innovation law.

    ``exponential`` maps to the uncentered Exponential(rate), ``uniform`` to
    ``|xi|`` (uniform on ``[0, half-width]``); the string ``"zero"`` is the
    point mass at 0.
    """
    if isinstance(model, str):
        if model == "zero":
            return PositiveLaw("zero", None, lambda x: 0.0, 0.0)
        model = InnovationModel(model, 0)
    if model.kind == "exponential":
        lam = float(model.param)
        return PositiveLaw(f"exponential({lam!r})", lambda x: lam * math.exp(-lam * x), lambda x: math.exp(-lam * x))
    if model.kind == "uniform":
        w = float(model.param)
        return PositiveLaw(f"uniform(0,{w!r})", lambda x: 1.0 / w, lambda x: max(0.0, 1.0 - x / w), w)
    raise DomainError(f"no closed-form tail for innovation kind {model.kind!r}")


@dataclass(frozen=True)
class TruncatedMeanIdentity:
    a: float
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def _quad(f, lo, hi, tol=1e-12):
    if hi <= lo:
        return 0.0
    val, err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=500)
    if not err <= 1e-10 * max(1.0, abs(val)):
        raise QuadratureError(f"quadrature on [{lo}, {hi}] reached error {err:.3g}")
    return val


def _pieces(lo: float, hi: float, scale: float) -> list[tuple[float, float]]:
    # split long ranges geometrically so quad sees the bulk of the mass
    cuts = [lo]
    c = scale
    while c < hi:
        if c > lo:
            cuts.append(c)
        c *= 4.0
    cuts.append(hi)
    return list(zip(cuts, cuts[1:]))


def truncated_mean_identity(a: float, model: InnovationModel | str) -> TruncatedMeanIdentity:
    """Both sides of ``E g(a xi) = a int_0^{1/a} P(xi >= t) dt`` by quadrature.

    ``g(x) = x`` for ``x <= 1`` and ``1`` above.  The left side integrates
    ``g(a x)`` against the density, the right side the survival function.
    """
    if not a > 0:
        raise DomainError("a must be positive")
    law = positive_law(model)
    if law.pdf is None:
        return TruncatedMeanIdentity(a, 0.0, 0.0)
    cut = 1.0 / a
    inner_hi = min(cut, law.upper)
    lhs = sum(_quad(lambda x: a * x * law.pdf(x), lo, hi) for lo, hi in _pieces(0.0, inner_hi, 1.0))
    if cut < law.upper:
        upper = law.upper if math.isfinite(law.upper) else cut + 200.0 / law.pdf(0.0)
        lhs += sum(_quad(law.pdf, lo, hi) for lo, hi in _pieces(cut, upper, 1.0))
    rhs = a * sum(_quad(law.sf, lo, hi) for lo, hi in _pieces(0.0, inner_hi, 1.0))
    return TruncatedMeanIdentity(a, lhs, rhs)


def staircase_weight(x: float, a_seq: Sequence[float] | Callable[[int], float], terms: int) -> float:
    """``t_a(x) = sum_{j<=terms} a_j [x <= 1/a_j]`` with ``a_1`` first."""
    if x < 0:
        raise DomainError("x must be >= 0")
    a = np.array([a_seq(j) for j in range(1, terms + 1)] if callable(a_seq) else list(a_seq)[:terms], dtype=np.float64)
    if np.any(a <= 0):
        raise DomainError("a_seq must be positive")
    return math.fsum(a[x <= 1.0 / a])
