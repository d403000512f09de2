"""Batch command line: ``shortmem COMMAND CONFIG``.

Configs are TOML with flat dotted keys (or the equivalent ``[coeffs]`` /
``[model]`` / ``[tol]`` sections)::

    seed = 7
    grid = [256, 1024, 4096, 16384]
    replicates = 200
    p_list = [1, 2]
    out_dir = "out/couple"
    coeffs.kind = "geometric"
    coeffs.param = 0.5
    model.kind = "bm-coupled"

Data files are deterministic; the wall-clock timestamp lives only in the
``<command>.meta.json`` sidecar.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import coefficients as co
from . import exact_gaussian as eg
from . import harness as hs
from . import projective as pj
from .errors import ConfigError, ShortMemError
from .innovations import KINDS as MODEL_KINDS
from .innovations import InnovationModel
from .io import dumps, write_csv, write_json
from .linproc import derive_seed, lemma2_truncation_check
from .weights import resolve

COMMANDS = ("simulate", "couple", "counterexample", "variance", "weighted", "coboundary", "diagnose")

KEYS = {
    "coeffs.kind", "coeffs.param", "coeffs.window",
    "model.kind", "model.param",
    "grid", "replicates", "p_list", "seed", "out_dir", "m", "weight",
    "tol.tail", "tol.identity", "tol.se",
}

MODEL_ALIASES = {
    "iid-gaussian": "gaussian",
    "iid-uniform-centered": "uniform",
    "iid-exponential-centered": "exponential",
}

DEFAULT_TOL = {"tol.tail": co.DEFAULT_EPS_TAIL, "tol.identity": 1e-10, "tol.se": 3.0}


@dataclass
class SimConfig:
    coeffs: co.CoeffDescriptor
    model_kind: str
    model_param: float | None
    grid: tuple[int, ...]
    replicates: int
    p_list: tuple[float, ...]
    seed: int
    out_dir: Path
    m: int = 1
    weight: str = "linear"
    tol: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOL))

    def coefficient_sequence(self) -> co.CoefficientSequence:
        return co.from_descriptor(self.coeffs, eps_tail=self.tol["tol.tail"])

    def model(self, seed: int | None = None, n: int | None = None) -> InnovationModel:
        seed = self.seed if seed is None else seed
        return InnovationModel(self.model_kind, seed, self.model_param, n)


def _flatten(data: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    out = {}
    for key, val in data.items():
        full = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flatten(val, full + "."))
        else:
            out[full] = val
    return out


def _line_of(exc: Exception) -> int | None:
    line = getattr(exc, "lineno", None)
    if line is None and "line " in str(exc):
        try:
            line = int(str(exc).split("line ")[1].split(",")[0].split(")")[0])
        except ValueError:
            line = None
    return line


def parse_config(text: str) -> SimConfig:
    """Parse and validate config text; unknown keys are rejected."""
    try:
        raw = _flatten(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        line = _line_of(exc)
        raise ConfigError(f"parse error at line {line}: {exc}", line=line) from None
    unknown = sorted(set(raw) - KEYS)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}", key=unknown[0])
    if "seed" not in raw:
        raise ConfigError("seed required", key="seed")
    for key in ("coeffs.kind", "model.kind", "grid"):
        if key not in raw:
            raise ConfigError(f"{key} required", key=key)

    def need(cond: bool, key: str, msg: str):
        if not cond:
            raise ConfigError(f"{key}: {msg}", key=key)

    seed = raw["seed"]
    need(isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2**64, "seed", "must be a 64-bit unsigned integer")
    grid = raw["grid"]
    grid = [grid] if isinstance(grid, int) else grid
    need(isinstance(grid, list) and len(grid) > 0 and all(isinstance(n, int) and n >= 1 for n in grid), "grid", "must be a non-empty list of positive integers")
    need(all(b > a for a, b in zip(grid, grid[1:])), "grid", "must be strictly ascending")
    replicates = raw.get("replicates", 1)
    need(isinstance(replicates, int) and replicates >= 1, "replicates", "must be an integer >= 1")
    p_list = raw.get("p_list", [1, 2])
    need(isinstance(p_list, list) and all(isinstance(p, (int, float)) and p >= 1 for p in p_list), "p_list", "entries must be >= 1")
    m = raw.get("m", 1)
    need(isinstance(m, int) and m >= 1, "m", "must be an integer >= 1")

    kind = raw["coeffs.kind"]
    need(kind in co.KINDS, "coeffs.kind", f"must be one of {', '.join(co.KINDS)}")
    try:
        desc = co.CoeffDescriptor.from_config(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"coeffs.param: {exc}", key="coeffs.param") from None
    need(kind in ("identity",) or desc.param is not None, "coeffs.param", f"required for kind {kind!r}")
    window = raw.get("coeffs.window")
    need(window is None or (isinstance(window, int) and window >= 0), "coeffs.window", "must be a non-negative integer")

    mkind = MODEL_ALIASES.get(raw["model.kind"], raw["model.kind"])
    need(mkind in MODEL_KINDS, "model.kind", f"must be one of {', '.join(MODEL_KINDS)}")
    mparam = raw.get("model.param")
    need(mparam is None or (isinstance(mparam, (int, float)) and mparam > 0), "model.param", "must be positive")

    tol = dict(DEFAULT_TOL)
    for key in DEFAULT_TOL:
        if key in raw:
            need(isinstance(raw[key], (int, float)) and raw[key] > 0, key, "must be positive")
            tol[key] = float(raw[key])
    weight = raw.get("weight", "linear")
    try:
        resolve(weight)
    except ShortMemError as exc:
        raise ConfigError(f"weight: {exc}", key="weight") from None

    cfg = SimConfig(
        coeffs=desc,
        model_kind=mkind,
        model_param=None if mparam is None else float(mparam),
        grid=tuple(grid),
        replicates=replicates,
        p_list=tuple(float(p) for p in p_list),
        seed=seed,
        out_dir=Path(raw.get("out_dir", "out")),
        m=m,
        weight=weight,
        tol=tol,
    )
    # descriptors must resolve
    try:
        cfg.model(n=grid[0])
        if kind != "prop10":
            cfg.coefficient_sequence()
    except ShortMemError as exc:
        raise ConfigError(f"invalid descriptor: {exc}", key="coeffs.kind" if "coeff" in str(exc) else "model.kind") from None
    return cfg


def load_config(path: str | Path) -> SimConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- commands ---------------------------------------------------------------


def _ensemble(cfg: SimConfig, workers: int) -> hs.PathEnsemble:
    conf = hs.EnsembleConfig(
        cfg.coefficient_sequence(), cfg.model(n=cfg.grid[0]), cfg.grid, cfg.replicates, cfg.p_list, cfg.tol["tol.tail"]
    )
    return hs.run_ensemble(conf, workers=workers)


ENSEMBLE_HEADER = ("n", "replicate", "seed") + hs.STATS


def cmd_simulate(cfg: SimConfig, out: Path, workers: int) -> list[Path]:
    ens = _ensemble(cfg, workers)
    return [write_csv(out / "ensemble.csv", ENSEMBLE_HEADER, ens.rows())]


def cmd_couple(cfg: SimConfig, out: Path, workers: int) -> list[Path]:
    rep = hs.coupling_report(_ensemble(cfg, workers))
    return [
        write_json(out / "coupling_report.json", rep.to_dict()),
        write_csv(out / "coupling_summary.csv", ("n", "stat", "mean", "median", "q90"), rep.csv_rows()),
    ]


def cmd_counterexample(cfg: SimConfig, out: Path, workers: int) -> list[Path]:
    if cfg.coeffs.kind != "prop10":
        raise ConfigError("counterexample needs coeffs.kind = 'prop10'", key="coeffs.kind")
    r_max = int(cfg.coeffs.param)
    blocks = co.Prop10Blocks(r_max)
    try:
        source: co.CoefficientSequence | co.Prop10Blocks = co.build_prop10(r_max)
    except ShortMemError:
        source = blocks  # too large to materialize: exact rational route only
    grid = [blocks.n(r) for r in range(1, r_max + 2)]
    prof = eg.prop10_variance_profile(blocks, grid)
    slope_to = {grid[k + 1]: float(s) for k, s in enumerate(prof.slopes)}
    rows = []
    for r in range(1, r_max):
        rec = eg.prop10_variance_report(source, r)
        rows.append((r, rec.n, rec.exact, rec.oracle, rec.oracle_rel_error, rec.defensible_bound,
                     rec.paper_bound, rec.exceeds_paper_bound, slope_to[rec.n]))
    proj = eg.projection_profile(blocks)
    return [
        write_csv(out / "prop10_variance.csv",
                  ("r", "n", "exact", "oracle", "oracle_rel_error", "defensible_bound", "paper_bound",
                   "exceeds_paper_bound", "slope"), rows),
        write_csv(out / "prop10_projection.csv",
                  ("r", "block_norm", "block_bound", "paper_bound", "cumulative_norm"), proj.rows()),
        write_csv(out / "prop10_slopes.csv", ("n_from", "n_to", "slope"),
                  ((a, b, float(s)) for a, b, s in zip(grid, grid[1:], prof.slopes))),
    ]


def cmd_variance(cfg: SimConfig, out: Path, workers: int) -> list[Path]:
    coeffs = cfg.coefficient_sequence()
    sigma2 = cfg.model(n=cfg.grid[0]).std ** 2
    prof = eg.variance_profile(coeffs, cfg.grid, sigma2)
    oracle = [eg.variance_double_sum(coeffs, n, sigma2) for n in cfg.grid]
    rows = (row + (o,) for row, o in zip(prof.rows(), oracle))
    return [write_csv(out / "variance_profile.csv", ("n", "variance", "variance_over_n", "slope", "oracle"), rows)]


def _sample_variance_se(x: np.ndarray) -> tuple[float, float]:
    var = float(np.var(x, ddof=1))
    dev2 = (x - x.mean()) ** 2
    return var, float(np.std(dev2, ddof=1) / math.sqrt(x.size))


def cmd_weighted(cfg: SimConfig, out: Path, workers: int) -> list[Path]:
    coeffs = cfg.coefficient_sequence()
    g = resolve(cfg.weight)
    rows = []
    for n in cfg.grid:
        vals = np.empty(cfg.replicates)
        for r in range(cfg.replicates):
            stream = cfg.model(derive_seed(cfg.seed, n, r), n).extended(1 - coeffs.hi, n - coeffs.lo)
            vals[r] = pj.weighted_partial_sum(coeffs, stream, g, n, 1.0)
        emp, se = _sample_variance_se(vals) if cfg.replicates > 1 else (float("nan"), float("nan"))
        exact = eg.weighted_exact_variance(coeffs, g, n, 1.0, cfg.model(n=n).std ** 2)
        rows.append((n, 1.0, g.name, emp, se, exact, (emp - exact) / se if se > 0 else float("nan")))
    return [write_csv(out / "weighted_variance.csv", ("n", "t", "weight", "empirical", "se", "exact", "z"), rows)]


def cmd_coboundary(cfg: SimConfig, out: Path, workers: int) -> list[Path]:
    coeffs = cfg.coefficient_sequence()
    n, m = cfg.grid[-1], cfg.m
    stream = cfg.model(n=n).extended(1 - m, n)
    dec = pj.coboundary(coeffs, stream, m, n)
    res = dec.identity_residuals()
    scale = float(np.max(np.abs(dec.S_Y)))
    incr_err = float(np.max(np.abs(dec.increments - dec.A_m * stream.segment(1, n))))
    summary = {
        "n": n, "m": m, "A_m": dec.A_m,
        "max_identity_residual": float(np.max(np.abs(res))),
        "scale": scale,
        "identity_ok": bool(np.max(np.abs(res)) < cfg.tol["tol.identity"] * scale),
        "max_increment_error": incr_err,
    }
    return [
        write_csv(out / "coboundary.csv", ("k", "Y", "theta", "Q", "M"), dec.rows()),
        write_json(out / "coboundary_residuals.json", summary),
    ]


def cmd_diagnose(cfg: SimConfig, out: Path, workers: int) -> list[Path]:
    rows = []
    for a in (0.1, 1.0, 10.0):
        rec = hs.truncated_mean_identity(a, InnovationModel("exponential", 0, 1.0))
        rows.append(("exponential(1.0)", a, rec.lhs, rec.rhs, rec.residual, a * -math.expm1(-1.0 / a)))
    coeffs = cfg.coefficient_sequence()
    n = cfg.grid[0]
    lemma = []
    for m in sorted({0, cfg.m, 2 * cfg.m}):
        chk = lemma2_truncation_check(coeffs, cfg.model(n=n), n, m, max(cfg.replicates, 2), slack_se=cfg.tol["tol.se"])
        lemma.append((n, m, chk.mean_gap, chk.se_gap, chk.bound, chk.sup_mean_norm, chk.passed))
    return [
        write_csv(out / "prop3_identity.csv", ("law", "a", "lhs", "rhs", "residual", "closed_form"), rows),
        write_csv(out / "lemma2_truncation.csv", ("n", "m", "mean_gap", "se_gap", "bound", "sup_mean_norm", "passed"), lemma),
    ]


HANDLERS = {
    "simulate": cmd_simulate,
    "couple": cmd_couple,
    "counterexample": cmd_counterexample,
    "variance": cmd_variance,
    "weighted": cmd_weighted,
    "coboundary": cmd_coboundary,
    "diagnose": cmd_diagnose,
}


def _error_payload(command: str, exc: BaseException) -> dict[str, Any]:
    payload = {"command": command, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["key"] = exc.key
        payload["line"] = exc.line
    return payload


def dispatch(command: str, config: SimConfig, *, workers: int = 1, stderr=None) -> int:
    """Run ``command``; returns the exit status (0 on success, 2 on any error)."""
    stderr = sys.stderr if stderr is None else stderr
    if command not in HANDLERS:
        stderr.write(dumps(_error_payload(command, ConfigError(f"unknown command {command!r}"))))
        return 2
    out = Path(config.out_dir)
    try:
        files = HANDLERS[command](config, out, workers)
    except (ShortMemError, ValueError, ArithmeticError) as exc:
        stderr.write(dumps(_error_payload(command, exc)))
        return 2
    write_json(out / f"{command}.meta.json", {
        "command": command,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "workers": workers,
        "files": [p.name for p in files],
    })
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="shortmem", description="Short-memory linear process experiments")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", type=Path, help="TOML config file")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for ensembles")
    parser.add_argument("--out-dir", type=Path, default=None, help="override out_dir from the config")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        sys.stderr.write(dumps(_error_payload(args.command, exc)))
        return 2
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    return dispatch(args.command, cfg, workers=args.workers)


if __name__ == "__main__":
    raise SystemExit(main())
