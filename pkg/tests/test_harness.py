from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortmem import coefficients as co
from shortmem import harness as hs
from shortmem.errors import CellError, DomainError
from shortmem.innovations import InnovationModel


def small_config(kind="bm-coupled", coeffs=None, replicates=6):
    coeffs = co.geometric(0.5) if coeffs is None else coeffs
    return hs.EnsembleConfig(coeffs, InnovationModel(kind, 17, n=64), (64, 128, 256), replicates)


def test_ensemble_shape_and_determinism():
    cfg = small_config()
    a = hs.run_ensemble(cfg)
    b = hs.run_ensemble(cfg, workers=3)
    assert a.stats["coupling"].shape == (3, 6)
    for s in hs.STATS:
        assert np.array_equal(a.stats[s], b.stats[s])
    assert np.array_equal(a.seeds, b.seeds)
    assert a.A == pytest.approx(3.0)


def test_sup_bm_nan_without_coupled_grid():
    ens = hs.run_ensemble(small_config("gaussian"))
    assert np.all(np.isnan(ens.stats["sup_bm"]))
    rep = hs.coupling_report(ens)
    assert rep.verdicts["sup_bm_median"] is None
    assert '"sup_bm_median": null' in rep.to_json()


def test_identity_report_is_zero():
    rep = hs.coupling_report(hs.run_ensemble(small_config(coeffs=co.identity())))
    for entry in rep.per_n:
        assert entry["coupling"]["mean"] == 0.0 and entry["sup_bm"]["q90"] == 0.0


def test_cell_error_carries_coordinates():
    cfg = hs.EnsembleConfig(co.geometric(0.5, window=2), InnovationModel("gaussian", 1), (10, 20), 2)
    with pytest.raises(CellError, match="n=10, replicate=0"):
        hs.run_ensemble(cfg)


def test_config_validation():
    with pytest.raises(DomainError):
        hs.EnsembleConfig(co.identity(), InnovationModel("gaussian", 1), (20, 10), 1)
    with pytest.raises(DomainError):
        hs.EnsembleConfig(co.identity(), InnovationModel("gaussian", 1), (10,), 0)


def test_trend_verdict():
    assert hs.trend_verdict([4.0, 3.0, 2.0])
    assert not hs.trend_verdict([4.0, 3.0, 2.5])
    assert not hs.trend_verdict([4.0, 1.0, 1.5])
    assert not hs.trend_verdict([4.0, math.nan, 1.0])
    with pytest.raises(DomainError):
        hs.trend_verdict([1.0, 0.1])


def test_lp_estimate():
    ens = hs.run_ensemble(small_config())
    assert np.allclose(hs.lp_estimate(ens, 2.0), np.mean(ens.stats["sup_bm"] ** 2, axis=1))
    with pytest.raises(DomainError):
        hs.lp_estimate(ens, 0.5)


def test_ks_statistic_against_scipy():
    from scipy import stats

    x = np.random.default_rng(1).normal(0.3, 2.0, size=500)
    assert hs.ks_statistic(x, 0.3, 2.0) == pytest.approx(stats.kstest(x, "norm", args=(0.3, 2.0)).statistic, rel=1e-12)
    assert hs.ks_critical(2000) == pytest.approx(1.63 / math.sqrt(2000))


@pytest.mark.parametrize("a", [0.1, 1.0, 10.0])
def test_truncated_mean_identity_exponential(a):
    rec = hs.truncated_mean_identity(a, InnovationModel("exponential", 0))
    assert rec.residual < 1e-10
    assert rec.lhs == pytest.approx(a * -math.expm1(-1 / a), abs=1e-10)


@given(st.floats(0.05, 20.0))
def test_truncated_mean_identity_uniform(a):
    rec = hs.truncated_mean_identity(a, InnovationModel("uniform", 0, 2.0))
    # |xi| uniform on [0, 2]: E min(a x, 1) in closed form
    c = min(1 / a, 2.0)
    closed = a * c * c / 4 + (2.0 - c) / 2
    assert rec.lhs == pytest.approx(closed, abs=1e-9)
    assert rec.residual < 1e-9


def test_zero_law():
    rec = hs.truncated_mean_identity(1.0, "zero")
    assert rec.lhs == rec.rhs == 0.0


def test_staircase_weight():
    assert hs.staircase_weight(3.0, lambda j: 2.0**-j, 50) == pytest.approx(0.5)
    assert hs.staircase_weight(0.0, [1.0, 0.5], 2) == 1.5
    with pytest.raises(DomainError):
        hs.staircase_weight(-1.0, [1.0], 1)
