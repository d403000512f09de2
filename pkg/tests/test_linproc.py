from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortmem import coefficients as co
from shortmem.errors import CapacityError, DomainError, TailToleranceError
from shortmem.innovations import InnovationModel, Stream
from shortmem.linproc import (
    apply_filter,
    coupling_stat,
    derive_seed,
    filter,
    lemma2_truncation_check,
    lp_coupling_stat,
    partial_sum_path,
    replicate_seeds,
    sup_bm_distance,
)


def brute_filter(coeffs, stream, n):
    return np.array([math.fsum(coeffs[j] * stream.at(k - j) for j in range(coeffs.lo, coeffs.hi + 1)) for k in range(1, n + 1)])


@given(
    st.lists(st.floats(-2, 2), min_size=1, max_size=9),
    st.integers(-4, 4),
    st.integers(1, 40),
    st.integers(0, 2**32),
)
def test_apply_filter_matches_brute_force(vals, lo, n, seed):
    c = co.finite([(lo + i, v) for i, v in enumerate(vals)])
    s = InnovationModel("gaussian", seed).extended(1 - c.hi, n - c.lo)
    assert np.allclose(apply_filter(c, s, n), brute_filter(c, s, n), atol=1e-12)


def test_fft_route_matches_direct():
    c = co.geometric(0.99, window=700)
    s = InnovationModel("gaussian", 4).extended(1 - c.hi, 300 - c.lo)
    direct = sum(c[j] * s.segment(1 - j, 300 - j) for j in range(c.lo, c.hi + 1))
    assert np.allclose(apply_filter(c, s, 300), direct, atol=1e-10)


@pytest.mark.parametrize("n", [10, 1000])
def test_identity_filter_is_exact(n):
    m = InnovationModel("bm-coupled", 9, n=n)
    p = filter(co.identity(), m, n)
    assert coupling_stat(p, 1.0) == 0.0
    assert sup_bm_distance(p, 1.0) == 0.0
    assert np.array_equal(p.X, p.stream.segment(1, n))


def test_partial_sum_path_endpoints():
    p = filter(co.geometric(0.5), InnovationModel("gaussian", 1), 64)
    assert partial_sum_path(p, 0.0) == 0.0
    assert partial_sum_path(p, 1.0) == pytest.approx(p.S[-1] / 8.0)
    assert partial_sum_path(p, 0.5) == pytest.approx(p.S[31] / 8.0)


@given(st.floats(-3, 3).filter(lambda c: c != 0), st.integers(0, 1000))
def test_scalar_filter_couples_to_rounding(c, seed):
    n = 200
    m = InnovationModel("bm-coupled", seed, n=n)
    p = filter(co.finite({0: c}), m, n)
    scale = abs(c) * float(np.max(np.abs(p.S_xi))) / math.sqrt(n) + 1.0
    assert coupling_stat(p, c) <= 1e-13 * scale
    assert sup_bm_distance(p, c) <= 1e-13 * scale


def test_lp_stat_is_power():
    p = filter(co.geometric(0.5), InnovationModel("gaussian", 3), 100)
    A = co.total_sum(p.coeffs)
    assert lp_coupling_stat(p, A, 2.0) == pytest.approx(coupling_stat(p, A) ** 2)


def test_filter_errors():
    g = InnovationModel("gaussian", 1)
    with pytest.raises(TailToleranceError):
        filter(co.geometric(0.5, window=3), g, 10)
    with pytest.raises(DomainError):
        filter(co.identity(), InnovationModel("bm-coupled", 1, n=5), 10)
    with pytest.raises(CapacityError):
        filter(co.identity(), g, 2**27)
    with pytest.raises(DomainError):
        sup_bm_distance(filter(co.identity(), g, 10), 1.0)


def test_seed_derivation_is_stable():
    assert replicate_seeds(5, 100, 3) == [derive_seed(5, 100, r) for r in range(3)]
    assert len(set(replicate_seeds(5, 100, 50))) == 50
    assert derive_seed(5, 100, 0) != derive_seed(5, 101, 0)


def test_two_sided_stream_coverage():
    c = co.finite({-3: 1.0, 2: 1.0})
    m = InnovationModel("gaussian", 8)
    p = filter(c, m, 20)
    s = m.extended(-5, 30)
    assert np.allclose(p.X, [s.at(k + 3) + s.at(k - 2) for k in range(1, 21)])


@pytest.mark.parametrize("m", [0, 2, 5])
def test_lemma2_bound_holds(m):
    chk = lemma2_truncation_check(co.geometric(0.5), InnovationModel("gaussian", 2), 256, m, 50)
    assert chk.passed
    assert chk.bound == pytest.approx(2.0 * co.tail_mass(co.geometric(0.5), m) * chk.sup_mean_norm)
