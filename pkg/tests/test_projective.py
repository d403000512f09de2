from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortmem import coefficients as co
from shortmem import projective as pj
from shortmem.errors import DomainError
from shortmem.innovations import InnovationModel, Stream


def linear_forms(a, m, n):
    """Brute-force linear forms in xi_{1-m}..xi_n (column q <-> xi_{q+1-m})."""
    width = n + m
    col = lambda idx: idx + m - 1  # noqa: E731

    def Y(k):
        v = np.zeros(width)
        for i in range(m):
            v[col(k - i)] += a[i]
        return v

    def cond(v, k):
        # E(. | F_k) drops innovations with index > k
        out = v.copy()
        out[col(k) + 1 :] = 0.0
        return out

    Ys = [Y(k) for k in range(0, n + 1)]  # Y_0 needs xi_{1-m}.. and is in range
    theta = []
    for k in range(0, n + 1):
        v = np.zeros(width)
        for j in range(k, k + m):
            if j <= n:
                v += cond(Y(j) if j <= n else 0, k)
            else:
                # Y_j for j > n needs innovations past n; only the F_k part matters
                w = np.zeros(width + m)
                for i in range(m):
                    if j - i <= k:
                        w[col(j - i)] += a[i]
                v += w[:width]
        theta.append(v)
    incr = [theta[k] - cond(theta[k], k - 1) for k in range(1, n + 1)]
    return Ys, theta, incr


@given(
    st.lists(st.floats(-2, 2), min_size=1, max_size=5),
    st.integers(1, 15),
    st.integers(0, 10**6),
)
def test_coboundary_matches_brute_force_conditional_expectations(a, n, seed):
    m = len(a)
    c = co.finite(list(enumerate(a)))
    s = InnovationModel("gaussian", seed).extended(1 - m, n)
    dec = pj.coboundary(c, s, m, n)
    xi = s.values
    Ys, theta, incr = linear_forms(a, m, n)
    assert np.allclose(dec.Y, [Ys[k] @ xi for k in range(1, n + 1)], atol=1e-12)
    assert np.allclose(dec.theta, [t @ xi for t in theta], atol=1e-12)
    assert np.allclose(dec.increments, [d @ xi for d in incr], atol=1e-12)
    # the martingale increment loads only on xi_k, with weight A_m
    for k, d in enumerate(incr, start=1):
        expected = np.zeros_like(d)
        expected[k + m - 1] = sum(a)
        assert np.allclose(d, expected, atol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 5])
def test_coboundary_identity(m):
    n = 2000
    c = co.geometric(0.5, causal=True)
    s = InnovationModel("gaussian", m).extended(1 - m, n)
    dec = pj.coboundary(c, s, m, n)
    scale = np.max(np.abs(dec.S_Y))
    assert np.max(np.abs(dec.identity_residuals())) < 1e-10 * scale
    assert np.allclose(dec.increments, dec.A_m * s.segment(1, n), atol=1e-12)
    assert len(list(dec.rows())) == n + 1


def test_coboundary_requires_causal():
    with pytest.raises(DomainError):
        pj.coboundary(co.geometric(0.5), InnovationModel("gaussian", 1).extended(-5, 10), 2, 10)


def test_project_reconstructs_value():
    c = co.geometric(0.5, causal=True)
    s = InnovationModel("gaussian", 3).extended(-c.hi, 10)
    p = pj.project(c, s, 5, M=10)
    assert np.allclose(p.components, [c[i] * s.at(5 - i) for i in range(11)])
    assert p.residual <= p.residual_bound + 1e-12


def test_condition15_check():
    c = co.finite({0: 3.0, 1: 4.0})
    assert pj.condition15_check(c, 0) == pytest.approx(5.0)
    assert pj.condition15_check(c, 1, sigma=2.0) == pytest.approx(8.0)
    assert pj.condition15_check(c, 2) == 0.0


@pytest.mark.parametrize("i", [0, 1])
def test_doob_bound(i):
    chk = pj.doob_check(co.finite({0: 1.0, 1: 0.5}), InnovationModel("gaussian", 12), 200, i, 200)
    assert chk.passed
    assert chk.bound == pytest.approx(4 * 200 * (1.0 if i == 0 else 0.25))


def test_quadratic_variation_closed_form_matches_projection_route():
    c = co.finite({0: 1.0, 1: 0.7, 2: -0.2})
    n, m = 300, 2
    s = InnovationModel("gaussian", 5).extended(-5, n + 5)
    inc = pj.projection_increments(c, s, m, n)
    assert pj.quadratic_variation_path(c, s, m, n, 1.0) == pytest.approx(math.fsum(inc**2) / n, rel=1e-12)
    assert pj.weighted_quadratic_variation(c, s, "zero", m, n, 1.0) == 0.0


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=60), st.integers(0, 2**32), st.floats(-1, 1))
def test_abel_identity(G, seed, center):
    psi = np.random.default_rng(seed).normal(size=len(G))
    scale = 1.0 + float(np.sum(np.abs(G)) * np.sum(np.abs(psi - center)))
    assert pj.abel_identity_residual(G, psi, center) < 1e-12 * scale


def test_abel_shape_mismatch():
    with pytest.raises(DomainError):
        pj.abel_identity_residual([1.0, 2.0], [1.0])


def test_weighted_partial_sum_one_is_scaled_sum():
    c = co.geometric(0.5)
    n = 64
    s = InnovationModel("gaussian", 1).extended(1 - c.hi, n - c.lo)
    from shortmem.linproc import apply_filter

    x = apply_filter(c, s, n)
    assert pj.weighted_partial_sum(c, s, "one", n, 1.0) == pytest.approx(x.sum() / 8.0)
    assert pj.weighted_partial_sum(c, s, "linear", n, 0.5) == pytest.approx(np.dot(np.arange(1, 33) / n, x[:32]) / 8.0)
