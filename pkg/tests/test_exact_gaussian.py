from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortmem import coefficients as co
from shortmem import exact_gaussian as eg
from shortmem.errors import BoundViolation, DomainError
from shortmem.innovations import InnovationModel
from shortmem.linproc import filter


def brute_variance(coeffs, n):
    # sum_{i,k <= n} gamma(i - k), gamma from the raw coefficients
    def gamma(h):
        return math.fsum(coeffs[j] * coeffs[j + h] for j in range(coeffs.lo - abs(h), coeffs.hi + 1))

    return math.fsum(gamma(i - k) for i in range(1, n + 1) for k in range(1, n + 1))


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=8), st.integers(-3, 3), st.integers(1, 25))
def test_exact_variance_against_brute_force(vals, lo, n):
    c = co.finite([(lo + i, v) for i, v in enumerate(vals)])
    ref = brute_variance(c, n)
    assert eg.exact_variance(c, n) == pytest.approx(ref, rel=1e-10, abs=1e-10)
    assert eg.variance_double_sum(c, n) == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_identity_variance_is_n():
    for n in (1, 10, 1000):
        assert eg.exact_variance(co.identity(), n) == n


def test_geometric_variance_over_n_tends_to_A_squared():
    prof = eg.variance_profile(co.geometric(0.5), [10**2, 10**3, 10**4])
    assert prof.normalized[-1] == pytest.approx(9.0, rel=1e-3)
    assert np.all(np.abs(prof.slopes - 1.0) < 0.05)


def test_sigma2_scales():
    c = co.geometric(0.3)
    assert eg.exact_variance(c, 50, 2.5) == pytest.approx(2.5 * eg.exact_variance(c, 50))


def brute_prop10_variance(blocks, n):
    end = blocks.support_end
    t = [blocks.t(j) for j in range(end + 1)]
    total = Fraction(0)
    for i in range(1 - end, n + 1):
        c = sum((t[k - i] for k in range(1, n + 1) if 0 <= k - i <= end), Fraction(0))
        total += c * c
    return total


@pytest.mark.parametrize("n", [1, 3, 5, 16, 17, 40, 64, 100])
def test_prop10_rational_route_is_exact(n):
    b = co.Prop10Blocks(2)
    assert eg.prop10_variance_exact(b, n) == brute_prop10_variance(b, n)


FROZEN_PROP10 = {
    1: Fraction(3070382188427, 61917364224),
    2: Fraction(1432694189273, 5159780352),
    3: Fraction(5031398876263, 3869835264),
}


@pytest.mark.parametrize("r", [1, 2, 3])
def test_prop10_report_frozen_values(r):
    c = co.build_prop10(4)
    rec = eg.prop10_variance_report(c, r)
    assert eg.prop10_variance_exact(c.blocks, rec.n) == FROZEN_PROP10[r]
    assert rec.exact == pytest.approx(float(FROZEN_PROP10[r]), rel=1e-12)
    assert rec.oracle_rel_error < 1e-9
    assert rec.exact >= rec.defensible_bound and rec.exceeds_paper_bound


def test_prop10_report_domain():
    with pytest.raises(DomainError):
        eg.prop10_variance_report(co.Prop10Blocks(4), 4)
    with pytest.raises(DomainError):
        eg.prop10_variance_report(co.geometric(0.5), 1)


def test_prop10_bounds_values():
    d, p = eg.prop10_bounds(1)
    assert d == pytest.approx(16**3 / 36 / 12)
    assert p == pytest.approx(256 / 9)


def test_prop10_slopes_rise_at_large_r():
    b = co.Prop10Blocks(40)
    prof = eg.prop10_variance_profile(b, [4**r for r in range(19, 32)])
    assert np.max(prof.slopes) > 1.5
    assert np.max(prof.slopes) < 2.0


def test_projection_block_norm():
    b = co.Prop10Blocks(5)
    assert eg.projection_block_norm(b, 1, 0) == pytest.approx(1 / 3, abs=1e-12)
    for r in range(1, 6):
        assert eg.projection_block_norm(b, r, 0) == pytest.approx(1 / (3 * r**8), rel=1e-12)
        # later times see no more mass in the block than time 0
        assert eg.projection_block_norm(b, r, 7) <= eg.projection_block_norm(b, r, 0)


def test_projection_norm_sum_formula():
    assert eg.projection_norm_sum(1) == pytest.approx(3**-0.5, rel=1e-12)
    assert eg.projection_norm_sum(3) == pytest.approx(3**-0.5 * (1 + 2**-4 + 3**-4), rel=1e-12)
    assert eg.projection_norm_sum(20) <= eg.ZETA4


def test_projection_sum_tail_bound():
    # successive partial sums differ by 1/(sqrt(3) r^4); tail beyond 20 < 1/(3 sqrt(3) 20^3)
    s20 = eg.projection_norm_sum(20)
    s40 = eg.projection_norm_sum(40)
    assert 0 < s40 - s20 < 1 / (3 * math.sqrt(3) * 20**3)


def test_projection_profile_rows():
    prof = eg.projection_profile(co.Prop10Blocks(4), k=3)
    rows = list(prof.rows())
    assert [r[0] for r in rows] == [1, 2, 3, 4]
    assert all(r[1] <= r[2] for r in rows)


def test_weighted_exact_variance_identity_linear():
    assert eg.weighted_exact_variance(co.identity(), "linear", 10**4) == pytest.approx(1 / 3, abs=1e-3)
    assert eg.weighted_exact_variance(co.identity(), "one", 100) == pytest.approx(1.0)
    assert eg.weighted_exact_variance(co.identity(), "linear", 100, t=0.0) == 0.0


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=6), st.integers(1, 30))
def test_weighted_one_matches_exact_variance(vals, n):
    c = co.finite(list(enumerate(vals)))
    assert eg.weighted_exact_variance(c, "one", n) == pytest.approx(eg.exact_variance(c, n) / n, rel=1e-9, abs=1e-12)


def test_exact_variance_matches_simulation():
    c = co.geometric(0.5)
    n = 128
    vals = [filter(c, InnovationModel("gaussian", s), n).S[-1] for s in range(3000)]
    exact = eg.exact_variance(c, n)
    se = exact * math.sqrt(2 / 3000)
    assert abs(np.var(vals, ddof=1) - exact) < 4 * se


def test_bound_violation_is_assertion():
    assert issubclass(BoundViolation, AssertionError)
