import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varcap.grid import (RegionMask, ball_mask, build_grid, empty_mask, full_mask, halfspace_mask,
                         sample_exponent)
from varcap.thinness import (CondenserCache, classify_thinness, max_scale, wiener_integral,
                             wiener_ratio, wiener_sum)

LINE = build_grid(1, (-2.0,), (4.0,), 1025)
P_LINE = sample_exponent(2.0, LINE)
ORIGIN = (0.0,)


@pytest.fixture(scope="module")
def cache():
    return CondenserCache(P_LINE)


def test_max_scale():
    # h = 1/256: B(0, 2**-i) spans at least four cells up to i = 7
    assert max_scale(LINE) == 7
    assert max_scale(build_grid(2, (-2, -2), (4, 4), 129)) == 4


def test_empty_set_is_thin(cache):
    prof = classify_thinness(empty_mask(LINE), ORIGIN, P_LINE, i_max=5, cache=cache)
    assert prof.wiener_sum == 0.0 and prof.integral_estimate == 0.0
    assert prof.verdict == "thin"
    assert math.isnan(prof.sum_integral_ratio())


def test_full_domain(cache):
    prof = classify_thinness(full_mask(LINE), ORIGIN, P_LINE, i_max=5, cache=cache)
    assert np.allclose(prof.ratios, 1.0, rtol=1e-12)
    assert prof.wiener_sum == pytest.approx(6.0)
    # ratio 1 at every radius: the integral is log(1 / r_min) exactly
    assert prof.integral_estimate == pytest.approx(math.log(1 / prof.integral_rmin), rel=1e-12)
    assert prof.sum_integral_ratio() == pytest.approx(1 / math.log(2), rel=1e-12)
    assert prof.verdict == "thick"


def test_half_line_scale_invariant(cache):
    A = halfspace_mask(LINE, ORIGIN, (1.0,))
    ratios = [wiener_ratio(A, ORIGIN, 2.0 ** -i, P_LINE, cache=cache) for i in range(6)]
    assert max(ratios) / min(ratios) < 1.05
    assert classify_thinness(A, ORIGIN, P_LINE, i_max=6, cache=cache).verdict == "thick"


def test_far_set_is_thin(cache):
    A = ball_mask(LINE, (0.6,), 0.1)
    prof = classify_thinness(A, ORIGIN, P_LINE, i_max=6, cache=cache)
    assert prof.verdict == "thin"
    assert prof.increments[-1] == 0.0


def test_half_plane_ratio_scale_invariance():
    g = build_grid(2, (-2.0, -2.0), (4.0, 4.0), 129)
    p = sample_exponent(2.0, g)
    c = CondenserCache(p)
    A = halfspace_mask(g, (0.0, 0.0), (1.0, 0.0))
    ratios = [wiener_ratio(A, (0.0, 0.0), 2.0 ** -i, p, cache=c) for i in range(3)]
    assert 0.6 < min(ratios) and max(ratios) < 0.9
    assert max(ratios) / min(ratios) < 1.1


def test_integral_bounds():
    with pytest.raises(ValueError, match="two cells"):
        wiener_integral(full_mask(LINE), ORIGIN, P_LINE, r_min=LINE.h)
    with pytest.raises(ValueError):
        wiener_sum(full_mask(LINE), ORIGIN, P_LINE, i_max=max_scale(LINE) + 1)


def test_cache_reuses_solves(cache):
    n0 = len(cache)
    A = halfspace_mask(LINE, ORIGIN, (1.0,))
    wiener_sum(A, ORIGIN, P_LINE, i_max=3, cache=cache)
    n1 = len(cache)
    wiener_sum(A, ORIGIN, P_LINE, i_max=3, cache=cache)
    assert len(cache) == n1 >= n0


def test_profile_csv():
    prof = wiener_sum(full_mask(LINE), ORIGIN, P_LINE, i_max=2)
    lines = prof.to_csv().splitlines()
    assert lines[0] == "i,r_i,cap_num,cap_den,ratio,increment,partial_sum"
    assert len(lines) == 4 and lines[1].startswith("0,1.0,")
    assert "verdict=" in prof.verdict_record()


SMALL = build_grid(1, (-2.0,), (4.0,), 257)
P_SMALL = sample_exponent(2.0, SMALL)
SMALL_CACHE = CondenserCache(P_SMALL)


def _random_set(seed, density):
    r = np.random.default_rng(seed)
    return RegionMask(SMALL, r.random(SMALL.shape) < density, "arbitrary")


@settings(max_examples=15)
@given(st.integers(0, 10**6), st.floats(0.05, 0.6))
def test_profile_invariants(seed, density):
    A = _random_set(seed, density)
    prof = wiener_sum(A, (0.0,), P_SMALL, i_max=4, cache=SMALL_CACHE)
    assert np.all(prof.ratios >= 0)
    assert np.all(prof.ratios <= 1 + prof.ratio_eps + 1e-12)
    assert np.all(np.diff(prof.partial_sums) >= 0)


@settings(max_examples=15)
@given(st.integers(0, 10**6), st.floats(0.05, 0.4))
def test_ratio_monotone_in_set(seed, density):
    A = _random_set(seed, density)
    B = A | _random_set(seed + 1, density)
    a = wiener_sum(A, (0.0,), P_SMALL, i_max=4, cache=SMALL_CACHE)
    b = wiener_sum(B, (0.0,), P_SMALL, i_max=4, cache=SMALL_CACHE)
    assert np.all(a.ratios <= b.ratios + a.ratio_eps + b.ratio_eps)


@settings(max_examples=10)
@given(st.integers(0, 10**6), st.floats(0.05, 0.4))
def test_union_evidence_subadditive(seed, density):
    # p = 2 makes the increment exponent 1, so ratio subadditivity carries to partial sums
    A, B = _random_set(seed, density), _random_set(seed + 3, density)
    a, b, u = (wiener_sum(S, (0.0,), P_SMALL, i_max=4, cache=SMALL_CACHE) for S in (A, B, A | B))
    tol = a.ratio_eps + b.ratio_eps + u.ratio_eps
    assert np.all(u.ratios <= a.ratios + b.ratios + tol)
    assert np.all(u.partial_sums <= a.partial_sums + b.partial_sums + np.cumsum(tol))


def test_tail_ending_in_zero_is_thin():
    from varcap.thinness import _tail_verdict
    assert _tail_verdict([0.385, 0.425, 0.0, 0.0, 0.0])[0] == "thin"
    assert _tail_verdict([0.4, 0.0, 0.3, 0.2, 0.1])[0] == "inconclusive"
