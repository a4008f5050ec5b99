"""The d=1 joint-distribution engine against the enumeration oracle."""

from fractions import Fraction
from math import comb

import pytest

from walkrange.errors import NonUnit, UnsupportedDepth
from walkrange.genfun import (Engine, joint_counts, range_count_series,
                              range_distribution, range_moment, vertex_factor,
                              vertex_factor_series_form)
from walkrange.pseries import EXACT, TruncatedSeries, base_series
from walkrange.walks import (local_time_distribution,
                             local_time_probabilities, oracle_counts,
                             oracle_mixed_moment)


@pytest.fixture(scope="module")
def eng12():
    return Engine(12, backend=EXACT)


# -- building blocks ---------------------------------------------------------

def test_pair_block_example(eng12):
    g = eng12.pair_block(1, 1)
    assert g.coeffs[:5] == [0, 0, 1, 0, 1]
    # z d/dz at z^2, z^4 counts walks with two singlepoints
    zd = g.zddz()
    assert (zd.coeffs[2], zd.coeffs[4]) == (2, 4)


def test_pair_block_low_order_vanishing(eng12):
    g = eng12.pair_block(1, 2)
    assert g.coeffs[:4] == [0, 0, 0, 0]


def test_pair_block_symmetry(eng12):
    assert eng12.pair_block(2, 1) == eng12.pair_block(1, 2)
    assert eng12.pair_block(3, 1) == eng12.pair_block(1, 3)


def test_chain_block_first_values(eng12):
    h11 = eng12.chain_block(1, 1)
    assert h11.coeffs[2] == 1
    # leading order of the (2,4) block is a single z^4 (recomputed golden)
    h24 = eng12.chain_block(2, 4)
    assert h24.coeffs[:6] == [0, 0, 0, 0, 1, 0]
    assert h24.coeffs[6] == 0


def test_chain_block_leading_order_bound(eng12):
    for i, j in ((1, 3), (2, 5), (1, 4)):
        h = eng12.chain_block(i, j)
        assert all(h.coeffs[m] == 0 for m in range(min(2 * (j - i), 13)))


def test_chain_equals_pair_at_order_two(eng12):
    # the k = 2 coincidence: the (1,2) chain block is the (1,1) pair block
    assert eng12.chain_block(1, 2) == eng12.pair_block(1, 1)


def test_term_plain_counts_all_walks(eng12):
    zd = eng12.term_plain().zddz()
    assert [zd.coeffs[2 * n] for n in range(1, 7)] == \
        [comb(2 * n, n) for n in range(1, 7)]


def test_term_single_first_moments_match_oracle(eng12):
    for k in (1, 2, 3):
        zd = eng12.term_single(k).zddz()
        for n in range(1, 6):
            want = oracle_mixed_moment(n, 1, {k: 1})
            assert zd.coeffs[2 * n] == want, (k, n)


def test_term_pair_collapses_for_singlepoints(eng12):
    assert eng12.term_pair(1, 1) == eng12.pair_block(1, 1)


def test_term_pair_moments_match_oracle(eng12):
    for (k1, k2) in ((1, 1), (1, 2), (2, 2), (1, 3), (2, 3)):
        s = eng12.term_pair(k1, k2).scaled(2 - (1 if k1 == k2 else 0)).zddz()
        for n in range(1, 6):
            spec = {}
            for k in (k1, k2):
                spec[k] = spec.get(k, 0) + 1
            assert s.coeffs[2 * n] == oracle_mixed_moment(n, 1, spec)


# -- transfer operator structure ----------------------------------------------

def test_transfer_operator_row_vanishing(eng12):
    for k in (2, 3, 4):
        q = eng12.transfer_operator(k, kmax=5)
        for (p, _qq) in q.entries:
            assert p[0] + p[1] < k - 1


def test_transfer_operator_no_constant_term(eng12):
    q = eng12.transfer_operator(3)
    for s in q.entries.values():
        assert s.coeffs[0] == 0 and s.coeffs[1] == 0


def test_transfer_operator_k2_entry(eng12):
    q = eng12.transfer_operator(2)
    assert set(q.entries) == {((0, 0), (0, 0))}
    assert q.entries[((0, 0), (0, 0))] == eng12.chain_block(1, 2)


def test_transfer_powers_vanish_on_excluded_rows(eng12):
    k = 3
    q = eng12.transfer_operator(k, kmax=5)
    vec = {p: TruncatedSeries.one(12, EXACT) for p in q.indices}
    out = q.apply(vec)
    for _ in range(3):
        for p, s in out.items():
            if p[0] + p[1] >= k - 1:
                assert s.is_zero()
        out = q.apply(out)


def test_left_vector_lives_at_t_zero(eng12):
    for k in (1, 2, 3):
        lv = eng12.left_vector(k, kmax=4)
        assert all(t == 0 for (_r, t) in lv)


def test_right_vector_zero_for_first_argument_one(eng12):
    assert eng12.right_vector(1, 2, kmax=4) == {}


# -- joint generating function -------------------------------------------------

def test_joint_genfun_unmarked_collapse(eng12):
    gf = eng12.joint_genfun((2,), bounds=(0,))
    assert gf.coefficient((0,)) == eng12.cache.h0


def test_joint_genfun_doublepoint_structure_at_z4(eng12):
    # sum over walks of (1+t)^{N_4} at length 4 is 4(1+t) + 2(1+t)^2
    gf = eng12.joint_genfun((2,))
    assert gf.coefficient((0,)).coeffs[4] == 6
    assert gf.coefficient((1,)).coeffs[4] == 8
    assert gf.coefficient((2,)).coeffs[4] == 2


def test_joint_genfun_mixed_marker_coefficient(eng12):
    gf = eng12.joint_genfun((1, 2))
    assert gf.coefficient((1, 1)).coeffs[4] == 8


def test_joint_counts_match_oracle():
    eng = Engine(10, backend=EXACT)
    for tracked in ((1, 2), (1, 2, 3)):
        for n in range(1, 6):
            got = joint_counts(eng, n, tracked)
            want = {key: c for key, c in oracle_counts(n, 1, tracked).items()}
            assert got == want, (tracked, n)


def test_joint_counts_skip_a_multiplicity():
    # tracking (1, 3) marginalizes the untracked doublepoints correctly
    eng = Engine(10, backend=EXACT)
    for n in range(2, 6):
        got = joint_counts(eng, n, (1, 3))
        want = {key: c for key, c in oracle_counts(n, 1, (1, 3)).items()}
        assert got == want, n


# -- distribution and closed forms ----------------------------------------------

def test_distribution_examples():
    eng = Engine(4, backend=EXACT)
    counts, tail = eng.distribution(2, 2, 2)
    assert counts == {0: 0, 1: 4, 2: 2} and tail == 0


def test_distribution_completeness_and_oracle():
    for n in range(1, 7):
        eng = Engine(2 * n, backend=EXACT)
        for k in (1, 2, 3):
            counts, tail = eng.distribution(n, k, 2 * n)
            assert tail == 0
            assert sum(counts.values()) == comb(2 * n, n)
            want = {l: c for (l,), c in oracle_counts(n, 1, (k,)).items()}
            assert {l: c for l, c in counts.items() if c} == want


def test_distribution_matches_local_time_dp_midsize():
    # independent crossing-profile oracle at a size enumeration cannot reach
    n = 20
    eng = Engine(2 * n, backend=EXACT)
    for k in (2, 3):
        counts, _ = eng.distribution(n, k, 2 * n)
        dp = local_time_distribution(n, k)
        assert {l: c for l, c in counts.items() if c} == dp


def test_distribution_matches_local_time_dp_k4():
    n = 15
    eng = Engine(2 * n, backend=EXACT)
    counts, _ = eng.distribution(n, 4, 2 * n)
    assert {l: c for l, c in counts.items() if c} == \
        local_time_distribution(n, 4)


def test_marker_substitution_identity():
    # counts are the binomial inversion of the moments: equivalently
    # sum_l c_l u^l equals sum_j M_j (u-1)^j as polynomials
    n, k = 6, 2
    eng = Engine(2 * n, backend=EXACT)
    jmax = 2 * n // k
    moments = [eng.cache.count_at(s, n)
               for s in eng.binomial_moment_series(k, jmax)]
    counts, _ = eng.distribution(n, k, jmax)
    poly = [Fraction(0)] * (jmax + 1)
    for j, m in enumerate(moments):
        # add m * (u-1)^j
        for l in range(j + 1):
            poly[l] += m * comb(j, l) * (-1) ** (j - l)
    assert [int(x) for x in poly] == [counts.get(l, 0) for l in range(jmax + 1)]


def test_probabilities_float_match_exact_small():
    ee = Engine(24, backend=EXACT)
    ef = Engine(24, backend="float", scale=Fraction(1, 2))
    for k in (1, 2, 3):
        pe = [float(x) for x in ee.probabilities(12, k, 6)]
        pf = ef.probabilities(12, k, 6)
        assert pf == pytest.approx(pe, abs=1e-12)


# -- mixed moments ----------------------------------------------------------------

def test_mixed_moment_examples():
    eng = Engine(4, backend=EXACT)
    assert eng.mixed_moment({1: 2}, 2) == 4
    assert eng.mixed_moment({1: 1}, 2) == 8


def test_mixed_moments_match_oracle_to_depth_four():
    eng = Engine(12, backend=EXACT)
    specs = [{1: 1}, {2: 1}, {1: 2}, {1: 1, 2: 1}, {2: 2}, {1: 1, 2: 2},
             {2: 3}, {1: 2, 3: 1}, {1: 2, 3: 2}, {2: 4}, {1: 1, 2: 1, 3: 1}]
    for spec in specs:
        for n in range(1, 7):
            assert eng.mixed_moment(spec, n) == \
                oracle_mixed_moment(n, 1, spec), (spec, n)


def test_mixed_moment_depth_limit():
    eng = Engine(4, backend=EXACT)
    with pytest.raises(UnsupportedDepth):
        eng.mixed_moment({1: 3, 2: 2}, 2)


def test_exact_only_operations_reject_float_backend():
    eng = Engine(8, backend="float")
    with pytest.raises(ValueError):
        eng.distribution(4, 2, 4)
    with pytest.raises(ValueError):
        eng.mixed_moment({1: 1}, 4)


@pytest.mark.xfail(strict=True, reason="printed worked example for the "
                   "(1,1,3,3) moment disagrees with exhaustive enumeration; "
                   "the machinery result is the enumeration-backed one")
def test_printed_mixed_moment_combination():
    eng = Engine(12, backend=EXACT)
    a = eng.cache.one_minus_A
    x = eng.pair_block(1, 1)
    y = eng.pair_block(1, 2)
    z = eng.pair_block(1, 3)
    h24 = eng.chain_block(2, 4)
    inner = (((x * x * a) - y.scaled(2) * x) * ((x * a) - y)).scaled(2) \
        + (x * x) * h24 \
        - (x.scaled(2)) * ((y * x * a) - (x * z) - (y * y))
    disp = inner.scaled(2).zddz()
    want = [oracle_mixed_moment(n, 1, {1: 2, 3: 2}) for n in range(1, 7)]
    assert [disp.coeffs[2 * n] for n in range(1, 7)] == want


# -- the range ---------------------------------------------------------------------

def test_range_distribution_examples():
    assert range_distribution(1) == {2: 2}
    assert range_distribution(2) == {2: 2, 3: 4}


def test_range_distribution_matches_oracle():
    for n in range(1, 8):
        hist = range_distribution(n)
        want = {m: c for (m,), c in
                oracle_counts(n, 1, (), include_range=True).items()}
        assert hist == want
        assert sum(hist.values()) == comb(2 * n, n)


def test_range_series_route_agrees_with_ballot_route():
    cache = base_series(20, backend=EXACT)
    for n in range(1, 11):
        hist = range_distribution(n)
        for m in range(2, n + 2):
            ser = range_count_series(cache, m)
            assert ser.coeffs[2 * n] == hist.get(m, 0)


def test_range_moment_value():
    assert range_moment(2, 1) == Fraction(16, 6)


def test_range_first_moment_identity_large_n():
    # sum_m m * count(n, m) = 4^n exactly, here far beyond enumeration reach
    n = 200
    hist = range_distribution(n)
    assert sum(m * c for m, c in hist.items()) == 4 ** n
    assert sum(hist.values()) == comb(2 * n, n)


def test_probabilities_series_vs_crossing_dp_large_n():
    # the k = 2 closed-form float route against the all-positive DP; the
    # series route carries ~1e-8 absolute noise at this order from the
    # alternating block sums, the DP is good to ~1e-12
    n = 500
    eng = Engine(2 * n, backend="float", scale=Fraction(1, 2))
    ser = eng.probabilities(n, 2, 12)
    dp = local_time_probabilities(n, 2, 12)
    assert ser == pytest.approx(list(dp), abs=2e-8)


# -- vertex factors -----------------------------------------------------------------

def test_vertex_factor_zero_branch():
    for k in (1, 2, 3):
        w = 0.37
        assert vertex_factor(0, k, w) == pytest.approx(
            (w / (1 + w)) ** k / k)


def test_vertex_factor_simple_pole():
    w = 0.2
    assert vertex_factor(1, 1, w) == pytest.approx(-1 / (1 + w))


def test_vertex_factor_at_zero_argument():
    for q in range(1, 7):
        for k in range(1, q + 1):
            assert vertex_factor(q, k, 0.0) == pytest.approx(
                (-1) ** k * comb(q, k) / q)


def test_vertex_factor_nonunit():
    with pytest.raises(NonUnit):
        vertex_factor(0, 1, -1)


def test_vertex_factor_series_argument():
    cache = base_series(8, backend=EXACT)
    w = cache.h0
    got = vertex_factor(0, 2, w)
    want = (w / (cache.one + w)).pow(2).scaled(Fraction(1, 2))
    assert got == want
    got_q = vertex_factor(2, 1, w)
    # q=2, k=1: (-1) (1/2) C(0,0) C(2,1) / (1+w)
    assert got_q == (cache.one / (cache.one + w)).scaled(-1)


def test_vertex_factor_resummation():
    for q in range(1, 7):
        for k in range(1, 7):
            for w in (-0.3, -0.1, 0.05, 0.2, 0.3):
                closed = vertex_factor(q, k, w)
                series = vertex_factor_series_form(q, k, w, terms=400)
                assert abs(closed - series) < 1e-12, (q, k, w)
