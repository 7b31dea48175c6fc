from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heavyset.diophantine import BelowApprox, below_sequence
from heavyset.errors import PreconditionError
from heavyset.exact import ExactScalar, parse
from heavyset.groups import PAdicSpace, TorusSpace
from heavyset.heavy import (Schedule, Sweeper, deficit_trace, degenerate_heavy_set,
                            distinct_sums, h_Y_verdict, heavy_grid, is_heavy, j_count,
                            level_envelope, loeve_check, make_schedule, measure_estimate,
                            orthogonality_check, rational_schedule, y_trace)
from heavyset.targets import IntervalUnion, PAdicBallUnion

F = Fraction
T1 = TorusSpace(1)
Z2 = PAdicSpace(2, 10)
GOLDEN = parse("(sqrt5-1)/2")
HALF = IntervalUnion([(0, F(1, 2))])
EVEN = PAdicBallUnion(Z2, [(0, 1)])


def stage(p, q, n, eps, k=2, psi=0, d=1):
    return Schedule(0, p, q, k, psi, d, n, F(eps), None)


def test_trace_at_zero():
    tr = deficit_trace(T1.point(0), T1.point(GOLDEN), HALF, F(1, 2), 1)
    assert tr.sums == [F(1, 2)]


def test_golden_orbit_trace():
    tr = deficit_trace(T1.point(0), T1.point(GOLDEN), HALF, F(1, 2), 3)
    assert tr.chi == [1, 0, 1]
    assert tr.sums == [F(1, 2), 0, F(1, 2)]
    v = is_heavy(T1.point(0), T1.point(GOLDEN), HALF, F(1, 2), 3)
    assert not v.heavy and v.first_failure == 2 and v.min_partial_sum == 0


def test_padic_alternating_trace():
    tr = deficit_trace(Z2.point(0), Z2.point(1), EVEN, F(1, 2), 2)
    assert tr.sums == [F(1, 2), 0]


def test_heavy_at_horizon_one():
    A = IntervalUnion([(0, GOLDEN)])
    v = is_heavy(T1.point(0), T1.point(GOLDEN), A, GOLDEN, 1)
    assert v.heavy and v.min_partial_sum == 1 - GOLDEN
    v = is_heavy(T1.point(F(9, 10)), T1.point(GOLDEN), A, GOLDEN, 1)
    assert not v.heavy and v.min_partial_sum == -GOLDEN


def test_trace_preconditions():
    with pytest.raises(PreconditionError):
        deficit_trace(T1.point(0), T1.point(0), HALF, F(1, 2), 0)
    with pytest.raises(PreconditionError):
        deficit_trace(T1.point(0), T1.point(0), HALF, F(3, 2), 1)


def test_schedule_examples():
    seq = BelowApprox.from_pairs(GOLDEN, [(3, 5)], 2, 1)
    s, = make_schedule(seq, 0, 1)
    assert (s.n, s.eps) == (625, F(1, 25)) and s.n_exact and s.eps_exact
    seq3 = BelowApprox.from_pairs(F(1, 3), [(1, 2)], 3, 1)
    s, = make_schedule(seq3, 0, 1)
    assert (s.n, s.eps) == (64, F(1, 8))
    # 2k/(d - psi) = 4 for d = 2, psi = 1, k = 2
    s, = make_schedule(BelowApprox.from_pairs(GOLDEN, [(1, 3)], 2, 1), 1, 2)
    assert (s.n, s.eps) == (81, F(1, 9))
    with pytest.raises(PreconditionError):
        make_schedule(seq, 1, 1)


def test_schedule_rounding_is_recorded():
    seq = below_sequence(GOLDEN, 6)
    for s in make_schedule(seq, 0, 2):
        # exponent 2: n = q^2 exactly
        assert s.n == s.q ** 2 and s.n_exact
    for s in make_schedule(seq, 0, 3):
        e = s.exponent
        assert s.n ** e.denominator <= s.q ** e.numerator < (s.n + 1) ** e.denominator
        assert ExactScalar(s.eps) <= ExactScalar(F(0), F(1, s.n), s.n)
        assert s.eps.denominator <= s.q ** 2 or s.eps_exact


def test_schedule_monotone():
    scheds = make_schedule(below_sequence(GOLDEN, 6), 0, 1)
    assert all(a.n < b.n and a.eps > b.eps for a, b in zip(scheds[1:], scheds[2:]))


def test_h_Y_example():
    v = h_Y_verdict(T1.point(0), T1.point(GOLDEN), HALF, stage(12, 29, 1, F(1, 25)))
    assert v.heavy and v.min_partial_sum == F(17, 29)


def test_h_Y_degenerate_full():
    v = h_Y_verdict(T1.point(F(9, 10)), T1.point(GOLDEN), HALF, stage(1, 2, 50, F(1, 4)))
    assert v.heavy


def test_measure_estimates():
    assert measure_estimate(HALF.contains, T1, 1000) == F(501, 1000)
    assert measure_estimate(lambda x: False, T1, 100) == 0
    assert measure_estimate(EVEN.contains, Z2, 16) == F(1, 2)


def test_j_count_and_distinct_sums():
    g = T1.point("sqrt2-1")
    s = stage(12, 29, 29, F(1, 29))
    assert j_count(T1.point(F(7, 10)), T1.point(0), HALF, s) == 0
    for x in (0, F(1, 3), F(3, 4)):
        J = j_count(T1.point(x), g, HALF, s)
        count, ok = distinct_sums(T1.point(x), g, HALF, s)
        assert ok and J <= count


def test_distinct_sums_alternating():
    count, ok = distinct_sums(Z2.point(0), Z2.point(1), EVEN, Schedule(0, 1, 2, None, 0, 1, 6,
                                                                      F(1, 4), None))
    assert count == 2 and ok


def test_constant_chi_is_monotone():
    count, ok = distinct_sums(T1.point(0), T1.point(0), HALF, stage(1, 2, 40, F(1, 100)))
    assert count == 40 and ok


def test_degenerate_measures():
    assert degenerate_heavy_set(IntervalUnion([(F(1, 3), F(1, 3))])) is not None
    assert degenerate_heavy_set(IntervalUnion([(0, 1)])) == ()
    assert degenerate_heavy_set(HALF) is None


def test_loeve_examples():
    r = loeve_check(1, 200, seed=1, target=HALF)
    assert r.rhs == pytest.approx(1.0) and r.passed
    full = loeve_check(64, 50, seed=1, target=IntervalUnion([(0, 1)]))
    assert full.lhs == 0 and full.passed
    with pytest.raises(PreconditionError):
        loeve_check(4, 10, seed=None)


def test_orthogonality_examples():
    s = stage(1, 2, 100, F(1, 100))
    r = orthogonality_check(HALF, s, [(0, 1)], 10000, seed=3)
    assert r.max_abs < 0.02 and r.passed
    z = orthogonality_check(IntervalUnion([(0, 1)]), s, [(0, 1), (2, 5)], 100, seed=3)
    assert z.max_abs == 0 and z.passed
    with pytest.raises(PreconditionError):
        orthogonality_check(HALF, s, [(1, 1)], 10, seed=3)


def test_padic_pairs_with_even_gap_are_correlated():
    # j g and i g have the same parity when j - i is even, so Z_i = Z_j
    s = Schedule(0, 1, 2, None, 0, 1, 10, F(1, 1024), None)
    r = orthogonality_check(EVEN, s, [(0, 2)], 2000, seed=4)
    assert r.pairs[0].mean == pytest.approx(0.25)


def test_level_envelope_brackets():
    for n in (1, 10, 10 ** 6):
        plo, qlo, phi, qhi = level_envelope(GOLDEN, n)
        assert ExactScalar(F(plo, qlo)) < GOLDEN < ExactScalar(F(phi, qhi))
        assert max(qlo, qhi) * (n + 1) < 2 ** 62
    assert level_envelope(F(3, 7), 5) == (3, 7, 3, 7)


def test_rational_schedule():
    scheds = rational_schedule(F(1, 2), [100, 1000], 0, 1)
    assert [s.eps for s in scheds] == [F(1, 10), F(8, 253)]
    assert all(s.level == F(1, 2) for s in scheds)


unit = st.fractions(0, 1, max_denominator=500).filter(lambda f: f < 1)


@given(unit, st.sampled_from(["sqrt2-1", "(sqrt5-1)/2", "3/7", "sqrt3-1"]), st.integers(1, 60))
def test_increments_and_verdict_invariant(x, alpha, n):
    tr = deficit_trace(T1.point(x), T1.point(alpha), HALF, F(1, 2), n)
    assert tr.increments_ok()
    v = is_heavy(T1.point(x), T1.point(alpha), HALF, F(1, 2), n)
    assert v.heavy == (v.first_failure is None) == (v.min_partial_sum > 0)


@given(unit, st.integers(0, 4))
def test_y_sums_have_denominator_q(x, idx):
    s = make_schedule(below_sequence(GOLDEN, 6), 0, 1)[1 + idx % 3]
    tr = y_trace(T1.point(x), T1.point("sqrt5-2"), IntervalUnion([(0, GOLDEN)]),
                 Schedule(s.index, s.p, s.q, s.k, 0, 1, min(s.n, 200), s.eps, s.exponent))
    assert all((v * s.q).is_rational and (v * s.q).as_fraction().denominator == 1
               for v in tr.sums)


@given(unit, st.sampled_from(["sqrt2-1", "(sqrt5-1)/2"]), st.integers(1, 40))
def test_nesting(x, alpha, n):
    a = is_heavy(T1.point(x), T1.point(alpha), HALF, F(1, 2), n + 1)
    b = is_heavy(T1.point(x), T1.point(alpha), HALF, F(1, 2), n)
    assert not a.heavy or b.heavy


@given(st.integers(0, 1023), st.integers(0, 1023), st.integers(1, 50))
def test_rational_measure_sums_discrete(x, g, n):
    tr = deficit_trace(Z2.point(x), Z2.point(g), EVEN, EVEN.measure(), n)
    assert all((2 * v).as_fraction().denominator == 1 for v in tr.sums)


def test_ball_transfer_on_grid():
    A = IntervalUnion([(0, GOLDEN)])
    g = T1.point(F(0x9E3779B97F4A7C15, 2 ** 64))
    s = make_schedule(below_sequence(GOLDEN, 4), 0, 1)[2]
    hx = heavy_grid(T1, A, GOLDEN, g, s.n, 2000)
    heavy_x = np.nonzero(hx.heavy_at())[0]
    assert heavy_x.size
    sw = Sweeper(T1, A.dilate(s.eps), s.level, g)
    close = [T1.point((ExactScalar(F(int(i), 2000)) + d).mod1())
             for i in heavy_x[:40] for d in (-s.eps, F(0), s.eps / 3, s.eps)]
    assert np.all(sw.verdicts(close, s.n) == 0)
