from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from heavyset.diophantine import (BelowApprox, below_sequence, best_lower_rational, cf_expand,
                                  convergents, estimate_order, liouville_below)
from heavyset.errors import PreconditionError
from heavyset.exact import ExactScalar, parse

GOLDEN = parse("(sqrt5-1)/2")
SQRT2M1 = parse("sqrt2-1")


def fib(n):
    a, b = 0, 1
    out = []
    for _ in range(n):
        out.append(a)
        a, b = b, a + b
    return out


def test_golden_expansion():
    cf = cf_expand(GOLDEN, 12)
    assert cf.terms == (0,) + (1,) * 11
    assert cf.period == (1,)
    f = fib(14)
    assert convergents(cf, 12) == [(f[j], f[j + 1]) for j in range(12)]


def test_sqrt2_expansion():
    cf = cf_expand(SQRT2M1, 6)
    assert cf.terms == (0, 2, 2, 2, 2, 2)


def test_rational_is_finite():
    cf = cf_expand(Fraction(3, 8), 10)
    assert cf.finite and cf.terms == (0, 2, 1, 2)
    with pytest.raises(PreconditionError):
        convergents(cf, 6)


def test_sqrt2_below_sequence():
    seq = below_sequence(SQRT2M1, 4)
    assert [(e.p, e.q) for e in seq.entries] == [(0, 1), (2, 5), (12, 29), (70, 169)]


def test_liouville_truncations():
    gamma, seq = liouville_below(2, 3, 2)
    assert gamma == Fraction(13, 16)
    assert [Fraction(e.p, e.q) for e in seq.entries] == [Fraction(1, 2), Fraction(3, 4),
                                                         Fraction(13, 16)]


def test_order_estimates():
    assert estimate_order(below_sequence(GOLDEN, 12)).k_hat == pytest.approx(2.0, abs=0.1)
    _, seq = liouville_below(4, 5)
    # last entry has zero gap and is excluded
    assert estimate_order(seq).k_hat == pytest.approx(4.0, abs=0.3)


def test_corrupted_pair_fails():
    seq = BelowApprox.from_pairs(GOLDEN, [(1, 2), (2, 3)], 2, 1)
    assert any("above" in v for v in seq.violations())
    with pytest.raises(PreconditionError):
        seq.certify()


def test_rational_has_no_below_sequence():
    with pytest.raises(PreconditionError):
        below_sequence(Fraction(1, 2), 3)


@pytest.mark.parametrize("gamma", [GOLDEN, SQRT2M1, parse("sqrt3-1"), parse("(sqrt13-3)/2")])
def test_below_certified(gamma):
    seq = below_sequence(gamma, 15)
    assert seq.violations() == []
    for e in seq.entries:
        assert 0 <= e.gap < ExactScalar(Fraction(1, e.q ** 2))


def _brute_lower(theta, max_den):
    best = None
    for q in range(1, max_den + 1):
        p = (theta * q).floor()
        f = Fraction(p, q)
        best = f if best is None or f > best else best
    return best


@given(st.sampled_from([GOLDEN, SQRT2M1, parse("1/sqrt7"), parse("sqrt10-3")]),
       st.integers(1, 300))
def test_best_lower_matches_brute_force(theta, max_den):
    assert best_lower_rational(theta, max_den) == _brute_lower(theta, max_den)


@given(st.fractions(0, 1, max_denominator=400).filter(lambda f: 0 < f < 1))
def test_rational_expansion_reconstructs(f):
    cf = cf_expand(f, 64)
    assert cf.finite
    p, q = convergents(cf, len(cf.terms))[-1]
    assert Fraction(p, q) == f
