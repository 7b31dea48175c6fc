import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from heavyset.errors import PreconditionError, UnsupportedFieldError
from heavyset.exact import EQ, GT, LT, ExactScalar, compare, mod1, parse, to_float

GOLDEN = parse("(sqrt5-1)/2")
SQRT2M1 = parse("sqrt2-1")

fracs = st.fractions(min_value=-50, max_value=50, max_denominator=200)
radicands = st.sampled_from([2, 3, 5, 6, 7, 10, 13])


@st.composite
def scalars(draw, D=None):
    D = draw(radicands) if D is None else D
    return ExactScalar(draw(fracs), draw(fracs), D)


def test_golden_float():
    v, err = to_float(GOLDEN)
    assert abs(v - (math.sqrt(5) - 1) / 2) <= 1e-16
    assert err <= 2e-16


def test_sqrt2_mod1():
    assert mod1(ExactScalar.sqrt(2)) == SQRT2M1


def test_compare_examples():
    assert compare(SQRT2M1, Fraction(2, 5)) == GT
    assert compare(GOLDEN, Fraction(3, 5)) == GT
    assert compare(Fraction(3, 5), GOLDEN) == LT
    assert compare(GOLDEN, GOLDEN) == EQ


def test_unit_in_ring():
    assert (SQRT2M1) * (1 + ExactScalar.sqrt(2)) == 1


def test_negative_mod1():
    assert mod1(Fraction(-1, 4)) == Fraction(3, 4)


def test_parse_forms():
    assert parse("sqrt8") == 2 * ExactScalar.sqrt(2)
    assert parse("sqrt(2)") == ExactScalar.sqrt(2)
    assert parse("0.125") == Fraction(1, 8)
    assert parse("1/2 + 3/4*sqrt(5)") == ExactScalar(Fraction(1, 2), Fraction(3, 4), 5)
    assert parse("sqrt4") == 2


def test_mixed_fields_rejected():
    with pytest.raises(UnsupportedFieldError):
        GOLDEN + SQRT2M1


def test_negative_radicand_rejected():
    with pytest.raises(PreconditionError):
        ExactScalar(Fraction(0), Fraction(1), -2)


@given(scalars())
def test_string_round_trip(x):
    assert parse(str(x)) == x


@given(scalars(D=5), scalars(D=5))
def test_field_axioms(x, y):
    assert x + y == y + x
    assert x * y == y * x
    assert (x + y) - y == x
    if y:
        assert (x / y) * y == x


@given(scalars(D=2), scalars(D=2))
def test_sign_agrees_with_float(x, y):
    d = float(x) - float(y)
    if abs(d) > 1e-9:
        assert compare(x, y) == (GT if d > 0 else LT)


@given(scalars())
def test_floor_and_mod1(x):
    f = x.floor()
    assert f <= x < f + 1
    r = x.mod1()
    assert 0 <= r < 1 and (x - r).is_rational and (x - r).as_fraction().denominator == 1


@given(scalars())
def test_float_error_bound(x):
    v, err = x.to_float()
    assert abs(Fraction(v) - Fraction(x.scaled_floor(120), 1 << 120)) <= Fraction(err) + Fraction(1, 1 << 119)


@given(scalars())
def test_hash_matches_equality(x):
    y = parse(str(x))
    assert hash(x) == hash(y)
