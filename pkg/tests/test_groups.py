from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from heavyset.errors import PreconditionError, ResourceCapError, SpaceMismatchError
from heavyset.exact import ExactScalar, parse
from heavyset.groups import (PAdicPoint, PAdicSpace, TorusSpace, ball_measure, distance,
                             grid_points, grid_shape, multiple, padic_radius_exponent,
                             translate, verify_regularity)

T1 = TorusSpace(1)
Z2 = PAdicSpace(2, 12)


def test_translate_wraps():
    assert translate(T1.point(Fraction(3, 4)), T1.point(Fraction(1, 2))) == T1.point(Fraction(1, 4))


def test_padic_carry():
    assert translate(Z2.point(1), Z2.point(1)).value == 2
    assert translate(Z2.point(Z2.modulus - 1), Z2.point(1)).value == 0


def test_torus_distance_wraps():
    assert distance(T1.point(Fraction(1, 10)), T1.point(Fraction(9, 10))) == Fraction(1, 5)


def test_torus2_maxnorm():
    T2 = TorusSpace(2)
    d = distance(T2.point(0, 0), T2.point(Fraction(1, 10), Fraction(3, 10)))
    assert d == Fraction(3, 10)


def test_padic_distance():
    assert distance(Z2.point(0), Z2.point(8)) == Fraction(1, 8)
    assert distance(Z2.point(5), Z2.point(5)) == 0


def test_mismatched_spaces():
    with pytest.raises(SpaceMismatchError):
        translate(T1.point(0), Z2.point(0))


def test_regularity_constants():
    assert verify_regularity(T1, [Fraction(1, 2 ** i) for i in range(1, 11)]).passed
    r = verify_regularity(PAdicSpace(2, 20), [Fraction(1, 2 ** i) for i in range(1, 11)])
    assert r.passed and r.c3 == 1 and r.c4 == 1


def test_padic_radius_between_powers():
    # radius 1/3 in Z_2 is the ball of radius 1/4
    assert padic_radius_exponent(2, Fraction(1, 3)) == 2
    assert ball_measure(Z2, Fraction(1, 3)) == Fraction(1, 4)
    r = verify_regularity(PAdicSpace(2, 20), [Fraction(1, 3)])
    assert r.passed and r.c3 == Fraction(3, 4)


def test_grid_shapes():
    assert grid_shape(TorusSpace(2), 10) == (10, 10)
    assert grid_shape(Z2, 100) == (128,)
    assert len(grid_points(T1, 7)) == 7
    with pytest.raises(ResourceCapError):
        grid_points(TorusSpace(3), 1000, cap=1000)


def test_bad_prime():
    with pytest.raises(PreconditionError):
        PAdicSpace(4, 3)


@given(st.integers(0, 2 ** 12 - 1), st.integers(0, 2 ** 12 - 1), st.integers(0, 50))
def test_padic_is_integer_arithmetic(a, b, j):
    x, g = Z2.point(a), Z2.point(b)
    assert translate(x, g).value == (a + b) % Z2.modulus
    assert multiple(g, j).value == (b * j) % Z2.modulus
    assert PAdicPoint.from_int(a, 2, 12).value == a


@given(st.fractions(0, 1, max_denominator=97).filter(lambda f: f < 1),
       st.fractions(0, 1, max_denominator=97).filter(lambda f: f < 1),
       st.fractions(0, 1, max_denominator=97).filter(lambda f: f < 1))
def test_torus_translation_is_isometry(a, b, c):
    x, y, g = T1.point(a), T1.point(b), T1.point(c)
    assert distance(translate(x, g), translate(y, g)) == distance(x, y)
    assert distance(x, y) <= Fraction(1, 2)


@given(st.integers(0, 4095), st.integers(0, 4095), st.integers(0, 4095))
def test_ultrametric_inequality(a, b, c):
    x, y, z = Z2.point(a), Z2.point(b), Z2.point(c)
    assert distance(x, z) <= max(distance(x, y), distance(y, z))
