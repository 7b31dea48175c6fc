from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from heavyset.errors import PreconditionError, SpaceMismatchError
from heavyset.exact import ExactScalar, parse
from heavyset.groups import PAdicSpace, TorusSpace, distance
from heavyset.targets import (BoxUnion, IntervalUnion, PAdicBallUnion, content_certificate,
                              parse_target)

T1, T2 = TorusSpace(1), TorusSpace(2)
Z2 = PAdicSpace(2, 12)
F = Fraction


def test_two_interval_dilation():
    A = IntervalUnion([(F(1, 10), F(3, 10)), (F(35, 100), F(1, 2))])
    Ae = A.dilate(F(1, 20))
    assert [(a.start, a.end) for a in Ae.arcs] == [(F(1, 20), F(11, 20))]
    assert Ae.measure() == F(1, 2)


def test_box_union_measure():
    B = BoxUnion(T2, [[(0, F(1, 2)), (0, F(1, 2))], [(F(1, 4), F(3, 4)), (F(1, 4), F(3, 4))],
                      [(F(9, 10), F(1, 10)), (0, F(1, 10))]])
    # the wrapped box meets [0,1/2]^2 in [0,1/10]^2
    assert B.measure() == F(1, 4) + F(1, 4) - F(1, 16) + F(1, 50) - F(1, 100)


def test_padic_even_ball():
    E = PAdicBallUnion(Z2, [(0, 1)])
    assert not E.contains(Z2.point(1)) and E.contains(Z2.point(6))
    assert E.dilate(F(1, 8)).balls == E.balls
    assert E.measure() == F(1, 2)
    assert E.dilate(F(1)).is_full


def test_wrap_arc():
    A = IntervalUnion([(F(9, 10), F(1, 10))])
    assert A.measure() == F(1, 5)
    assert A.contains(T1.point(0)) and not A.contains(T1.point(F(1, 2)))


def test_half_dilated_is_full():
    assert IntervalUnion([(0, F(1, 2))]).dilate(F(1, 4)).is_full


def test_content_certificate():
    assert content_certificate(IntervalUnion([(0, F(1, 2))]), [F(1, 10), F(1, 100)]).c1 == 2
    two = IntervalUnion([(F(1, 10), F(3, 10)), (F(35, 100), F(1, 2))])
    assert content_certificate(two, [F(1, 50), F(1, 100)]).c1 == 4
    with pytest.raises(PreconditionError):
        content_certificate(two, [F(1, 20)])


def test_parse_target_kinds():
    A = parse_target(T1, "intervals", [[0, "(sqrt5-1)/2"]])
    assert A.measure() == parse("(sqrt5-1)/2")
    with pytest.raises(SpaceMismatchError):
        parse_target(T1, "padic_balls", [[0, "1/2"]])
    B = parse_target(Z2, "padic_balls", [[1, "1/4"]])
    assert B.measure() == F(1, 4)
    with pytest.raises(PreconditionError):
        parse_target(Z2, "padic_balls", [[1, "1/3"]])


def test_boundary_dimensions():
    assert IntervalUnion([(0, F(1, 2))]).boundary_dimension() == 0
    assert BoxUnion(T2, [[(0, F(1, 2)), (0, F(1, 2))]]).boundary_dimension() == 1
    assert PAdicBallUnion(Z2, [(0, 1)]).boundary_dimension() == 0


unit = st.fractions(0, 1, max_denominator=60).filter(lambda f: f < 1)


@given(st.lists(st.tuples(unit, unit), min_size=1, max_size=4),
       st.fractions(F(1, 200), F(1, 3), max_denominator=200), unit)
def test_dilation_matches_distance(intervals, eps, x):
    A = IntervalUnion(intervals)
    p = T1.point(x)
    assert A.dilate(eps).contains(p) == (not A.distance_to(p) > eps)
    assert A.measure() <= A.dilate(eps).measure()


@given(st.lists(st.tuples(unit, unit), min_size=1, max_size=4))
def test_interval_measure_matches_box_measure(intervals):
    A = IntervalUnion(intervals)
    B = BoxUnion(T1, [[iv] for iv in intervals])
    assert A.measure() == B.measure()


@given(st.lists(st.tuples(st.integers(0, 4095), st.integers(0, 6)), min_size=1, max_size=5),
       st.integers(0, 4095), st.integers(0, 8))
def test_padic_dilation_matches_distance(balls, x, r):
    A = PAdicBallUnion(Z2, balls)
    eps = F(1, 2 ** r)
    p = Z2.point(x)
    assert A.dilate(eps).contains(p) == (not A.distance_to(p) > eps)


@given(st.lists(st.tuples(unit, unit), min_size=1, max_size=3),
       st.fractions(F(1, 100), F(1, 5), max_denominator=100))
def test_content_growth_bound(intervals, eps):
    # each component grows by at most 2 eps
    A = IntervalUnion(intervals)
    assert A.dilate(eps).measure() - A.measure() <= 2 * eps * A.components
