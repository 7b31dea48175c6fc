"""Compact abelian groups with translation, invariant metric and Haar balls.

Two instances: the d-torus under the max-norm and the p-adic integers
truncated at a fixed digit depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import PreconditionError, ResourceCapError, SpaceMismatchError
from .exact import ExactScalar, Number, parse

DEFAULT_GRID_CAP = 50_000_000


@dataclass(frozen=True)
class TorusSpace:
    """T^d = R^d / Z^d with the max-norm; Haar balls are boxes of side 2*eps."""

    dim: int = 1
    kind: str = field(default="torus", init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise PreconditionError("torus dimension must be >= 1")

    @property
    def d(self) -> int:
        return self.dim

    @property
    def c3(self) -> Fraction:
        return Fraction(2) ** self.dim

    @property
    def c4(self) -> Fraction:
        return Fraction(2) ** self.dim

    def point(self, *coords: Union[Number, str]) -> "TorusPoint":
        if len(coords) != self.dim:
            raise SpaceMismatchError(f"expected {self.dim} coordinates, got {len(coords)}")
        return TorusPoint(tuple(parse(c).mod1() if isinstance(c, str)
                                else ExactScalar.coerce(c).mod1() for c in coords))

    def zero(self) -> "TorusPoint":
        return self.point(*([0] * self.dim))

    def __str__(self):
        return f"torus(d={self.dim})"


@dataclass(frozen=True)
class PAdicSpace:
    """Z_p modulo p^depth with metric p^-v; balls of radius p^-n have measure p^-n."""

    prime: int
    depth: int
    kind: str = field(default="padic", init=False)

    def __post_init__(self):
        if self.prime < 2 or any(self.prime % f == 0 for f in range(2, math.isqrt(self.prime) + 1)):
            raise PreconditionError(f"{self.prime} is not prime")
        if self.depth < 1:
            raise PreconditionError("p-adic depth must be >= 1")
        if self.prime ** self.depth >= 2 ** 62:
            raise ResourceCapError("p^depth must stay below 2^62")

    @property
    def d(self) -> int:
        return 1

    @property
    def modulus(self) -> int:
        return self.prime ** self.depth

    @property
    def c3(self) -> Fraction:
        return Fraction(1, self.prime)

    @property
    def c4(self) -> Fraction:
        return Fraction(1)

    def point(self, value: int) -> "PAdicPoint":
        return PAdicPoint.from_int(value, self.prime, self.depth)

    def from_digits(self, digits: Sequence[int]) -> "PAdicPoint":
        if len(digits) != self.depth:
            raise SpaceMismatchError(f"expected {self.depth} digits")
        return PAdicPoint(self.prime, tuple(int(x) for x in digits))

    def zero(self) -> "PAdicPoint":
        return self.point(0)

    def __str__(self):
        return f"padic(p={self.prime}, m={self.depth})"


GroupSpace = Union[TorusSpace, PAdicSpace]


@dataclass(frozen=True)
class TorusPoint:
    coords: tuple

    def __post_init__(self):
        for c in self.coords:
            if c < 0 or not c < 1:
                raise PreconditionError(f"torus coordinate {c} outside [0, 1)")

    @property
    def d(self) -> int:
        return len(self.coords)

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


@dataclass(frozen=True)
class PAdicPoint:
    """Truncated p-adic integer; ``digits`` are least-significant first."""

    prime: int
    digits: tuple

    def __post_init__(self):
        if any(not 0 <= x < self.prime for x in self.digits):
            raise PreconditionError("p-adic digit out of range")

    @classmethod
    def from_int(cls, value: int, prime: int, depth: int) -> "PAdicPoint":
        value %= prime ** depth
        digits = []
        for _ in range(depth):
            value, r = divmod(value, prime)
            digits.append(r)
        return cls(prime, tuple(digits))

    @property
    def depth(self) -> int:
        return len(self.digits)

    @property
    def value(self) -> int:
        out = 0
        for x in reversed(self.digits):
            out = out * self.prime + x
        return out

    def __str__(self):
        return "".join(str(x) for x in self.digits)


GroupPoint = Union[TorusPoint, PAdicPoint]


def space_of(x: GroupPoint) -> GroupSpace:
    if isinstance(x, TorusPoint):
        return TorusSpace(x.d)
    return PAdicSpace(x.prime, x.depth)


def _check_same(x: GroupPoint, y: GroupPoint):
    if type(x) is not type(y) or space_of(x) != space_of(y):
        raise SpaceMismatchError(f"points live in {space_of(x)} and {space_of(y)}")


def translate(x: GroupPoint, g: GroupPoint) -> GroupPoint:
    """x + g: coordinatewise mod 1 on the torus, carry addition mod p^m on Z_p."""
    _check_same(x, g)
    if isinstance(x, TorusPoint):
        return TorusPoint(tuple((a + b).mod1() for a, b in zip(x.coords, g.coords)))
    p = x.prime
    carry = 0
    digits = []
    for a, b in zip(x.digits, g.digits):
        carry, r = divmod(a + b + carry, p)
        digits.append(r)
    return PAdicPoint(p, tuple(digits))


def multiple(g: GroupPoint, j: int) -> GroupPoint:
    """j*g in the group."""
    if isinstance(g, TorusPoint):
        return TorusPoint(tuple((c * j).mod1() for c in g.coords))
    return PAdicPoint.from_int(g.value * j, g.prime, g.depth)


def distance(x: GroupPoint, y: GroupPoint) -> ExactScalar:
    _check_same(x, y)
    if isinstance(x, TorusPoint):
        best = ExactScalar(Fraction(0))
        for a, b in zip(x.coords, y.coords):
            delta = abs(a - b)
            wrap = 1 - delta
            best = max(best, min(delta, wrap))
        return best
    for v, (a, b) in enumerate(zip(x.digits, y.digits)):
        if a != b:
            return ExactScalar(Fraction(1, x.prime ** v))
    return ExactScalar(Fraction(0))


def padic_radius_exponent(prime: int, eps: Number) -> int:
    """Smallest n >= 0 with p^-n <= eps."""
    eps = ExactScalar.coerce(eps)
    if eps.sign() <= 0:
        raise PreconditionError("radius must be positive")
    n = 0
    while ExactScalar(Fraction(1, prime ** n)) > eps:
        n += 1
    return n


def ball_measure(space: GroupSpace, eps: Number) -> ExactScalar:
    """Haar measure of a closed eps-ball."""
    eps = ExactScalar.coerce(eps)
    if eps.sign() <= 0:
        raise PreconditionError("ball radius must be positive")
    if isinstance(space, TorusSpace):
        side = min(2 * eps, ExactScalar(Fraction(1)))
        return side ** space.dim
    return ExactScalar(Fraction(1, space.prime ** padic_radius_exponent(space.prime, eps)))


@dataclass(frozen=True)
class RegularityResult:
    c3: ExactScalar
    c4: ExactScalar
    passed: bool
    ratios: tuple


def verify_regularity(space: GroupSpace, eps_grid: Sequence[Number]) -> RegularityResult:
    """Check c3 eps^d <= mu(ball) <= c4 eps^d on a grid; report observed constants."""
    eps_list = [ExactScalar.coerce(e) for e in eps_grid]
    if not eps_list:
        raise PreconditionError("empty epsilon grid")
    ratios = []
    for e in eps_list:
        ratios.append(ball_measure(space, e) / e ** int(space.d))
    lo, hi = min(ratios), max(ratios)
    passed = ExactScalar.coerce(space.c3) <= lo and hi <= ExactScalar.coerce(space.c4)
    return RegularityResult(lo, hi, passed, tuple(ratios))


# -- grids ----------------------------------------------------------------


def grid_shape(space: GroupSpace, resolution: int) -> tuple:
    if resolution < 1:
        raise PreconditionError("resolution must be >= 1")
    if isinstance(space, TorusSpace):
        return (resolution,) * space.dim
    m = 0
    while m < space.depth and space.prime ** m < resolution:
        m += 1
    return (space.prime ** m,)


def grid_size(space: GroupSpace, resolution: int) -> int:
    return math.prod(grid_shape(space, resolution))


def grid_spacing(space: GroupSpace, resolution: int) -> Fraction:
    """Largest distance from a group point to its nearest grid point cell anchor."""
    if isinstance(space, TorusSpace):
        return Fraction(1, resolution)
    return Fraction(1, grid_size(space, resolution))


def grid_points(space: GroupSpace, resolution: int,
                cap: int = DEFAULT_GRID_CAP) -> list:
    """Deterministic lattice: (j_1/R, ..., j_d/R) on T^d, all residues mod p^m' on Z_p."""
    size = grid_size(space, resolution)
    if size > cap:
        raise ResourceCapError(f"grid of {size} points exceeds cap {cap}")
    if isinstance(space, TorusSpace):
        R = resolution
        idx = np.indices(grid_shape(space, R)).reshape(space.dim, -1).T
        return [TorusPoint(tuple(ExactScalar(Fraction(int(j), R)) for j in row)) for row in idx]
    return [space.point(v) for v in range(size)]


def check_grid(space: GroupSpace, resolution: int, cap: int = DEFAULT_GRID_CAP) -> int:
    size = grid_size(space, resolution)
    if size > cap:
        raise ResourceCapError(f"grid of {size} points exceeds cap {cap}")
    return size
