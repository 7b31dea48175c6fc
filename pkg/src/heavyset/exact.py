"""Exact arithmetic in Q and in real quadratic fields Q(sqrt(D)).

Every membership test, deficit sign and below-approximation check in the
package is decided with these values, so no tolerance parameter appears here.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Union

from .errors import PreconditionError, UnsupportedFieldError

LT, EQ, GT = -1, 0, 1

Number = Union[int, Fraction, "ExactScalar"]


def _squarefree_split(n: int) -> tuple[int, int]:
    """Return (s, r) with n == s*s*r and r square-free."""
    if n < 0:
        raise PreconditionError("radicand must be nonnegative")
    s, r = 1, 1
    f = 2
    while f * f <= n:
        e = 0
        while n % f == 0:
            n //= f
            e += 1
        s *= f ** (e // 2)
        if e % 2:
            r *= f
        f += 1
    return s, r * n


_FZERO = Fraction(0)


def _sign(a: Fraction, b: Fraction, D: int) -> int:
    if b == 0:
        return (a > 0) - (a < 0)
    sb = 1 if b > 0 else -1
    if a == 0 or (a > 0) == (b > 0):
        return sb
    # opposite signs: compare a^2 with b^2 D (never equal, sqrt(D) irrational)
    return (1 if a > 0 else -1) if a * a > b * b * D else sb


@total_ordering
@dataclass(frozen=True)
class ExactScalar:
    """The real number ``a + b*sqrt(D)`` with rational ``a``, ``b``.

    Instances are canonical: ``D`` is square-free and ``b == 0`` iff ``D == 0``,
    so dataclass equality and hashing coincide with numeric equality.
    """

    a: Fraction
    b: Fraction = Fraction(0)
    D: int = 0

    def __post_init__(self):
        a, b, D = Fraction(self.a), Fraction(self.b), int(self.D)
        if D < 0:
            raise PreconditionError("negative radicand")
        if b != 0 and D > 0:
            s, D = _squarefree_split(D)
            b *= s
            if D == 1:
                a, b, D = a + b, Fraction(0), 0
        else:
            b, D = Fraction(0), 0
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "D", D)

    # -- construction -----------------------------------------------------

    @classmethod
    def coerce(cls, x: Number) -> "ExactScalar":
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(Fraction(x))
        if isinstance(x, str):
            return parse(x)
        raise TypeError(f"cannot convert {type(x).__name__} to ExactScalar")

    @classmethod
    def sqrt(cls, n: int) -> "ExactScalar":
        return cls(Fraction(0), Fraction(1), n)

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def as_fraction(self) -> Fraction:
        if self.b:
            raise PreconditionError(f"{self} is irrational")
        return self.a

    def conjugate(self) -> "ExactScalar":
        return ExactScalar(self.a, -self.b, self.D)

    # -- field arithmetic -------------------------------------------------

    def _field(self, other: "ExactScalar") -> int:
        if self.D and other.D and self.D != other.D:
            raise UnsupportedFieldError(
                f"cannot combine Q(sqrt({self.D})) with Q(sqrt({other.D}))")
        return self.D or other.D

    @classmethod
    def _make(cls, a: Fraction, b: Fraction, D: int) -> "ExactScalar":
        """Construct from parts already in canonical form (D square-free or 0)."""
        obj = object.__new__(cls)
        if not b:
            b, D = _FZERO, 0
        object.__setattr__(obj, "a", a)
        object.__setattr__(obj, "b", b)
        object.__setattr__(obj, "D", D)
        return obj

    def __add__(self, other: Number) -> "ExactScalar":
        if isinstance(other, (int, Fraction)):
            return ExactScalar._make(self.a + other, self.b, self.D)
        if not isinstance(other, ExactScalar):
            try:
                other = ExactScalar.coerce(other)
            except TypeError:
                return NotImplemented
        D = self._field(other)
        return ExactScalar._make(self.a + other.a, self.b + other.b, D)

    __radd__ = __add__

    def __neg__(self) -> "ExactScalar":
        return ExactScalar._make(-self.a, -self.b, self.D)

    def __sub__(self, other: Number) -> "ExactScalar":
        if isinstance(other, (int, Fraction)):
            return ExactScalar._make(self.a - other, self.b, self.D)
        if not isinstance(other, ExactScalar):
            try:
                other = ExactScalar.coerce(other)
            except TypeError:
                return NotImplemented
        D = self._field(other)
        return ExactScalar._make(self.a - other.a, self.b - other.b, D)

    def __rsub__(self, other: Number) -> "ExactScalar":
        return ExactScalar.coerce(other) - self

    def __mul__(self, other: Number) -> "ExactScalar":
        if isinstance(other, (int, Fraction)):
            return ExactScalar._make(self.a * other, self.b * other, self.D)
        if not isinstance(other, ExactScalar):
            try:
                other = ExactScalar.coerce(other)
            except TypeError:
                return NotImplemented
        D = self._field(other)
        a = self.a * other.a + self.b * other.b * D
        b = self.a * other.b + self.b * other.a
        return ExactScalar._make(a, b, D)

    __rmul__ = __mul__

    def reciprocal(self) -> "ExactScalar":
        norm = self.a * self.a - self.b * self.b * self.D
        if norm == 0:
            raise ZeroDivisionError("ExactScalar division by zero")
        return ExactScalar(self.a / norm, -self.b / norm, self.D)

    def __truediv__(self, other: Number) -> "ExactScalar":
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        self._field(other)
        return self * other.reciprocal()

    def __rtruediv__(self, other: Number) -> "ExactScalar":
        return ExactScalar.coerce(other) / self

    def __pow__(self, e: int) -> "ExactScalar":
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return self.reciprocal() ** (-e)
        out, base = ExactScalar(Fraction(1)), self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __abs__(self) -> "ExactScalar":
        return -self if self.sign() < 0 else self

    # -- order ------------------------------------------------------------

    def sign(self) -> int:
        """Exact sign of ``a + b*sqrt(D)`` via rational cross-multiplication."""
        return _sign(self.a, self.b, self.D)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        if isinstance(other, ExactScalar):
            return (self.a, self.b, self.D) == (other.a, other.b, other.D)
        return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.D))

    def __lt__(self, other):
        if isinstance(other, (int, Fraction)):
            return _sign(self.a - other, self.b, self.D) < 0
        if not isinstance(other, ExactScalar):
            try:
                other = ExactScalar.coerce(other)
            except TypeError:
                return NotImplemented
        D = self._field(other)
        return _sign(self.a - other.a, self.b - other.b, D) < 0

    def __bool__(self):
        return self.a != 0 or self.b != 0

    # -- integer part -----------------------------------------------------

    def floor(self) -> int:
        if self.b == 0:
            return math.floor(self.a)
        # self = (c + e sqrt(D)) / den with integers and den > 0
        c, e, D, den = self.integer_form()
        r = math.isqrt(e * e * D)  # e sqrt(D) is irrational, so never an integer
        fl = r if e > 0 else -r - 1
        return (c + fl) // den

    def ceil(self) -> int:
        return -((-self).floor())

    def __floor__(self):
        return self.floor()

    def mod1(self) -> "ExactScalar":
        """The representative of ``self`` in [0, 1)."""
        f = self.floor()
        return ExactScalar._make(self.a - f, self.b, self.D) if f else self

    def scaled_floor(self, bits: int) -> int:
        """``floor(self * 2**bits)`` computed exactly."""
        return (self * (1 << bits) if bits >= 0 else self / (1 << -bits)).floor()

    # -- floats -----------------------------------------------------------

    def to_float(self) -> tuple[float, float]:
        """Nearest double and an upper bound on its absolute error."""
        if self.b == 0:
            v = float(self.a)
            if Fraction(v) == self.a:
                return v, 0.0
            return v, math.ulp(v) / 2 if v else 5e-324
        bits = 80 - int(math.floor(self.log2_abs()))
        v = float(Fraction(self.scaled_floor(bits), 1 << bits) if bits >= 0
                  else Fraction(self.scaled_floor(bits) << -bits))
        return v, math.ulp(v)

    def __float__(self):
        return self.to_float()[0]

    def log2_abs(self) -> float:
        """log2|self| to double accuracy, for magnitudes far outside float range."""
        x = abs(self)
        if not x:
            return -math.inf
        if x.b == 0:
            return math.log2(x.a.numerator) - math.log2(x.a.denominator)
        bits = 64
        n = x.scaled_floor(bits)
        while n < (1 << 52):
            bits += max(64, bits)
            n = x.scaled_floor(bits)
        return math.log2(n) - bits

    # -- text -------------------------------------------------------------

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        rat = f"{self.a} + " if self.a else ""
        return f"{rat}{self.b}*sqrt({self.D})"

    def __repr__(self) -> str:
        return f"ExactScalar({self})"

    def integer_form(self) -> tuple[int, int, int, int]:
        """``(c, e, D, den)`` with ``self == (c + e*sqrt(D)) / den``."""
        den = self.a.denominator * self.b.denominator // math.gcd(
            self.a.denominator, self.b.denominator)
        return (int(self.a * den), int(self.b * den), self.D, den)


ZERO = ExactScalar(Fraction(0))
ONE = ExactScalar(Fraction(1))


def compare(x: Number, y: Number) -> int:
    """Exact trichotomy: LT (-1), EQ (0) or GT (1)."""
    return (ExactScalar.coerce(x) - ExactScalar.coerce(y)).sign()


def mod1(x: Number) -> ExactScalar:
    return ExactScalar.coerce(x).mod1()


def to_float(x: Number) -> tuple[float, float]:
    return ExactScalar.coerce(x).to_float()


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)|(sqrt)|(.))")


def _tokenize(text: str) -> list[str]:
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        tok = m.group(1) or m.group(2) or m.group(3)
        if tok.strip():
            out.append(tok)
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expect=None):
        tok = self.peek()
        if tok is None or (expect is not None and tok != expect):
            raise PreconditionError(f"cannot parse exact scalar {self.text!r}")
        self.i += 1
        return tok

    def expr(self) -> ExactScalar:
        val = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self) -> ExactScalar:
        val = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.factor()
            val = val * rhs if op == "*" else val / rhs
        return val

    def factor(self) -> ExactScalar:
        tok = self.peek()
        if tok in ("+", "-"):
            self.take()
            val = self.factor()
            return -val if tok == "-" else val
        if tok == "(":
            self.take()
            val = self.expr()
            self.take(")")
            return val
        if tok == "sqrt":
            self.take()
            if self.peek() == "(":
                self.take()
                n = self.take()
                self.take(")")
            else:
                n = self.take()
            if not n.isdigit():
                raise PreconditionError(f"sqrt needs an integer radicand in {self.text!r}")
            return ExactScalar.sqrt(int(n))
        if tok is not None and tok[0].isdigit():
            self.take()
            return ExactScalar(Fraction(tok))
        raise PreconditionError(f"cannot parse exact scalar {self.text!r}")


def parse(text: Union[str, int, float]) -> ExactScalar:
    """Parse forms such as ``"3/8"``, ``"(sqrt5-1)/2"`` or ``"1/2 + 1/2*sqrt(5)"``.

    Decimal literals are read exactly (``"0.35"`` is 7/20).
    """
    if isinstance(text, bool):
        raise PreconditionError("booleans are not scalars")
    if isinstance(text, int):
        return ExactScalar(Fraction(text))
    if isinstance(text, float):
        return ExactScalar(Fraction(repr(text)))
    p = _Parser(str(text))
    val = p.expr()
    if p.peek() is not None:
        raise PreconditionError(f"trailing input in exact scalar {text!r}")
    return val
