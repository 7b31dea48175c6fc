"""Continued fractions and one-sided (from below) rational approximation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError, ResourceCapError
from .exact import ExactScalar, Number

log = logging.getLogger(__name__)

MAX_LIOUVILLE_BITS = 1 << 22


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients ``terms = (a0, a1, ...)``.

    For a quadratic irrational, ``period`` holds the repeating block and
    ``preperiod`` the number of leading terms outside it; ``terms`` then lists
    only what was requested. A rational source gives a finite expansion.
    """

    terms: tuple
    finite: bool = False
    preperiod: Optional[int] = None
    period: Optional[tuple] = None

    def __post_init__(self):
        if any(a < 1 for a in self.terms[1:]):
            raise PreconditionError("partial quotients a_i (i >= 1) must be >= 1")

    @property
    def periodic(self) -> bool:
        return self.period is not None

    def term(self, i: int) -> int:
        if i < len(self.terms):
            return self.terms[i]
        if self.period is None:
            raise PreconditionError(f"continued fraction has only {len(self.terms)} terms")
        return self.period[(i - self.preperiod) % len(self.period)]

    def available(self) -> float:
        return math.inf if self.period is not None else len(self.terms)

    def __str__(self):
        head = f"[{self.terms[0]}; " + ", ".join(str(a) for a in self.terms[1:])
        if self.period is not None:
            return head + ", ...] period " + str(list(self.period))
        return head + "]"


def cf_expand(gamma: Number, count: int) -> ContinuedFraction:
    """First ``count`` partial quotients of gamma in (0, 1), computed exactly.

    A rational gamma whose expansion ends within ``count`` terms comes back
    with ``finite=True``; a quadratic irrational comes back with its period.
    """
    gamma = ExactScalar.coerce(gamma)
    if not (0 < gamma < 1):
        raise PreconditionError(f"gamma = {gamma} must lie in (0, 1)")
    terms: list = []
    if gamma.is_rational:
        f = gamma.as_fraction()
        while len(terms) < count:
            a = math.floor(f)
            terms.append(a)
            f -= a
            if f == 0:
                return ContinuedFraction(tuple(terms), finite=True)
            f = 1 / f
        return ContinuedFraction(tuple(terms))
    seen: dict = {}
    x = gamma
    while True:
        if x in seen:
            start = seen[x]
            period = tuple(terms[start:])
            cf = ContinuedFraction(tuple(terms), preperiod=start, period=period)
            return ContinuedFraction(tuple(cf.term(i) for i in range(count)),
                                     preperiod=start, period=period)
        seen[x] = len(terms)
        a = x.floor()
        terms.append(a)
        x = (x - a).reciprocal()
        if len(terms) > count + 4096:
            raise ResourceCapError("period of quadratic irrational not found")


def convergents(cf: ContinuedFraction, n: int) -> list:
    """First n convergents (p_j, q_j) via p_j = a_j p_{j-1} + p_{j-2}."""
    if n > cf.available():
        raise PreconditionError(f"requested {n} convergents from a finite expansion of "
                                f"{len(cf.terms)} terms")
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1  # p_{-1}, q_{-1}, p_{-2}, q_{-2}
    for j in range(n):
        a = cf.term(j)
        p, q = a * p0 + p1, a * q0 + q1
        out.append((p, q))
        p1, q1, p0, q0 = p0, q0, p, q
    return out


@dataclass(frozen=True)
class BelowEntry:
    p: int
    q: int
    gap: ExactScalar


@dataclass
class BelowApprox:
    """Rationals p_i/q_i approximating gamma from below to order k with constant c2."""

    gamma: ExactScalar
    entries: list
    k: int = 2
    c2: Fraction = Fraction(1)
    source: str = "convergents"
    notes: list = field(default_factory=list)

    @classmethod
    def from_pairs(cls, gamma: Number, pairs: Sequence, k: int, c2: Number,
                   source: str = "explicit") -> "BelowApprox":
        gamma = ExactScalar.coerce(gamma)
        entries = [BelowEntry(int(p), int(q), gamma - Fraction(int(p), int(q)))
                   for p, q in pairs]
        return cls(gamma, entries, int(k), Fraction(c2), source)

    def violations(self) -> list:
        """Every failed invariant, as human-readable strings (empty if certified)."""
        bad = []
        prev_q = 0
        for i, e in enumerate(self.entries):
            if e.q <= 0:
                bad.append(f"entry {i}: q = {e.q} not positive")
                continue
            if math.gcd(e.p, e.q) != 1:
                bad.append(f"entry {i}: {e.p}/{e.q} not in lowest terms")
            if e.q <= prev_q:
                bad.append(f"entry {i}: q = {e.q} not strictly increasing")
            prev_q = e.q
            if e.gap != self.gamma - Fraction(e.p, e.q):
                bad.append(f"entry {i}: stored gap is wrong")
            if e.gap.sign() < 0:
                bad.append(f"entry {i}: {e.p}/{e.q} lies above gamma")
            if not e.gap < ExactScalar(self.c2 / Fraction(e.q) ** self.k):
                bad.append(f"entry {i}: gap {float(e.gap):.3e} >= c2/q^k")
        return bad

    def certify(self) -> "BelowApprox":
        bad = self.violations()
        if bad:
            raise PreconditionError("below-approximation invariant failed: " + "; ".join(bad))
        return self


def below_sequence(gamma: Number, count: int) -> BelowApprox:
    """Even-indexed convergents of an irrational gamma: k = 2, c2 = 1."""
    gamma = ExactScalar.coerce(gamma)
    if gamma.is_rational:
        raise PreconditionError("gamma is rational; use the rational-measure branch")
    cf = cf_expand(gamma, 2 * count)
    pairs = convergents(cf, 2 * count)[::2]
    return BelowApprox.from_pairs(gamma, pairs, 2, 1, "convergents").certify()


@dataclass(frozen=True)
class OrderEstimate:
    k_hat: float
    intercept: float
    residuals: tuple
    used: int
    excluded: int


def estimate_order(seq: BelowApprox) -> OrderEstimate:
    """Negated least-squares slope of log(gap) against log(q); diagnostic only."""
    xs, ys = [], []
    excluded = 0
    for e in seq.entries:
        if not e.gap:
            excluded += 1
            continue
        xs.append(math.log(e.q))
        ys.append(e.gap.log2_abs() * math.log(2))
    if excluded:
        log.warning("estimate_order: %d zero-gap entries excluded", excluded)
    if len(xs) < 3:
        raise PreconditionError("estimate_order needs at least 3 entries with positive gap")
    x, y = np.asarray(xs), np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return OrderEstimate(float(-slope), float(intercept), tuple(resid.tolist()), len(xs), excluded)


def liouville_below(k: int, levels: int, base: int = 2) -> tuple:
    """gamma = sum_{j<=levels} base^(-n_j), n_1 = 1, n_{j+1} = k n_j, with its truncations.

    Returns ``(gamma, BelowApprox)`` with c2 = 2; gamma is the exact rational
    truncation at the deepest level.
    """
    if k < 2 or base < 2 or levels < 1:
        raise PreconditionError("need k >= 2, base >= 2, levels >= 1")
    if k ** (levels - 1) * math.log2(base) > MAX_LIOUVILLE_BITS:
        raise ResourceCapError("Liouville construction too deep")
    exps = [k ** j for j in range(levels)]
    gamma = sum(Fraction(1, base ** n) for n in exps)
    pairs = []
    partial = Fraction(0)
    for n in exps:
        partial += Fraction(1, base ** n)
        pairs.append((partial.numerator, partial.denominator))
    seq = BelowApprox.from_pairs(gamma, pairs, k, 2, "liouville")
    seq.notes.append(f"gamma is the exact truncation at depth {exps[-1]} (base {base})")
    return ExactScalar(gamma), seq.certify()


def best_lower_rational(theta: Number, max_den: int) -> Fraction:
    """Largest fraction r <= theta with denominator <= max_den.

    The answer is the last lower convergent within range or a semiconvergent
    between it and the next lower convergent.
    """
    theta = ExactScalar.coerce(theta)
    if max_den < 1:
        raise PreconditionError("max_den must be >= 1")
    if theta.is_rational and theta.as_fraction().denominator <= max_den:
        return theta.as_fraction()
    hist = []
    x = theta
    p0, q0, p1, q1 = 1, 0, 0, 1
    while True:
        a = x.floor()
        p, q = a * p0 + p1, a * q0 + q1
        hist.append((p, q))
        if q > max_den:
            break
        rem = x - a
        if not rem:
            break
        x = rem.reciprocal()
        p1, q1, p0, q0 = p0, q0, p, q
    i = max(j for j in range(0, len(hist), 2) if hist[j][1] <= max_den)
    pi, qi = hist[i]
    best = Fraction(pi, qi)
    if i + 1 < len(hist):
        pn, qn = hist[i + 1]
        t = (max_den - qi) // qn
        if t > 0:
            best = max(best, Fraction(pi + t * pn, qi + t * qn))
    return best
