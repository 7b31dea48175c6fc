"""Closed target sets with exact membership, measure and max-norm dilation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import PreconditionError, SpaceMismatchError
from .exact import ExactScalar, Number, parse
from .groups import (GroupPoint, PAdicPoint, PAdicSpace, TorusPoint, TorusSpace,
                     padic_radius_exponent)

ONE = ExactScalar(Fraction(1))
ZERO = ExactScalar(Fraction(0))
FIXED_BITS = 64


def _scalar(x) -> ExactScalar:
    return parse(x) if isinstance(x, (str, float)) else ExactScalar.coerce(x)


@dataclass(frozen=True)
class Arc:
    """Closed arc {start + t : 0 <= t <= length} of R/Z; length >= 1 means the full circle."""

    start: ExactScalar
    length: ExactScalar

    @classmethod
    def from_endpoints(cls, left: Number, right: Number) -> "Arc":
        left, right = _scalar(left), _scalar(right)
        length = right - left
        if length.sign() < 0:  # wraps through 0
            length = length + 1
        return cls(left.mod1(), length)

    @property
    def full(self) -> bool:
        return not self.length < 1

    @property
    def end(self) -> ExactScalar:
        return self.start + self.length

    def contains(self, t: ExactScalar) -> bool:
        return self.full or not self.length < (t - self.start).mod1()

    def distance(self, t: ExactScalar) -> ExactScalar:
        if self.contains(t):
            return ZERO
        a = (self.start - t).mod1()  # forward gap from t to the arc start
        b = (t - self.end).mod1()    # forward gap from the arc end to t
        return min(a, b)

    def dilate(self, eps: ExactScalar) -> "Arc":
        if self.full:
            return self
        length = self.length + 2 * eps
        if not length < 1:
            return Arc(ZERO, ONE)
        return Arc((self.start - eps).mod1(), length)

    def pieces(self) -> list:
        """Non-wrapping [lo, hi] pieces inside [0, 1]."""
        if self.full:
            return [(ZERO, ONE)]
        end = self.end
        if end <= 1:
            return [(self.start, end)]
        return [(self.start, ONE), (ZERO, end - 1)]

    def fixed(self) -> tuple:
        """(floor(start*2^64), floor(length*2^64), full) for the fixed-point kernels."""
        if self.full:
            return 0, 2 ** 64 - 1, True
        return (self.start.scaled_floor(FIXED_BITS) % 2 ** 64,
                min(self.length.scaled_floor(FIXED_BITS), 2 ** 64 - 1), False)

    def __str__(self):
        if self.full:
            return "[0, 1)"
        return f"[{self.start}, {self.end}]"


def _union_measure(boxes: Sequence, dim: int) -> ExactScalar:
    """Exact Lebesgue measure of a union of wrapped boxes by coordinate compression."""
    pieces = []
    for box in boxes:
        per_axis = [arc.pieces() for arc in box]
        pieces.extend(itertools.product(*per_axis))
    if not pieces:
        return ZERO
    breaks = []
    for k in range(dim):
        pts = {ZERO, ONE}
        for pc in pieces:
            pts.add(pc[k][0])
            pts.add(pc[k][1])
        breaks.append(sorted(pts))
    total = ZERO
    for cell in itertools.product(*[range(len(b) - 1) for b in breaks]):
        lo = [breaks[k][c] for k, c in enumerate(cell)]
        hi = [breaks[k][c + 1] for k, c in enumerate(cell)]
        covered = any(all(pc[k][0] <= lo[k] and hi[k] <= pc[k][1] for k in range(dim))
                      for pc in pieces)
        if covered:
            vol = ONE
            for k in range(dim):
                vol = vol * (hi[k] - lo[k])
            total = total + vol
    return total


class BoxUnion:
    """Finite union of closed axis-aligned boxes in T^d (each side an Arc)."""

    def __init__(self, space: TorusSpace, boxes: Sequence):
        self.space = space
        norm = []
        for box in boxes:
            box = tuple(box)
            if len(box) != space.dim:
                raise SpaceMismatchError(f"box of dimension {len(box)} in {space}")
            norm.append(tuple(a if isinstance(a, Arc) else Arc.from_endpoints(*a) for a in box))
        self.boxes = self._normalize(norm)

    def _normalize(self, boxes: list) -> tuple:
        # drop exact duplicates and boxes with a full box present
        out = []
        for b in boxes:
            if all(a.full for a in b):
                return (b,)
            if b not in out:
                out.append(b)
        return tuple(out)

    @property
    def is_full(self) -> bool:
        if any(all(a.full for a in b) for b in self.boxes):
            return True
        return self.measure() == 1

    def _check(self, x: GroupPoint):
        if not isinstance(x, TorusPoint) or x.d != self.space.dim:
            raise SpaceMismatchError(f"point {x} not in {self.space}")

    def contains(self, x: GroupPoint) -> bool:
        self._check(x)
        return any(all(a.contains(t) for a, t in zip(b, x.coords)) for b in self.boxes)

    def distance_to(self, x: GroupPoint) -> ExactScalar:
        """Max-norm distance from x to the set (used as an independent cross-check)."""
        self._check(x)
        return min(max(a.distance(t) for a, t in zip(b, x.coords)) for b in self.boxes)

    def measure(self) -> ExactScalar:
        return _union_measure(self.boxes, self.space.dim)

    def dilate(self, eps: Number) -> "BoxUnion":
        eps = _scalar(eps)
        if eps.sign() <= 0:
            raise PreconditionError("dilation radius must be positive")
        return BoxUnion(self.space, [tuple(a.dilate(eps) for a in b) for b in self.boxes])

    def boundary_dimension(self) -> int:
        return self.space.dim - 1

    @property
    def components(self) -> int:
        return len(self.boxes)

    def kernel_arrays(self) -> tuple:
        """(lo, length, full) arrays of shape (boxes, d) for the fixed-point kernels."""
        B, d = len(self.boxes), self.space.dim
        lo = np.zeros((B, d), dtype=np.uint64)
        ln = np.zeros((B, d), dtype=np.uint64)
        full = np.zeros((B, d), dtype=np.bool_)
        for i, b in enumerate(self.boxes):
            for k, a in enumerate(b):
                s, L, f = a.fixed()
                lo[i, k], ln[i, k], full[i, k] = s, L, f
        return lo, ln, full

    def __repr__(self):
        return f"{type(self).__name__}({', '.join('x'.join(map(str, b)) for b in self.boxes)})"


class IntervalUnion(BoxUnion):
    """Closed intervals on T^1, merged into disjoint arcs."""

    def __init__(self, intervals: Sequence, space: Optional[TorusSpace] = None):
        arcs = [a if isinstance(a, Arc) else Arc.from_endpoints(*a) for a in intervals]
        super().__init__(space or TorusSpace(1), [(a,) for a in _merge_arcs(arcs)])

    @property
    def arcs(self) -> tuple:
        return tuple(b[0] for b in self.boxes)

    def dilate(self, eps: Number) -> "IntervalUnion":
        eps = _scalar(eps)
        if eps.sign() <= 0:
            raise PreconditionError("dilation radius must be positive")
        return IntervalUnion([a.dilate(eps) for a in self.arcs])

    def measure(self) -> ExactScalar:
        return min(sum((a.length for a in self.arcs), ZERO), ONE)

    def boundary_dimension(self) -> int:
        return 0


def _merge_arcs(arcs: list) -> list:
    if any(a.full for a in arcs):
        return [Arc(ZERO, ONE)]
    pieces = sorted((p for a in arcs for p in a.pieces()), key=lambda p: p[0])
    merged: list = []
    for lo, hi in pieces:
        if merged and not merged[-1][1] < lo:
            if merged[-1][1] < hi:
                merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    if not merged:
        return []
    if merged[0][0] == 0 and merged[0][1] == 1:
        return [Arc(ZERO, ONE)]
    # rejoin a run touching 1 with one starting at 0
    if len(merged) > 1 and merged[-1][1] == 1 and merged[0][0] == 0:
        last = merged.pop()
        first = merged.pop(0)
        merged.append([last[0], first[1] + 1])
    return sorted((Arc(lo.mod1() if lo < 1 else lo - 1, hi - lo) for lo, hi in merged),
                  key=lambda a: a.start)


class PAdicBallUnion:
    """Union of clopen balls {x : x = c mod p^r} in Z_p (radius p^-r)."""

    def __init__(self, space: PAdicSpace, balls: Sequence):
        self.space = space
        norm = []
        for c, r in balls:
            r = int(r)
            if not 0 <= r <= space.depth:
                raise PreconditionError(f"ball exponent {r} outside [0, {space.depth}]")
            norm.append((int(c) % space.prime ** r if r else 0, r))
        # balls are nested or disjoint; keep the maximal ones
        norm = sorted(set(norm), key=lambda b: (b[1], b[0]))
        keep: list = []
        for c, r in norm:
            if not any(c % space.prime ** r0 == c0 for c0, r0 in keep if r0 <= r):
                keep.append((c, r))
        self.balls = tuple(keep)

    @classmethod
    def from_radii(cls, space: PAdicSpace, balls: Sequence) -> "PAdicBallUnion":
        out = []
        for c, rad in balls:
            rad = _scalar(rad)
            r = padic_radius_exponent(space.prime, rad)
            if rad != Fraction(1, space.prime ** r):
                raise PreconditionError(f"radius {rad} is not a power of 1/{space.prime}")
            out.append((c, r))
        return cls(space, out)

    @property
    def is_full(self) -> bool:
        return any(r == 0 for _, r in self.balls)

    def _check(self, x: GroupPoint):
        if not isinstance(x, PAdicPoint) or (x.prime, x.depth) != (self.space.prime, self.space.depth):
            raise SpaceMismatchError(f"point {x} not in {self.space}")

    def contains(self, x: GroupPoint) -> bool:
        self._check(x)
        v = x.value
        return any(v % self.space.prime ** r == c for c, r in self.balls)

    def distance_to(self, x: GroupPoint) -> ExactScalar:
        self._check(x)
        best = None
        p = self.space.prime
        for c, r in self.balls:
            diff = (x.value - c) % self.space.modulus
            v = 0
            while v < self.space.depth and diff % p ** (v + 1) == 0:
                v += 1
            dist = ZERO if v >= r else ExactScalar(Fraction(1, p ** v))
            best = dist if best is None else min(best, dist)
        return best if best is not None else ONE

    def measure(self) -> ExactScalar:
        return ExactScalar(sum((Fraction(1, self.space.prime ** r) for _, r in self.balls),
                               Fraction(0)))

    def dilate(self, eps: Number) -> "PAdicBallUnion":
        eps = _scalar(eps)
        n = padic_radius_exponent(self.space.prime, eps)
        return PAdicBallUnion(self.space, [(c, min(r, n)) for c, r in self.balls])

    def boundary_dimension(self) -> int:
        return 0

    @property
    def components(self) -> int:
        return len(self.balls)

    def kernel_arrays(self) -> tuple:
        """(residues, moduli) int64 arrays for the p-adic kernel."""
        res = np.array([c for c, _ in self.balls], dtype=np.int64)
        mod = np.array([self.space.prime ** r for _, r in self.balls], dtype=np.int64)
        return res, mod

    def __repr__(self):
        return f"PAdicBallUnion({self.space}, {list(self.balls)})"


TargetSet = Union[BoxUnion, IntervalUnion, PAdicBallUnion]


def contains(A: TargetSet, x: GroupPoint) -> bool:
    return A.contains(x)


def measure(A: TargetSet) -> ExactScalar:
    return A.measure()


def dilate(A: TargetSet, eps: Number) -> TargetSet:
    return A.dilate(eps)


def boundary_dimension(A: TargetSet) -> int:
    return A.boundary_dimension()


@dataclass(frozen=True)
class ContentCertificate:
    """mu(A_eps) - mu(A) <= c1 eps^(d-s) on [eps_min, eps_max] (tau: fallback exponent slack)."""

    s: int
    c1: Fraction
    eps_min: ExactScalar
    eps_max: ExactScalar
    growth: tuple
    analytic_c1: Optional[Fraction] = None
    tau: Optional[Fraction] = None

    def holds(self, d: int) -> bool:
        c1 = self.c1
        return all(not c1 * ExactScalar.coerce(e) ** (d - self.s) < g
                   for e, g in self.growth)


def content_certificate(A: TargetSet, eps_grid: Sequence[Number]) -> ContentCertificate:
    """Smallest c1 with mu(A_eps) - mu(A) <= c1 eps^(d - psi) on the grid."""
    eps_list = [_scalar(e) for e in eps_grid]
    if not eps_list:
        raise PreconditionError("empty epsilon grid")
    d = A.space.d
    s = A.boundary_dimension()
    base = A.measure()
    growth = []
    best = Fraction(0)
    for e in eps_list:
        Ae = A.dilate(e)
        if isinstance(A, IntervalUnion) and Ae.components != A.components:
            raise PreconditionError(f"eps = {e} merges components; grid above degeneracy threshold")
        g = Ae.measure() - base
        growth.append((e, g))
        ratio = g / e ** (d - s)
        best = max(best, ratio.as_fraction() if ratio.is_rational else Fraction(ratio.ceil()))
    analytic = Fraction(2 * A.components) if isinstance(A, IntervalUnion) else None
    return ContentCertificate(s, best, min(eps_list), max(eps_list), tuple(growth), analytic)


def parse_target(space, kind: str, items) -> TargetSet:
    """Build a target from config syntax: intervals / boxes / padic_balls."""
    if kind == "intervals":
        if not isinstance(space, TorusSpace) or space.dim != 1:
            raise SpaceMismatchError("intervals need a 1-torus")
        return IntervalUnion([(l, r) for l, r in items])
    if kind == "boxes":
        if not isinstance(space, TorusSpace):
            raise SpaceMismatchError("boxes need a torus")
        return BoxUnion(space, [[tuple(side) for side in box] for box in items])
    if kind == "padic_balls":
        if not isinstance(space, PAdicSpace):
            raise SpaceMismatchError("padic_balls need a p-adic space")
        return PAdicBallUnion.from_radii(space, [(c, rad) for c, rad in items])
    raise PreconditionError(f"unknown set kind {kind!r}")
