"""Packing numbers, Minkowski-dimension slope statistics and content ratios."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import PreconditionError, SpaceMismatchError
from .exact import ExactScalar, Number
from .groups import (GroupPoint, PAdicPoint, PAdicSpace, TorusPoint, TorusSpace, ball_measure,
                     distance, grid_shape, padic_radius_exponent, space_of)


@dataclass(frozen=True)
class PackingResult:
    """N(eps): size of a 2eps-separated subset; exact unless method == 'greedy'."""

    eps: Fraction
    N: int
    method: str

    @property
    def exact(self) -> bool:
        return self.method != "greedy"


def _eps(eps: Number) -> Fraction:
    e = ExactScalar.coerce(eps)
    if e.sign() <= 0:
        raise PreconditionError("packing radius must be positive")
    if not e.is_rational:
        raise PreconditionError("packing radius must be rational")
    return e.as_fraction()


def trivial_bound(space, eps: Number) -> int:
    """mu(G) / ball_measure(eps) * c4/c3, rounded up: no 2eps-packing can beat it."""
    eps = _eps(eps)
    b = ball_measure(space, eps).as_fraction()
    return math.ceil(Fraction(1) / b * (space.c4 / space.c3))


def _padic_classes(values: Sequence[int], prime: int, depth: int, eps: Fraction) -> int:
    # v(x - y) <= t  <=>  p^-v >= 2 eps, with t the largest such exponent
    if 2 * eps > 1:
        return 1 if len(values) else 0
    t = 0
    while t < depth and Fraction(1, prime ** (t + 1)) >= 2 * eps:
        t += 1
    return len({v % prime ** (t + 1) for v in values})


def _circle_exact(coords: list, eps: Fraction) -> int:
    """Maximum 2eps-separated subset of a few exact points on T^1 (greedy from every start)."""
    pts = sorted(set(coords))
    n = len(pts)
    if n <= 1:
        return n
    sep = ExactScalar(2 * eps)
    best = 1
    for s in range(n):
        order = pts[s:] + [p + 1 for p in pts[:s]]
        first = last = order[0]
        count = 1
        for p in order[1:]:
            if p - last >= sep and first + 1 - p >= sep:
                count += 1
                last = p
        best = max(best, count)
    return best


def _greedy(points: list, eps: Fraction) -> int:
    sep = ExactScalar(2 * eps)
    chosen: list = []
    for p in points:
        if all(not distance(p, c) < sep for c in chosen):
            chosen.append(p)
    return len(chosen)


def packing_number(points: Sequence[GroupPoint], eps: Number) -> PackingResult:
    """Packing number of a finite point set at scale eps (separation >= 2 eps)."""
    eps = _eps(eps)
    pts = list(points)
    if not pts:
        return PackingResult(eps, 0, "exact-1d")
    space = space_of(pts[0])
    if any(space_of(p) != space for p in pts):
        raise SpaceMismatchError("points from different spaces")
    if isinstance(space, PAdicSpace):
        return PackingResult(eps, _padic_classes([p.value for p in pts], space.prime,
                                                 space.depth, eps), "exact-ultrametric")
    if space.dim == 1:
        return PackingResult(eps, _circle_exact([p.coords[0] for p in pts], eps), "exact-1d")
    return PackingResult(eps, _greedy(pts, eps), "greedy")


def is_maximal_packing(points: Sequence[GroupPoint], chosen: Sequence[GroupPoint],
                       eps: Number) -> bool:
    """No input point is >= 2 eps from every chosen point."""
    sep = ExactScalar(2 * _eps(eps))
    return all(any(distance(p, c) < sep for c in chosen) for p in points)


# -- grid sets ---------------------------------------------------------------


@dataclass
class GridSet:
    """Subset of the finite grid of ``space`` at ``resolution``, stored as a boolean mask."""

    space: object
    resolution: int
    mask: np.ndarray

    def __post_init__(self):
        shape = grid_shape(self.space, self.resolution)
        self.mask = np.asarray(self.mask, dtype=bool).reshape(shape)

    @property
    def size(self) -> int:
        return self.mask.size

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def measure(self) -> Fraction:
        return Fraction(self.count, self.size)

    def indices(self) -> np.ndarray:
        """Lattice indices (count, d) of the members, row-major order."""
        return np.argwhere(self.mask)

    def spacing(self) -> Fraction:
        return Fraction(1, self.mask.shape[0])

    def check_spacing(self, eps: Number) -> None:
        eps = _eps(eps)
        if self.spacing() > eps / 4:
            raise PreconditionError(f"grid spacing {self.spacing()} exceeds eps/4 = {eps / 4}")

    def dilate(self, eps: Number) -> "GridSet":
        """Grid points within eps (max-norm / ultrametric) of a member."""
        eps = _eps(eps)
        if isinstance(self.space, PAdicSpace):
            p = self.space.prime
            n = padic_radius_exponent(p, eps)
            M = self.mask.size
            m = min(n, round(math.log(M, p)))
            vals = np.nonzero(self.mask)[0]
            classes = np.zeros(p ** m, dtype=bool)
            classes[vals % p ** m] = True
            return GridSet(self.space, self.resolution, classes[np.arange(M) % p ** m])
        from scipy.ndimage import maximum_filter
        w = math.floor(eps * self.mask.shape[0])
        if 2 * w + 1 >= self.mask.shape[0]:
            full = np.full(self.mask.shape, self.count > 0)
            return GridSet(self.space, self.resolution, full)
        out = maximum_filter(self.mask, size=2 * w + 1, mode="wrap")
        return GridSet(self.space, self.resolution, out)

    def packing(self, eps: Number, check: bool = True) -> PackingResult:
        eps = _eps(eps)
        if check:
            self.check_spacing(eps)
        if isinstance(self.space, PAdicSpace):
            vals = np.nonzero(self.mask.ravel())[0]
            return PackingResult(eps, _padic_classes(vals.tolist(), self.space.prime,
                                                     self.space.depth, eps), "exact-ultrametric")
        R = self.mask.shape[0]
        T = math.ceil(2 * eps * R)
        if self.space.dim == 1:
            pos = np.nonzero(self.mask)[0].astype(np.int64)
            return PackingResult(eps, int(kernels.circle_packing(pos, R, T)), "exact-1d")
        return PackingResult(eps, _grid_greedy(self.indices(), R, T), "greedy")


def _grid_greedy(idx: np.ndarray, R: int, T: int) -> int:
    """Greedy T-separated (max-norm, wrapping) subset of lattice points, cell-bucketed."""
    if idx.shape[0] == 0:
        return 0
    if 2 * T > R:
        return 1
    d = idx.shape[1]
    cells: dict = {}
    count = 0
    offsets = list(itertools.product((-1, 0, 1), repeat=d))
    ncell = max(1, R // T)
    for row in idx.tolist():
        key = tuple(v // T % ncell for v in row)
        ok = True
        for off in offsets:
            nb = tuple((k + o) % ncell for k, o in zip(key, off))
            for other in cells.get(nb, ()):
                if all(min(abs(a - b), R - abs(a - b)) < T for a, b in zip(row, other)):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            cells.setdefault(key, []).append(row)
            count += 1
    return count


# -- slope statistics -------------------------------------------------------


@dataclass(frozen=True)
class DimensionEstimate:
    """log N against -log eps: regression slope and consecutive-pair slopes."""

    samples: tuple
    slope: float
    min_slope: float
    max_slope: float
    r2: float
    pair_slopes: tuple


def dimension_estimate(series: Sequence) -> DimensionEstimate:
    """Slope statistics of a series of (eps, N) with eps strictly decreasing, N >= 1."""
    if len(series) < 2:
        raise PreconditionError("dimension_estimate needs at least 2 samples")
    xs, ys = [], []
    prev = None
    for eps, N in series:
        eps = Fraction(eps) if not isinstance(eps, float) else eps
        if prev is not None and not eps < prev:
            raise PreconditionError("eps must be strictly decreasing")
        if N < 1:
            raise PreconditionError("packing numbers must be >= 1")
        prev = eps
        xs.append(-math.log(eps))
        ys.append(math.log(N))
    x, y = np.asarray(xs), np.asarray(ys)
    pair = tuple(float((y[i + 1] - y[i]) / (x[i + 1] - x[i])) for i in range(len(x) - 1))
    if len(x) == 2:
        slope, r2 = pair[0], 1.0
    else:
        slope, icpt = np.polyfit(x, y, 1)
        resid = y - (slope * x + icpt)
        ss = float(((y - y.mean()) ** 2).sum())
        r2 = 1.0 - float((resid ** 2).sum()) / ss if ss > 0 else 1.0
        # polyfit rounding can leave the slope a hair outside the pair range
        slope = float(min(max(slope, min(pair)), max(pair)))
    return DimensionEstimate(tuple(zip(xs, ys)), float(slope), min(pair), max(pair),
                             float(r2), pair)


# -- content -----------------------------------------------------------------


@dataclass(frozen=True)
class ContentEstimate:
    s: float
    samples: tuple  # (eps, exact excess measure, ratio)
    min_ratio: float
    max_ratio: float
    last_ratio: float


def content_estimate(S, s: float, eps_grid: Sequence[Number], d: Optional[int] = None
                     ) -> ContentEstimate:
    """(mu(S_eps) - mu(S)) / eps^(d - s) over ``eps_grid``.

    ``S`` is a target set (exact dilation) or a :class:`GridSet` (lattice dilation).
    """
    space = S.space
    d = space.d if d is None else d
    if s > d:
        raise PreconditionError(f"content exponent s = {s} exceeds d = {d}")
    base = S.measure()
    base = base.as_fraction() if isinstance(base, ExactScalar) else Fraction(base)
    rows = []
    for eps in eps_grid:
        e = _eps(eps)
        m = S.dilate(e).measure()
        m = m.as_fraction() if isinstance(m, ExactScalar) else Fraction(m)
        excess = m - base
        ratio = float(excess) / float(e) ** (d - s) if s < d else float(excess)
        rows.append((e, excess, ratio))
    if not rows:
        raise PreconditionError("empty eps grid")
    ratios = [r for _, _, r in rows]
    return ContentEstimate(float(s), tuple(rows), min(ratios), max(ratios), ratios[-1])
