"""Birkhoff deficits, finite-horizon heavy sets and the staged Y/Z construction.

Exact single-orbit operations (``deficit_trace``, ``is_heavy``, ...) run in
``ExactScalar`` arithmetic. Grid-scale sweeps go through
:class:`Sweeper`, which runs a fixed-point kernel and settles every step the
kernel flags as undecidable with exact arithmetic, so grid verdicts are exact
as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .diophantine import BelowApprox, best_lower_rational
from .errors import PreconditionError, ResourceCapError, UnsupportedFieldError
from .exact import ExactScalar, Number
from .groups import (DEFAULT_GRID_CAP, GroupPoint, PAdicPoint, PAdicSpace, TorusPoint,
                     TorusSpace, grid_points, grid_shape, multiple, translate)
from .targets import PAdicBallUnion, TargetSet

DEFAULT_HORIZON_CAP = 10 ** 9
_LEVEL_BOUND = 1 << 62


# -- schedule --------------------------------------------------------------


def iroot(x: int, k: int) -> int:
    """floor(x ** (1/k)) for nonnegative integers."""
    if x < 0 or k < 1:
        raise PreconditionError("iroot needs x >= 0, k >= 1")
    if x < 2:
        return x
    r = int(round(x ** (1.0 / k))) if x.bit_length() < 1000 else 1 << (x.bit_length() // k + 1)
    r = max(r, 1)
    while r ** k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def inv_sqrt(n: int) -> ExactScalar:
    """n^(-1/2) as an exact quadratic irrational (or rational for perfect squares)."""
    return ExactScalar(Fraction(0), Fraction(1, n), n)


@dataclass(frozen=True)
class Schedule:
    """One proof stage: horizon n_i and resolution eps_i tied to p_i/q_i."""

    index: int
    p: int
    q: int
    k: Optional[int]
    psi: int
    d: int
    n: int
    eps: Fraction
    exponent: Optional[Fraction]
    branch: str = "irrational"

    @property
    def level(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def n_exact(self) -> bool:
        """True when q^(2k/(d-psi)) is an integer, i.e. no flooring happened."""
        if self.exponent is None:
            return True
        e = self.exponent
        return iroot(self.q ** e.numerator, e.denominator) ** e.denominator == self.q ** e.numerator

    @property
    def eps_exact(self) -> bool:
        return ExactScalar(self.eps) == inv_sqrt(self.n)


def make_schedule(seq: BelowApprox, psi: int, d: int,
                  horizon_cap: int = DEFAULT_HORIZON_CAP) -> list:
    """n_i = floor(q_i^(2k/(d-psi))); eps_i = n_i^(-1/2), rounded down to den <= q_i^2 if irrational."""
    if not psi < d:
        raise PreconditionError(f"need psi < d (psi = {psi}, d = {d})")
    e = Fraction(2 * seq.k, d - psi)
    out = []
    for i, entry in enumerate(seq.entries):
        if entry.q ** e.numerator > horizon_cap ** e.denominator:
            raise ResourceCapError(f"stage {i}: horizon q^{e} exceeds cap {horizon_cap}")
        n = iroot(entry.q ** e.numerator, e.denominator)
        r = math.isqrt(n)
        # exact when n is a square, otherwise the largest r <= n^(-1/2) with den <= q^2
        eps = Fraction(1, r) if r * r == n else best_lower_rational(inv_sqrt(n), entry.q ** 2)
        out.append(Schedule(i, entry.p, entry.q, seq.k, psi, d, n, eps, e))
    return out


def rational_schedule(mu: Fraction, horizons: Sequence[int], psi: int, d: int) -> list:
    """Rational-measure branch: level mu itself, n_i from ``horizons``, eps_i ~ n_i^(-1/2)."""
    mu = Fraction(mu)
    out = []
    for i, n in enumerate(horizons):
        n = int(n)
        if n < 1:
            raise PreconditionError("horizons must be >= 1")
        eps = best_lower_rational(inv_sqrt(n), n)
        out.append(Schedule(i, mu.numerator, mu.denominator, None, psi, d, n, eps, None,
                            branch="rational"))
    return out


# -- exact single-orbit operations -----------------------------------------


@dataclass
class DeficitTrace:
    """Partial sums S_1..S_n of chi_A(x + j g) - level along one orbit."""

    x: GroupPoint
    g: GroupPoint
    n: int
    level: ExactScalar
    chi: list
    sums: list
    variant: str = "X"

    def increments_ok(self) -> bool:
        prev = ExactScalar(Fraction(0))
        up, down = 1 - self.level, -self.level
        for s in self.sums:
            if s - prev not in (up, down):
                return False
            prev = s
        return True

    def rows(self):
        for j, (c, s) in enumerate(zip(self.chi, self.sums), start=1):
            yield j, c, s


@dataclass(frozen=True)
class HeavyVerdict:
    heavy: bool
    first_failure: Optional[int]
    min_partial_sum: ExactScalar


def _check_fields(*vals):
    D = 0
    for v in vals:
        if v.D:
            if D and v.D != D:
                raise UnsupportedFieldError(f"mixed quadratic fields sqrt({D}) and sqrt({v.D})")
            D = v.D
    return D


def deficit_trace(x: GroupPoint, g: GroupPoint, A: TargetSet, gamma: Number, n: int,
                  variant: str = "X", horizon_cap: int = DEFAULT_HORIZON_CAP) -> DeficitTrace:
    gamma = ExactScalar.coerce(gamma)
    if n < 1:
        raise PreconditionError("horizon must be >= 1")
    if n > horizon_cap:
        raise ResourceCapError(f"horizon {n} exceeds cap {horizon_cap}")
    if gamma.sign() < 0 or 1 < gamma:
        raise PreconditionError("level must lie in [0, 1]")
    chi, sums = [], []
    y = x
    hits = 0
    for j in range(1, n + 1):
        c = 1 if A.contains(y) else 0
        hits += c
        chi.append(c)
        sums.append(hits - j * gamma)
        y = translate(y, g)
    return DeficitTrace(x, g, n, gamma, chi, sums, variant)


def _verdict(trace: DeficitTrace) -> HeavyVerdict:
    first = None
    for j, s in enumerate(trace.sums, start=1):
        if s.sign() <= 0:
            first = j
            break
    return HeavyVerdict(first is None, first, min(trace.sums))


def is_heavy(x: GroupPoint, g: GroupPoint, A: TargetSet, gamma: Number, n: int) -> HeavyVerdict:
    """All partial sums S_1..S_n strictly positive?"""
    return _verdict(deficit_trace(x, g, A, gamma, n))


def degenerate_heavy_set(A: TargetSet):
    """H(A, g) for the trivial measures: A itself when mu(A) = 0, empty when mu(A) = 1.

    Returns None for 0 < mu(A) < 1. With level 0 every S_j counts hits, so a
    point is heavy iff it starts in A; with level 1 every S_j <= 0.
    """
    mu = A.measure()
    if mu.sign() == 0:
        return A
    if mu == 1:
        return ()
    return None


def y_trace(x: GroupPoint, g: GroupPoint, A: TargetSet, sched: Schedule) -> DeficitTrace:
    return deficit_trace(x, g, A.dilate(sched.eps), sched.level, sched.n, variant=f"Y{sched.index}")


def h_Y_verdict(x: GroupPoint, g: GroupPoint, A: TargetSet, sched: Schedule) -> HeavyVerdict:
    """Heaviness of x for the dilated set A_{eps_i} at rational level p_i/q_i, horizon n_i."""
    Ae = A.dilate(sched.eps)
    if Ae.is_full:
        # every step adds 1 - p/q > 0
        level = ExactScalar(sched.level)
        return HeavyVerdict(True, None, 1 - level)
    return _verdict(deficit_trace(x, g, Ae, sched.level, sched.n, variant=f"Y{sched.index}"))


def distinct_sums(x: GroupPoint, g: GroupPoint, A: TargetSet, sched: Schedule) -> tuple:
    """(#distinct Y partial sums, all sums in (1/q_i)Z and 1/q_i-separated)."""
    tr = y_trace(x, g, A, sched)
    vals = sorted(set(s.as_fraction() for s in tr.sums))
    q = sched.q
    on_lattice = all((v * q).denominator == 1 for v in vals)
    separated = all(b - a >= Fraction(1, q) for a, b in zip(vals, vals[1:]))
    return len(vals), on_lattice and separated


def measure_estimate(pred: Callable, space, resolution: int,
                     cap: int = DEFAULT_GRID_CAP) -> Fraction:
    """Fraction of grid points satisfying ``pred``."""
    pts = grid_points(space, resolution, cap)
    return Fraction(sum(1 for p in pts if pred(p)), len(pts))


# -- fixed-point sweeps ----------------------------------------------------


def level_envelope(level: Number, n: int) -> tuple:
    """Integers (plo, qlo, phi, qhi) with plo/qlo <= level <= phi/qhi, overflow-safe up to n."""
    level = ExactScalar.coerce(level)
    if level.is_rational:
        f = level.as_fraction()
        if (n + 1) * max(f.numerator, f.denominator, 1) >= _LEVEL_BOUND:
            raise ResourceCapError(f"level {f} too fine for horizon {n}")
        return f.numerator, f.denominator, f.numerator, f.denominator
    qmax = _LEVEL_BOUND // (n + 2)
    lo = best_lower_rational(level, qmax)
    hi = -best_lower_rational(-level, qmax)
    return lo.numerator, lo.denominator, hi.numerator, hi.denominator


def _fixed(x: ExactScalar) -> int:
    return x.mod1().scaled_floor(64)


def torus_grid_fixed(idx: np.ndarray, R: int) -> np.ndarray:
    """floor(idx * 2^64 / R) exactly, as uint64."""
    qR, rR = divmod(1 << 64, R)
    idx = np.asarray(idx, dtype=np.int64)
    hi = idx.astype(np.uint64) * np.uint64(qR)
    lo = ((idx * rR) // R).astype(np.uint64) if R < (1 << 31) else np.array(
        [(int(v) * rR) // R for v in idx.ravel()], dtype=np.uint64).reshape(idx.shape)
    return hi + lo


class Sweeper:
    """Exact heaviness verdicts for many start points under one translation.

    ``target`` and ``level`` fix the deficit variable; ``g`` is the step.
    """

    def __init__(self, space, target: TargetSet, level: Number, g: GroupPoint,
                 backend: Optional[str] = None):
        self.space = space
        self.target = target
        self.level = ExactScalar.coerce(level)
        self.g = g
        self.backend = backend
        if isinstance(space, TorusSpace):
            if not isinstance(g, TorusPoint) or g.d != space.dim:
                raise PreconditionError(f"step {g} not in {space}")
            # coordinates never mix, so each axis only needs one quadratic field
            for k, c in enumerate(g.coords):
                _check_fields(c, *(v for b in target.boxes for v in (b[k].start, b[k].length)))
            self.g_fixed = np.array([_fixed(c) for c in g.coords], dtype=np.uint64)
            self.arrays = target.kernel_arrays()
        else:
            if not isinstance(g, PAdicPoint):
                raise PreconditionError(f"step {g} not in {space}")
            self.g_int = g.value
            self.arrays = target.kernel_arrays()
        self.full = target.is_full

    # point encodings ------------------------------------------------------

    def encode(self, points: Sequence[GroupPoint]) -> np.ndarray:
        if isinstance(self.space, TorusSpace):
            return np.array([[_fixed(c) for c in p.coords] for p in points],
                            dtype=np.uint64).reshape(len(points), self.space.dim)
        return np.array([p.value for p in points], dtype=np.int64)

    def _run(self, xs, err0, n, j0, h0, env):
        plo, qlo, phi, qhi = env
        if isinstance(self.space, TorusSpace):
            lo, ln, full = self.arrays
            return kernels.torus_sweep(xs, err0, self.g_fixed, lo, ln, full,
                                       plo, qlo, phi, qhi, n, j0, h0, name=self.backend)
        res, mods = self.arrays
        return kernels.padic_sweep(xs, self.g_int, self.space.modulus, res, mods,
                                   plo, qlo, phi, qhi, n, j0, h0, name=self.backend)

    def first_failures(self, xs: np.ndarray, n: int,
                       exact_point: Callable[[int], GroupPoint],
                       err0: Optional[np.ndarray] = None) -> np.ndarray:
        """Status per point: 0 if heavy through n, else the first j with S_j <= 0.

        ``xs`` is the kernel encoding of the points; ``exact_point(i)`` returns
        point i exactly and is only called for steps the kernel cannot decide.
        On the torus, ``err0[i]`` bounds how far (in units of 2^-64) the true
        point lies above its encoding; the default 1 fits ``encode``.
        """
        N = xs.shape[0]
        if err0 is None:
            err0 = np.ones(N, dtype=np.uint64)
        if N == 0:
            return np.zeros(0, dtype=np.int64)
        if self.full and 1 - self.level > 0:
            return np.zeros(N, dtype=np.int64)
        env = level_envelope(self.level, n)
        j0 = np.zeros(N, dtype=np.int64)
        h0 = np.zeros(N, dtype=np.int64)
        status, jat, hat = self._run(xs, err0, n, j0, h0, env)
        todo = np.nonzero(status < 0)[0]
        while todo.size:
            restart, rj, rh = [], [], []
            for i in todo:
                j, h = int(jat[i]), int(hat[i])
                if status[i] == kernels.AMBIG_MEMBER:
                    y = translate(exact_point(int(i)), multiple(self.g, j))
                    h += 1 if self.target.contains(y) else 0
                    j += 1
                if (h - j * self.level).sign() <= 0:
                    status[i] = j
                elif j >= n:
                    status[i] = 0
                else:
                    restart.append(i)
                    rj.append(j)
                    rh.append(h)
            if not restart:
                break
            idx = np.array(restart, dtype=np.int64)
            st, ja, ha = self._run(xs[idx], err0[idx], n, np.array(rj, dtype=np.int64),
                                   np.array(rh, dtype=np.int64), env)
            status[idx], jat[idx], hat[idx] = st, ja, ha
            todo = idx[st < 0]
        return status

    def verdicts(self, points: Sequence[GroupPoint], n: int) -> np.ndarray:
        pts = list(points)
        return self.first_failures(self.encode(pts), n, lambda i: pts[i])

    def chi_matrix(self, xs: np.ndarray, idx: Sequence[int],
                   exact_point: Callable[[int], GroupPoint]) -> np.ndarray:
        """chi_A(x_m + idx[i] g) for all m, i, exactly."""
        idx = np.asarray(idx, dtype=np.int64)
        if isinstance(self.space, TorusSpace):
            lo, ln, full = self.arrays
            err0 = np.ones(xs.shape[0], dtype=np.uint64)
            chi = kernels.torus_chi_at(xs, err0, self.g_fixed, lo, ln, full, idx,
                                       name=self.backend)
        else:
            res, mods = self.arrays
            chi = kernels.padic_chi_at(xs, self.g_int, self.space.modulus, res, mods, idx,
                                       name=self.backend)
        for m, i in zip(*np.nonzero(chi < 0)):
            y = translate(exact_point(int(m)), multiple(self.g, int(idx[i])))
            chi[m, i] = 1 if self.target.contains(y) else 0
        return chi


@dataclass
class GridVerdicts:
    """First-failure status for every grid point (grid order of ``grid_points``)."""

    space: object
    resolution: int
    shape: tuple
    status: np.ndarray
    n: int

    def heavy_at(self, n: Optional[int] = None) -> np.ndarray:
        n = self.n if n is None else n
        if n > self.n:
            raise PreconditionError("cannot extend verdicts beyond the swept horizon")
        return (self.status == 0) | (self.status > n)

    def mask(self, n: Optional[int] = None) -> np.ndarray:
        return self.heavy_at(n).reshape(self.shape)


def grid_encoding(space, resolution: int, cap: int = DEFAULT_GRID_CAP):
    """(kernel encoding, exact_point callback, shape) for the whole grid."""
    shape = grid_shape(space, resolution)
    size = math.prod(shape)
    if size > cap:
        raise ResourceCapError(f"grid of {size} points exceeds cap {cap}")
    if isinstance(space, TorusSpace):
        R = resolution
        idx = np.indices(shape).reshape(space.dim, -1).T
        xs = torus_grid_fixed(idx, R)

        def exact_point(i):
            return TorusPoint(tuple(ExactScalar(Fraction(int(v), R)) for v in idx[i]))
    else:
        xs = np.arange(size, dtype=np.int64)

        def exact_point(i):
            return space.point(int(i))
    return xs, exact_point, shape


def heavy_grid(space, A: TargetSet, level: Number, g: GroupPoint, n: int, resolution: int,
               cap: int = DEFAULT_GRID_CAP, horizon_cap: int = DEFAULT_HORIZON_CAP,
               backend: Optional[str] = None) -> GridVerdicts:
    """Exact first-failure statuses of every grid point at horizon n."""
    if n > horizon_cap:
        raise ResourceCapError(f"horizon {n} exceeds cap {horizon_cap}")
    xs, exact_point, shape = grid_encoding(space, resolution, cap)
    sw = Sweeper(space, A, level, g, backend)
    status = sw.first_failures(xs, n, exact_point)
    return GridVerdicts(space, resolution, shape, status, n)


def h_Y_grid(space, A: TargetSet, g: GroupPoint, sched: Schedule, resolution: int,
             **kw) -> GridVerdicts:
    return heavy_grid(space, A.dilate(sched.eps), sched.level, g, sched.n, resolution, **kw)


def j_count(x: GroupPoint, g: GroupPoint, A: TargetSet, sched: Schedule,
            backend: Optional[str] = None) -> int:
    """J_i(x, g): orbit points x + j g, j < n_i, that are h_Y-heavy."""
    space = _space_of_target(A)
    orbit = []
    y = x
    for _ in range(sched.n):
        orbit.append(y)
        y = translate(y, g)
    sw = Sweeper(space, A.dilate(sched.eps), sched.level, g, backend)
    return int(np.count_nonzero(sw.verdicts(orbit, sched.n) == 0))


def _space_of_target(A: TargetSet):
    return A.space


# -- Monte-Carlo checks ----------------------------------------------------


def random_points(space, count: int, rng: np.random.Generator) -> tuple:
    """Uniform random group points (exact dyadic on the torus) and their encoding."""
    raw = random_raw(space, count, rng)
    return [exact_raw_point(space, r) for r in raw], raw


def random_raw(space, count: int, rng: np.random.Generator) -> np.ndarray:
    """Kernel encodings of uniform random points; on the torus they are exact."""
    if isinstance(space, TorusSpace):
        return rng.integers(0, 1 << 64, size=(count, space.dim), dtype=np.uint64,
                            endpoint=False)
    return rng.integers(0, space.modulus, size=count, dtype=np.int64)


def exact_raw_point(space, raw) -> GroupPoint:
    if isinstance(space, TorusSpace):
        return TorusPoint(tuple(ExactScalar(Fraction(int(v), 1 << 64)) for v in raw))
    return space.point(int(raw))


def _z_samples(space, target, idx, samples: int, rng) -> np.ndarray:
    """chi_target(x + j g) for j in idx and ``samples`` independent uniform (x, g)."""
    xr = random_raw(space, samples, rng)
    gr = random_raw(space, samples, rng)
    out = np.empty((samples, len(idx)), dtype=np.int8)
    nb = kernels.numpy_backend
    if isinstance(space, TorusSpace):
        lo, ln, full = target.kernel_arrays()
        # dyadic samples make x + j g exact in fixed point
        zero = np.zeros(samples, dtype=np.uint64)
        for c, j in enumerate(idx):
            out[:, c] = nb._torus_chi(xr + np.uint64(j) * gr, zero, lo, ln, full)
    else:
        res, mods = target.kernel_arrays()
        M = space.modulus
        for c, j in enumerate(idx):
            out[:, c] = nb._padic_chi((xr + nb._mulmod(gr, int(j), M)) % M, res, mods)
    for s, c in zip(*np.nonzero(out < 0)):
        x, g = exact_raw_point(space, xr[s]), exact_raw_point(space, gr[s])
        out[s, c] = 1 if target.contains(translate(x, multiple(g, int(idx[c])))) else 0
    return out


@dataclass(frozen=True)
class LoeveResult:
    n: int
    samples: int
    lhs: float
    rhs: float
    se: float
    variance: float
    passed: bool

    @property
    def c5(self) -> float:
        """Empirical constant in E max_k |S_k| <= c5 log2(4n) sqrt(n)."""
        return math.sqrt(self.lhs) / (math.log2(4 * self.n) * math.sqrt(self.n))


def loeve_check(n: int, samples: int, seed: int, target: Optional[TargetSet] = None,
                eps: Optional[Number] = None, backend: Optional[str] = None) -> LoeveResult:
    """Monte-Carlo E[(max_k |S_k|)^2] against (log(4n)/log 2)^2 * sum E|Z_j|^2."""
    if seed is None:
        raise PreconditionError("loeve_check needs an explicit seed")
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if target is None:
        from .targets import IntervalUnion
        from .exact import parse
        target = IntervalUnion([(0, parse("(sqrt5-1)/2"))])
    A = target.dilate(eps) if eps is not None else target
    mu = A.measure()
    muf = float(mu)
    var = float(mu * (1 - mu))
    rhs = (math.log(4 * n) / math.log(2)) ** 2 * n * var
    if A.is_full:
        return LoeveResult(n, samples, 0.0, rhs, 0.0, var, True)
    rng = np.random.default_rng(seed)
    chi = _z_samples(A.space, A, np.arange(n), samples, rng)
    S = np.cumsum(chi.astype(np.float64) - muf, axis=1)
    m2 = np.max(np.abs(S), axis=1) ** 2
    lhs = float(m2.mean())
    se = float(m2.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return LoeveResult(n, samples, lhs, rhs, se, var, lhs <= rhs + 3 * se)


@dataclass(frozen=True)
class PairStat:
    i: int
    j: int
    mean: float
    se: float
    passed: bool

    @property
    def z(self) -> float:
        return self.mean / self.se if self.se else 0.0


@dataclass(frozen=True)
class OrthoResult:
    max_abs: float
    pairs: tuple
    mean_zero: tuple
    passed: bool


def orthogonality_check(A: TargetSet, sched: Schedule, pairs: Sequence, samples: int,
                        seed: int, backend: Optional[str] = None) -> OrthoResult:
    """Monte-Carlo E[Z_i Z_j] over G x G for Z_j = chi_{A_eps}(x + j g) - mu(A_eps)."""
    if seed is None:
        raise PreconditionError("orthogonality_check needs an explicit seed")
    Ae = A.dilate(sched.eps)
    mu = float(Ae.measure())
    stats, zero = [], []
    streams = np.random.SeedSequence(seed).spawn(len(pairs))
    for (i, j), ss in zip(pairs, streams):
        if i == j:
            raise PreconditionError("orthogonality needs i != j")
        if Ae.is_full:
            stats.append(PairStat(i, j, 0.0, 0.0, True))
            zero.extend([PairStat(i, i, 0.0, 0.0, True), PairStat(j, j, 0.0, 0.0, True)])
            continue
        chi = _z_samples(Ae.space, Ae, [i, j], samples, np.random.default_rng(ss))
        Z = chi.astype(np.float64) - mu
        prod = Z[:, 0] * Z[:, 1]
        m, se = float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(samples))
        stats.append(PairStat(i, j, m, se, abs(m) <= 4 * se))
        for col, idx in enumerate((i, j)):
            mz, sz = float(Z[:, col].mean()), float(Z[:, col].std(ddof=1) / math.sqrt(samples))
            zero.append(PairStat(idx, idx, mz, sz, abs(mz) <= 4 * sz))
    max_abs = max((abs(s.mean) for s in stats), default=0.0)
    ok = all(s.passed for s in stats) and all(s.passed for s in zero)
    return OrthoResult(max_abs, tuple(stats), tuple(zero), ok)
