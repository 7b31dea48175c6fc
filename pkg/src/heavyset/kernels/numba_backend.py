"""Compiled kernels (see package docstring for the shared contract)."""

import numpy as np
from numba import njit, prange

MAXU = np.uint64(0xFFFFFFFFFFFFFFFF)
ONEU = np.uint64(1)
THREEU = np.uint64(3)


@njit(cache=True, inline="always")
def _torus_chi(x, m, ju, err, g, lo, ln, full):
    """1 inside, 0 outside, -1 undecidable at this precision."""
    margin = err + ju + THREEU
    amb = False
    for b in range(lo.shape[0]):
        state = 1
        for k in range(x.shape[1]):
            if full[b, k]:
                continue
            t = x[m, k] + ju * g[k] - lo[b, k]
            L = ln[b, k]
            if t >= margin and L >= margin and t <= L - margin:
                continue
            if L <= MAXU - margin and t >= L + margin and t <= MAXU - margin:
                state = 0
                break
            state = -1
        if state == 1:
            return 1
        if state == -1:
            amb = True
    return -1 if amb else 0


@njit(cache=True, parallel=True)
def torus_sweep(x, err0, g, lo, ln, full, plo, qlo, phi, qhi, n, j0, hits0):
    N = x.shape[0]
    status = np.zeros(N, np.int64)
    jat = np.zeros(N, np.int64)
    hat = np.zeros(N, np.int64)
    for m in prange(N):
        hits = hits0[m]
        st = 0
        j = j0[m]
        while j < n:
            c = _torus_chi(x, m, np.uint64(j), err0[m], g, lo, ln, full)
            if c < 0:
                st = -1
                break
            hits += c
            jj = j + 1
            if hits * qhi > jj * phi:
                j = jj
                continue
            if hits * qlo <= jj * plo:
                st = jj
            else:
                st = -2
            j = jj
            break
        status[m] = st
        jat[m] = j
        hat[m] = hits
    return status, jat, hat


@njit(cache=True, parallel=True)
def torus_chi_at(x, err0, g, lo, ln, full, idx):
    N = x.shape[0]
    out = np.empty((N, idx.shape[0]), np.int8)
    for m in prange(N):
        for i in range(idx.shape[0]):
            out[m, i] = _torus_chi(x, m, np.uint64(idx[i]), err0[m], g, lo, ln, full)
    return out


@njit(cache=True)
def _mulmod(a, b, mod):
    r = 0
    a = a % mod
    while b > 0:
        if b & 1:
            r = (r + a) % mod
        a = (a + a) % mod
        b >>= 1
    return r


@njit(cache=True, inline="always")
def _padic_chi(pos, res, mods):
    for b in range(res.shape[0]):
        if pos % mods[b] == res[b]:
            return 1
    return 0


@njit(cache=True, parallel=True)
def padic_sweep(x, g, modulus, res, mods, plo, qlo, phi, qhi, n, j0, hits0):
    N = x.shape[0]
    status = np.zeros(N, np.int64)
    jat = np.zeros(N, np.int64)
    hat = np.zeros(N, np.int64)
    for m in prange(N):
        hits = hits0[m]
        st = 0
        j = j0[m]
        pos = (x[m] + _mulmod(j, g, modulus)) % modulus
        while j < n:
            hits += _padic_chi(pos, res, mods)
            pos = (pos + g) % modulus
            jj = j + 1
            if hits * qhi > jj * phi:
                j = jj
                continue
            if hits * qlo <= jj * plo:
                st = jj
            else:
                st = -2
            j = jj
            break
        status[m] = st
        jat[m] = j
        hat[m] = hits
    return status, jat, hat


@njit(cache=True, parallel=True)
def padic_chi_at(x, g, modulus, res, mods, idx):
    N = x.shape[0]
    out = np.empty((N, idx.shape[0]), np.int8)
    for m in prange(N):
        for i in range(idx.shape[0]):
            pos = (x[m] + _mulmod(idx[i], g, modulus)) % modulus
            out[m, i] = _padic_chi(pos, res, mods)
    return out


@njit(cache=True)
def circle_packing(pos, R, T):
    """Maximum T-separated subset of sorted distinct lattice points on Z/RZ."""
    n = pos.shape[0]
    if n == 0:
        return 0
    if 2 * T > R:
        return 1
    u = np.empty(2 * n + 1, np.int64)
    u[:n] = pos
    u[n:2 * n] = pos + R
    u[2 * n] = 1 << 62
    nxt = np.searchsorted(u[:2 * n], u[:2 * n] + T)
    levels = 1
    while (1 << levels) <= n:
        levels += 1
    up = np.empty((levels, 2 * n + 1), np.int64)
    up[0, :2 * n] = nxt
    up[0, 2 * n] = 2 * n
    for k in range(1, levels):
        for i in range(2 * n + 1):
            up[k, i] = up[k - 1, up[k - 1, i]]
    best = 0
    for s in range(n):
        limit = u[s] + R - T
        cur = s
        count = 1
        for k in range(levels - 1, -1, -1):
            nx = up[k, cur]
            if nx < 2 * n and u[nx] <= limit:
                cur = nx
                count += 1 << k
        if count > best:
            best = count
    return best
