"""Vectorized numpy kernels: same contract as the compiled ones, no numba needed."""

import numpy as np

MAXU = np.uint64(0xFFFFFFFFFFFFFFFF)


def _torus_chi(pos, err, lo, ln, full):
    """Membership of positions ``pos`` (N, d) with error margins ``err`` (N,)."""
    margin = (err + np.uint64(3))[:, None]
    N = pos.shape[0]
    inside = np.zeros(N, dtype=bool)
    outside = np.ones(N, dtype=bool)
    for b in range(lo.shape[0]):
        t = pos - lo[b][None, :]
        L = ln[b][None, :]
        ax_in = full[b][None, :] | ((t >= margin) & (L >= margin) & (t <= L - margin))
        ax_out = (~full[b][None, :] & (L <= MAXU - margin) & (t >= L + margin)
                  & (t <= MAXU - margin))
        inside |= ax_in.all(axis=1)
        outside &= ax_out.any(axis=1)
    chi = np.where(inside, 1, np.where(outside, 0, -1)).astype(np.int8)
    return chi


def torus_sweep(x, err0, g, lo, ln, full, plo, qlo, phi, qhi, n, j0, hits0):
    N = x.shape[0]
    status = np.zeros(N, np.int64)
    jat = np.asarray(j0, np.int64).copy()
    hat = np.asarray(hits0, np.int64).copy()
    active = np.nonzero(jat < n)[0]
    while active.size:
        j = jat[active]
        ju = j.astype(np.uint64)
        pos = x[active] + ju[:, None] * g[None, :]
        chi = _torus_chi(pos, err0[active] + ju, lo, ln, full)
        amb = chi < 0
        status[active[amb]] = -1
        ok = ~amb
        act = active[ok]
        hits = hat[act] + chi[ok]
        hat[act] = hits
        jj = j[ok] + 1
        jat[act] = jj
        pos_ok = hits * qhi > jj * phi
        fail = ~pos_ok & (hits * qlo <= jj * plo)
        lvl = ~pos_ok & ~fail
        status[act[fail]] = jj[fail]
        status[act[lvl]] = -2
        active = act[pos_ok & (jj < n)]
    return status, jat, hat


def torus_chi_at(x, err0, g, lo, ln, full, idx):
    out = np.empty((x.shape[0], len(idx)), np.int8)
    for i, j in enumerate(idx):
        ju = np.uint64(j)
        pos = x + ju * g[None, :]
        out[:, i] = _torus_chi(pos, err0 + ju, lo, ln, full)
    return out


def _mulmod(a, b, mod):
    """(a * b) % mod elementwise for int64 arrays with values below 2^62."""
    a = np.asarray(a, np.int64) % mod
    b = np.asarray(b, np.int64).copy()
    a, b = np.broadcast_arrays(a, b)
    a, b = a.copy(), b.copy()
    r = np.zeros_like(a)
    while (b > 0).any():
        odd = (b & 1) == 1
        r = np.where(odd, (r + a) % mod, r)
        a = (a + a) % mod
        b >>= 1
    return r


def _padic_chi(pos, res, mods):
    hit = np.zeros(pos.shape, dtype=bool)
    for r, m in zip(res, mods):
        hit |= (pos % m) == r
    return hit.astype(np.int64)


def padic_sweep(x, g, modulus, res, mods, plo, qlo, phi, qhi, n, j0, hits0):
    N = x.shape[0]
    status = np.zeros(N, np.int64)
    jat = np.asarray(j0, np.int64).copy()
    hat = np.asarray(hits0, np.int64).copy()
    active = np.nonzero(jat < n)[0]
    pos = np.zeros(N, np.int64)
    if active.size:
        pos[active] = (x[active] + _mulmod(jat[active], g, modulus)) % modulus
    while active.size:
        hits = hat[active] + _padic_chi(pos[active], res, mods)
        hat[active] = hits
        pos[active] = (pos[active] + g) % modulus
        jj = jat[active] + 1
        jat[active] = jj
        pos_ok = hits * qhi > jj * phi
        fail = ~pos_ok & (hits * qlo <= jj * plo)
        lvl = ~pos_ok & ~fail
        status[active[fail]] = jj[fail]
        status[active[lvl]] = -2
        active = active[pos_ok & (jj < n)]
    return status, jat, hat


def padic_chi_at(x, g, modulus, res, mods, idx):
    out = np.empty((x.shape[0], len(idx)), np.int8)
    for i, j in enumerate(idx):
        pos = (x + _mulmod(j, g, modulus)) % modulus
        out[:, i] = _padic_chi(pos, res, mods)
    return out


def circle_packing(pos, R, T):
    """Maximum T-separated subset of sorted distinct lattice points on Z/RZ."""
    n = pos.shape[0]
    if n == 0:
        return 0
    if 2 * T > R:
        return 1
    u = np.concatenate([pos, pos + R, [1 << 62]]).astype(np.int64)
    nxt = np.searchsorted(u[:2 * n], u[:2 * n] + T)
    up = [np.concatenate([nxt, [2 * n]])]
    while (1 << len(up)) <= n:
        up.append(up[-1][up[-1]])
    cur = np.arange(n)
    count = np.ones(n, np.int64)
    limit = u[:n] + R - T
    for k in range(len(up) - 1, -1, -1):
        nx = up[k][cur]
        ok = (nx < 2 * n) & (u[nx] <= limit)
        cur = np.where(ok, nx, cur)
        count += ok.astype(np.int64) << k
    return int(count.max())
