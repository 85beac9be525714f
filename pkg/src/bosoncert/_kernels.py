"""jit-compiled inner loops: Ryser sweeps, rank arithmetic, L1 assignment.

Internal module.  All inputs are validated by the callers; kernels assume
contiguous arrays and an int64 binomial table from fock.binomial_table.
"""

import numpy as np
from numba import config, njit, prange

# campaign workers fork; the omp threading layer aborts forked children
config.THREADING_LAYER = "forksafe"

_FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_FNV_PRIME = np.uint64(0x100000001B3)


@njit(cache=True)
def _unrank_into(k, m, n, binom, out):
    rem = n
    kk = k
    for i in range(m - 1, 0, -1):
        v = 0
        while True:
            x = rem - v
            block = binom[x + i - 1, x]
            if kk < block:
                break
            kk -= block
            v += 1
        out[i] = v
        rem -= v
    out[0] = rem


@njit(cache=True)
def _rank_of(t, m, binom):
    r = np.int64(0)
    rem = np.int64(0)
    for i in range(m):
        rem += t[i]
    for i in range(m - 1, 0, -1):
        ti = t[i]
        if ti > 0:
            r += binom[rem + i, rem] - binom[rem - ti + i, rem - ti]
            rem -= ti
    return r


@njit(cache=True, parallel=True)
def unrank_batch(ranks, m, n, binom):
    out = np.empty((ranks.size, m), dtype=np.int64)
    for idx in prange(ranks.size):
        _unrank_into(ranks[idx], m, n, binom, out[idx])
    return out


@njit(cache=True, parallel=True)
def rank_batch(states, binom):
    k, m = states.shape
    out = np.empty(k, dtype=np.int64)
    for idx in prange(k):
        out[idx] = _rank_of(states[idx], m, binom)
    return out


@njit(cache=True)
def ryser_cplx(a):
    # perm(a) = (-1)^n  sum_{S != 0} (-1)^{|S|} prod_i sum_{j in S} a_ij,
    # subsets visited in Gray-code order so each step updates one column.
    n = a.shape[0]
    row = np.zeros(n, dtype=np.complex128)
    total = 0.0 + 0.0j
    nset = 0
    for g in range(1, 1 << n):
        bit = g & (-g)
        j = 0
        while not (bit >> j) & 1:
            j += 1
        if (g ^ (g >> 1)) & bit:
            for i in range(n):
                row[i] += a[i, j]
            nset += 1
        else:
            for i in range(n):
                row[i] -= a[i, j]
            nset -= 1
        prod = 1.0 + 0.0j
        for i in range(n):
            prod *= row[i]
        if (n - nset) & 1:
            total -= prod
        else:
            total += prod
    return total


@njit(cache=True)
def ryser_real(a):
    n = a.shape[0]
    row = np.zeros(n, dtype=np.float64)
    total = 0.0
    nset = 0
    for g in range(1, 1 << n):
        bit = g & (-g)
        j = 0
        while not (bit >> j) & 1:
            j += 1
        if (g ^ (g >> 1)) & bit:
            for i in range(n):
                row[i] += a[i, j]
            nset += 1
        else:
            for i in range(n):
                row[i] -= a[i, j]
            nset -= 1
        prod = 1.0
        for i in range(n):
            prod *= row[i]
        if (n - nset) & 1:
            total -= prod
        else:
            total += prod
    return total


@njit(cache=True, parallel=True)
def boson_table(u, cols, fact, norm_in, m, n, binom, out):
    # out[k] = |perm(u[rows(k), cols])|^2 / (norm_in * prod_j t_j!)
    d = out.size
    for k in prange(d):
        t = np.empty(m, dtype=np.int64)
        _unrank_into(k, m, n, binom, t)
        rows = np.empty(n, dtype=np.int64)
        q = 0
        tnorm = 1.0
        for i in range(m):
            ti = t[i]
            if ti > 0:
                tnorm *= fact[ti]
                for _ in range(ti):
                    rows[q] = i
                    q += 1
        sub = np.empty((n, n), dtype=np.complex128)
        for r in range(n):
            for c in range(n):
                sub[r, c] = u[rows[r], cols[c]]
        pm = ryser_cplx(sub)
        out[k] = (pm.real * pm.real + pm.imag * pm.imag) / (norm_in * tnorm)


@njit(cache=True, parallel=True)
def distinguishable_table(aprob, cols, fact, m, n, binom, out):
    # out[k] = perm(aprob[rows(k), cols]) / prod_j t_j!
    d = out.size
    for k in prange(d):
        t = np.empty(m, dtype=np.int64)
        _unrank_into(k, m, n, binom, t)
        rows = np.empty(n, dtype=np.int64)
        q = 0
        tnorm = 1.0
        for i in range(m):
            ti = t[i]
            if ti > 0:
                tnorm *= fact[ti]
                for _ in range(ti):
                    rows[q] = i
                    q += 1
        sub = np.empty((n, n), dtype=np.float64)
        for r in range(n):
            for c in range(n):
                sub[r, c] = aprob[rows[r], cols[c]]
        out[k] = ryser_real(sub) / tnorm


@njit(cache=True)
def _nearest_bubble(t, centers, radii):
    # first bubble (construction order) covering t, else nearest center,
    # ties broken by the earlier bubble
    nb, m = centers.shape
    best = -1
    bestd = np.int64(2**62)
    for j in range(nb):
        d = np.int64(0)
        for i in range(m):
            d += abs(t[i] - centers[j, i])
        if d <= radii[j]:
            return j
        if d < bestd:
            bestd = d
            best = j
    return best


@njit(cache=True, parallel=True)
def assign_ranks(ranks, m, n, binom, centers, radii):
    out = np.empty(ranks.size, dtype=np.int64)
    for idx in prange(ranks.size):
        t = np.empty(m, dtype=np.int64)
        _unrank_into(ranks[idx], m, n, binom, t)
        out[idx] = _nearest_bubble(t, centers, radii)
    return out


@njit(cache=True, parallel=True)
def assign_states(states, centers, radii):
    out = np.empty(states.shape[0], dtype=np.int64)
    for idx in prange(states.shape[0]):
        out[idx] = _nearest_bubble(states[idx], centers, radii)
    return out


@njit(cache=True)
def fnv1a64(buf):
    h = _FNV_OFFSET
    for i in range(buf.size):
        h = (h ^ np.uint64(buf[i])) * _FNV_PRIME
    return h
