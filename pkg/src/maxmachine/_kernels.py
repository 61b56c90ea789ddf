"""Numba kernels over packed bit rows.

All kernels take the packed ``uint64`` word arrays of :class:`BinaryMatrix`
directly. Dimension ``L`` (one past the last explicit dimension) is the
always-active clamped dimension. Dimension ``i`` beats ``j`` when its
reliability is larger, or equal with a smaller index.
"""

import numpy as np
from numba import njit, prange

NONE = -1


@njit(inline="always")
def getbit(words, i, j):
    return (words[i, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)


@njit(inline="always")
def setbit(words, i, j, v):
    b = np.uint64(1) << np.uint64(j & 63)
    if v:
        words[i, j >> 6] |= b
    else:
        words[i, j >> 6] &= ~b


@njit(inline="always")
def beats(i, j, rel):
    if j == NONE:
        return True
    return rel[i] > rel[j] or (rel[i] == rel[j] and i < j)


@njit(inline="always")
def insert_top2(a1, a2, k, l, rel):
    if beats(l, a1[k], rel):
        a2[k] = a1[k]
        a1[k] = l
    elif beats(l, a2[k], rel):
        a2[k] = l


@njit(cache=True)
def row_lists(words, rows, cols):
    """CSR lists of set columns for each row."""
    ptr = np.zeros(rows + 1, dtype=np.int64)
    for i in range(rows):
        c = 0
        for j in range(cols):
            if getbit(words, i, j):
                c += 1
        ptr[i + 1] = ptr[i] + c
    idx = np.empty(ptr[rows], dtype=np.int64)
    for i in range(rows):
        k = ptr[i]
        for j in range(cols):
            if getbit(words, i, j):
                idx[k] = j
                k += 1
    return ptr, idx


@njit(cache=True)
def col_lists(words, rows, cols):
    """CSR lists of set rows for each column."""
    cnt = np.zeros(cols, dtype=np.int64)
    for i in range(rows):
        for j in range(cols):
            if getbit(words, i, j):
                cnt[j] += 1
    ptr = np.zeros(cols + 1, dtype=np.int64)
    for j in range(cols):
        ptr[j + 1] = ptr[j] + cnt[j]
    fill = ptr[:-1].copy()
    idx = np.empty(ptr[cols], dtype=np.int64)
    for i in range(rows):
        for j in range(cols):
            if getbit(words, i, j):
                idx[fill[j]] = i
                fill[j] += 1
    return ptr, idx


@njit(cache=True)
def _row_winners(zw, n, L, u_ptr, u_idx, rel, best):
    for l in range(L):
        if getbit(zw, n, l):
            for k in range(u_ptr[l], u_ptr[l + 1]):
                d = u_idx[k]
                if beats(l, best[d], rel):
                    best[d] = l


@njit(cache=True)
def cell_winners(zw, uw, rel, N, D, L):
    """Winning dimension for every cell, as an ``(N, D)`` int16 array."""
    u_ptr, u_idx = row_lists(uw, L, D)
    out = np.empty((N, D), dtype=np.int16)
    best = np.empty(D, dtype=np.int64)
    for n in range(N):
        best[:] = L
        _row_winners(zw, n, L, u_ptr, u_idx, rel, best)
        for d in range(D):
            out[n, d] = best[d]
    return out


@njit(cache=True)
def winner_counts(zw, uw, xw, ow, rel, N, D, L):
    """Per-dimension won cells ``t`` and won ones ``c``.

    Only cells whose bit in ``ow`` is set are counted.
    """
    u_ptr, u_idx = row_lists(uw, L, D)
    t = np.zeros(L + 1, dtype=np.int64)
    c = np.zeros(L + 1, dtype=np.int64)
    best = np.empty(D, dtype=np.int64)
    for n in range(N):
        best[:] = L
        _row_winners(zw, n, L, u_ptr, u_idx, rel, best)
        for d in range(D):
            if getbit(ow, n, d):
                w = best[d]
                t[w] += 1
                if getbit(xw, n, d):
                    c[w] += 1
    return t, c


@njit(cache=True)
def gain_table(rel, lr, l1r):
    """``G[c, l, m]``: log-odds gain of letting ``l`` take a cell currently won by ``m``.

    ``c`` is the cell code: observed value 0 or 1, or 2 when unobserved.
    """
    K = len(rel)
    G = np.zeros((3, K, K))
    for l in range(K):
        for m in range(K):
            if rel[l] > rel[m]:
                G[0, l, m] = l1r[l] - l1r[m]
                G[1, l, m] = lr[l] - lr[m]
    return G


@njit(inline="always")
def _recompute_top2(zw, n, uw, d, L, rel, a1, a2, k):
    a1[k] = L
    a2[k] = NONE
    for l in range(L):
        if getbit(zw, n, l) and getbit(uw, l, d):
            insert_top2(a1, a2, k, l, rel)


def _z_rows(zw, uw, xw, ow, czw, rel, lr, l1r, prior, thresh, N, D, L):
    u_ptr, u_idx = row_lists(uw, L, D)
    G = gain_table(rel, lr, l1r)
    for n in prange(N):
        a1 = np.full(D, L, dtype=np.int32)
        a2 = np.full(D, NONE, dtype=np.int32)
        code = np.empty(D, dtype=np.uint8)
        for d in range(D):
            code[d] = getbit(xw, n, d) if getbit(ow, n, d) else 2
        for l in range(L):
            if getbit(zw, n, l):
                for k in range(u_ptr[l], u_ptr[l + 1]):
                    insert_top2(a1, a2, u_idx[k], l, rel)
        for l in range(L):
            if getbit(czw, n, l):
                continue
            cur = getbit(zw, n, l) != 0
            lo = prior[n, l]
            for k in range(u_ptr[l], u_ptr[l + 1]):
                d = u_idx[k]
                m = a2[d] if (cur and a1[d] == l) else a1[d]
                lo += G[code[d], l, m]
            new = lo > thresh[n, l]
            if new != cur:
                setbit(zw, n, l, new)
                for k in range(u_ptr[l], u_ptr[l + 1]):
                    d = u_idx[k]
                    if new:
                        insert_top2(a1, a2, d, l, rel)
                    elif a1[d] == l or a2[d] == l:
                        _recompute_top2(zw, n, uw, d, L, rel, a1, a2, d)


def _u_cols(zw, uw, xw, ow, cuw, rel, lr, l1r, prior_u, thresh, N, D, L):
    z_ptr, z_idx = col_lists(zw, N, L)
    G = gain_table(rel, lr, l1r)
    n_words = uw.shape[1]
    # one word of U columns per task so parallel writes never share a word
    for w in prange(n_words):
        a1 = np.empty(N, dtype=np.int32)
        a2 = np.empty(N, dtype=np.int32)
        code = np.empty(N, dtype=np.uint8)
        for d in range(w * 64, min(D, w * 64 + 64)):
            a1[:] = L
            a2[:] = NONE
            for n in range(N):
                code[n] = getbit(xw, n, d) if getbit(ow, n, d) else 2
            for l in range(L):
                if getbit(uw, l, d):
                    for k in range(z_ptr[l], z_ptr[l + 1]):
                        insert_top2(a1, a2, z_idx[k], l, rel)
            for l in range(L):
                if getbit(cuw, l, d):
                    continue
                cur = getbit(uw, l, d) != 0
                lo = prior_u[l, d]
                for k in range(z_ptr[l], z_ptr[l + 1]):
                    n = z_idx[k]
                    m = a2[n] if (cur and a1[n] == l) else a1[n]
                    lo += G[code[n], l, m]
                new = lo > thresh[l, d]
                if new != cur:
                    setbit(uw, l, d, new)
                    for k in range(z_ptr[l], z_ptr[l + 1]):
                        n = z_idx[k]
                        if new:
                            insert_top2(a1, a2, n, l, rel)
                        elif a1[n] == l or a2[n] == l:
                            _recompute_top2(zw, n, uw, d, L, rel, a1, a2, n)


_z_seq = njit(cache=True)(_z_rows)
_u_seq = njit(cache=True)(_u_cols)
_par = {}


def z_sweep(*args, parallel=False):
    if not parallel:
        return _z_seq(*args)
    if "z" not in _par:
        _par["z"] = njit(parallel=True)(_z_rows)
    return _par["z"](*args)


def u_sweep(*args, parallel=False):
    if not parallel:
        return _u_seq(*args)
    if "u" not in _par:
        _par["u"] = njit(parallel=True)(_u_cols)
    return _par["u"](*args)
