"""numba kernels for the polar transform and the SC / list-SC decoders.

Per-path LLRs live in one flat row of length 2n: the node at depth d
(length n >> d) occupies [2n - 2(n >> d), 2n - (n >> d)).  The left-sibling
codewords use the same layout.  Depth 0 is the channel itself.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def polar_transform(u):
    x = u.copy()
    n = x.shape[0]
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            for t in range(start, start + h):
                x[t] ^= x[t + h]
        h *= 2
    return x


@njit(inline="always")
def _boxplus(a, b, minsum):
    s = 1.0
    if a < 0.0:
        s = -s
    if b < 0.0:
        s = -s
    aa = abs(a)
    bb = abs(b)
    mn = aa if aa < bb else bb
    if minsum:
        return s * mn
    return s * mn + math.log1p(math.exp(-abs(a + b))) - math.log1p(math.exp(-abs(a - b)))


@njit(inline="always")
def _off(n, d):
    return 2 * n - 2 * (n >> d)


@njit(**_OPTS)
def _frozen_tree(frozen, m):
    """all_frozen[(1 << d) - 1 + j]: node j at depth d has only frozen leaves."""
    n = 1 << m
    af = np.zeros(2 * n - 1, dtype=np.bool_)
    base = n - 1
    for i in range(n):
        af[base + i] = frozen[i]
    for d in range(m - 1, -1, -1):
        base = (1 << d) - 1
        child = (1 << (d + 1)) - 1
        for j in range(1 << d):
            af[base + j] = af[child + 2 * j] and af[child + 2 * j + 1]
    return af


@njit(inline="always")
def _trailing_zeros(i):
    c = 0
    while (i & 1) == 0:
        i >>= 1
        c += 1
    return c


@njit(**_OPTS)
def _node_llrs(chan, llr_row, cw_row, n, m, d, i, minsum):
    """Compute the LLRs of the depth-d node on the path to leaf i."""
    half = n >> d
    o = _off(n, d)
    right = (i >> (m - d)) & 1
    if d == 1:
        for t in range(half):
            a = chan[t]
            b = chan[t + half]
            if right:
                llr_row[o + t] = b + (1.0 - 2.0 * cw_row[o + t]) * a
            else:
                llr_row[o + t] = _boxplus(a, b, minsum)
    else:
        po = _off(n, d - 1)
        for t in range(half):
            a = llr_row[po + t]
            b = llr_row[po + t + half]
            if right:
                llr_row[o + t] = b + (1.0 - 2.0 * cw_row[o + t]) * a
            else:
                llr_row[o + t] = _boxplus(a, b, minsum)


@njit(**_OPTS)
def _climb(cw_row, n, m, d, idx, cur, tmp, length):
    """Propagate the finished codeword ``cur[:length]`` of node (d, idx) upwards."""
    while d > 0:
        o = _off(n, d)
        if (idx & 1) == 0:
            for t in range(length):
                cw_row[o + t] = cur[t]
            return
        for t in range(length):
            tmp[t] = cw_row[o + t] ^ cur[t]
            tmp[length + t] = cur[t]
        for t in range(2 * length):
            cur[t] = tmp[t]
        length *= 2
        d -= 1
        idx >>= 1


@njit(**_OPTS)
def sc_decode(chan, frozen, m, minsum):
    """Successive cancellation; returns the decided u vector."""
    n = 1 << m
    af = _frozen_tree(frozen, m)
    llr = np.zeros(2 * n)
    cw = np.zeros(2 * n, dtype=np.uint8)
    u = np.zeros(n, dtype=np.uint8)
    cur = np.zeros(n, dtype=np.uint8)
    tmp = np.zeros(n, dtype=np.uint8)
    i = 0
    while i < n:
        d = 1 if i == 0 else m - _trailing_zeros(i)
        skipped = False
        while d <= m:
            j = i >> (m - d)
            if af[(1 << d) - 1 + j]:
                size = n >> d
                for t in range(size):
                    cur[t] = 0
                _climb(cw, n, m, d, j, cur, tmp, size)
                i += size
                skipped = True
                break
            _node_llrs(chan, llr, cw, n, m, d, i, minsum)
            d += 1
        if skipped:
            continue
        bit = 1 if llr[2 * n - 2] < 0.0 else 0
        u[i] = bit
        cur[0] = bit
        _climb(cw, n, m, m, i, cur, tmp, 1)
        i += 1
    return u


@njit(**_OPTS)
def scl_decode(chan, frozen, m, list_size, minsum):
    """List successive cancellation with the |LLR| path-metric penalty.

    Returns (u, metric, alive) for every list slot.  Path metrics are held
    at zero while a single path is alive.
    """
    n = 1 << m
    big_l = list_size
    af = _frozen_tree(frozen, m)
    llr = np.zeros((big_l, 2 * n))
    cw = np.zeros((big_l, 2 * n), dtype=np.uint8)
    u = np.zeros((big_l, n), dtype=np.uint8)
    pm = np.zeros(big_l)
    alive = np.zeros(big_l, dtype=np.bool_)
    alive[0] = True
    n_alive = 1
    cur = np.zeros(n, dtype=np.uint8)
    tmp = np.zeros(n, dtype=np.uint8)
    cand = np.empty(2 * big_l)
    cand_slot = np.empty(2 * big_l, dtype=np.int64)
    keep = np.zeros((big_l, 2), dtype=np.bool_)
    first = np.zeros(big_l, dtype=np.int64)
    leaf = 2 * n - 2
    i = 0
    while i < n:
        d = 1 if i == 0 else m - _trailing_zeros(i)
        skipped = False
        while d <= m:
            j = i >> (m - d)
            if n_alive == 1 and af[(1 << d) - 1 + j]:
                size = n >> d
                for p in range(big_l):
                    if alive[p]:
                        for t in range(size):
                            cur[t] = 0
                        _climb(cw[p], n, m, d, j, cur, tmp, size)
                i += size
                skipped = True
                break
            for p in range(big_l):
                if alive[p]:
                    _node_llrs(chan, llr[p], cw[p], n, m, d, i, minsum)
            d += 1
        if skipped:
            continue

        if frozen[i]:
            for p in range(big_l):
                if alive[p]:
                    lam = llr[p, leaf]
                    u[p, i] = 0
                    if lam < 0.0:
                        pm[p] -= lam
        else:
            nc = 0
            for p in range(big_l):
                if alive[p]:
                    lam = llr[p, leaf]
                    cand[nc] = pm[p] + (-lam if lam < 0.0 else 0.0)
                    cand_slot[nc] = p
                    cand[nc + 1] = pm[p] + (lam if lam > 0.0 else 0.0)
                    cand_slot[nc + 1] = p
                    nc += 2
            order = np.argsort(cand[:nc], kind="mergesort")
            n_keep = nc if nc < big_l else big_l
            for p in range(big_l):
                keep[p, 0] = False
                keep[p, 1] = False
                first[p] = -1
            for r in range(n_keep):
                c = order[r]
                p = cand_slot[c]
                keep[p, c & 1] = True
                if first[p] < 0:
                    first[p] = c & 1
            for p in range(big_l):
                if alive[p] and not keep[p, 0] and not keep[p, 1]:
                    alive[p] = False
            # second children move into free slots, lowest slot first
            q = 0
            for p in range(big_l):
                if alive[p] and keep[p, 0] and keep[p, 1]:
                    while alive[q] or (keep[q, 0] or keep[q, 1]):
                        q += 1
                    second = 1 - first[p]
                    llr[q, n:] = llr[p, n:]
                    cw[q, n:] = cw[p, n:]
                    u[q, :i] = u[p, :i]
                    u[q, i] = second
                    lam = llr[p, leaf]
                    pm[q] = pm[p]
                    if second == 1 and lam > 0.0:
                        pm[q] += lam
                    elif second == 0 and lam < 0.0:
                        pm[q] -= lam
                    alive[q] = True
                    keep[q, 0] = True
            for p in range(big_l):
                if alive[p] and first[p] >= 0:
                    lam = llr[p, leaf]
                    b = first[p]
                    u[p, i] = b
                    if b == 1 and lam > 0.0:
                        pm[p] += lam
                    elif b == 0 and lam < 0.0:
                        pm[p] -= lam
            n_alive = 0
            for p in range(big_l):
                if alive[p]:
                    n_alive += 1

        if n_alive == 1:
            for p in range(big_l):
                if alive[p]:
                    pm[p] = 0.0
        for p in range(big_l):
            if alive[p]:
                cur[0] = u[p, i]
                _climb(cw[p], n, m, m, i, cur, tmp, 1)
        i += 1
    return u, pm, alive
