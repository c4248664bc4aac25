"""Pure-numpy polar kernels.

Same schedule, memory layout and list bookkeeping as the numba kernels; the
inner loops are replaced by array operations over node elements and over
alive paths.
"""
from __future__ import annotations

import numpy as np


def polar_transform(u):
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    h = 1
    while h < n:
        v = x.reshape(x.shape[:-1] + (n // (2 * h), 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def _boxplus(a, b, minsum):
    # sign(0) counts as positive, as in the compiled kernel
    s = np.where(a < 0, -1.0, 1.0) * np.where(b < 0, -1.0, 1.0)
    base = s * np.minimum(np.abs(a), np.abs(b))
    if minsum:
        return base
    return base + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def _off(n, d):
    return 2 * n - 2 * (n >> d)


def _frozen_tree(frozen, m):
    levels = [np.asarray(frozen, dtype=bool)]
    for _ in range(m):
        f = levels[-1]
        levels.append(f[0::2] & f[1::2])
    # levels[k] is depth m - k
    return levels[::-1]


def _trailing_zeros(i):
    return (i & -i).bit_length() - 1


def _node_llrs(chan, llr, cw, rows, n, m, d, i, minsum):
    half = n >> d
    o = _off(n, d)
    if d == 1:
        a = chan[:half][None, :]
        b = chan[half:][None, :]
    else:
        po = _off(n, d - 1)
        a = llr[rows, po:po + half]
        b = llr[rows, po + half:po + 2 * half]
    if (i >> (m - d)) & 1:
        llr[rows, o:o + half] = b + (1.0 - 2.0 * cw[rows, o:o + half]) * a
    else:
        llr[rows, o:o + half] = _boxplus(a, b, minsum)


def _climb(cw, rows, n, m, d, idx, cur):
    """cur has shape (len(rows), length): finished codewords of node (d, idx)."""
    while d > 0:
        length = cur.shape[1]
        o = _off(n, d)
        if (idx & 1) == 0:
            cw[rows, o:o + length] = cur
            return
        cur = np.concatenate((cw[rows, o:o + length] ^ cur, cur), axis=1)
        d -= 1
        idx >>= 1


def sc_decode(chan, frozen, m, minsum):
    u, _, _ = scl_decode(chan, frozen, m, 1, minsum)
    return u[0]


def scl_decode(chan, frozen, m, list_size, minsum):
    n = 1 << m
    big_l = list_size
    chan = np.asarray(chan, dtype=float)
    frozen = np.asarray(frozen, dtype=bool)
    af = _frozen_tree(frozen, m)
    llr = np.zeros((big_l, 2 * n))
    cw = np.zeros((big_l, 2 * n), dtype=np.uint8)
    u = np.zeros((big_l, n), dtype=np.uint8)
    pm = np.zeros(big_l)
    alive = np.zeros(big_l, dtype=bool)
    alive[0] = True
    leaf = 2 * n - 2
    i = 0
    while i < n:
        rows = np.flatnonzero(alive)
        d = 1 if i == 0 else m - _trailing_zeros(i)
        skipped = False
        while d <= m:
            j = i >> (m - d)
            if rows.size == 1 and af[d][j]:
                size = n >> d
                _climb(cw, rows, n, m, d, j, np.zeros((1, size), dtype=np.uint8))
                i += size
                skipped = True
                break
            _node_llrs(chan, llr, cw, rows, n, m, d, i, minsum)
            d += 1
        if skipped:
            continue

        lam = llr[rows, leaf]
        if frozen[i]:
            u[rows, i] = 0
            pm[rows] += np.maximum(-lam, 0.0)
        else:
            cand = np.empty(2 * rows.size)
            cand[0::2] = pm[rows] + np.maximum(-lam, 0.0)
            cand[1::2] = pm[rows] + np.maximum(lam, 0.0)
            order = np.argsort(cand, kind="stable")[:big_l]
            keep = np.zeros((big_l, 2), dtype=bool)
            first = np.full(big_l, -1)
            for c in order:
                p = rows[c >> 1]
                keep[p, c & 1] = True
                if first[p] < 0:
                    first[p] = c & 1
            metric = {}
            for c in range(cand.size):
                metric[(rows[c >> 1], c & 1)] = cand[c]
            alive &= keep.any(axis=1)
            occupied = keep.any(axis=1)
            free = iter(np.flatnonzero(~occupied))
            for p in rows:
                if keep[p, 0] and keep[p, 1]:
                    q = next(free)
                    second = 1 - first[p]
                    llr[q, n:] = llr[p, n:]
                    cw[q, n:] = cw[p, n:]
                    u[q, :i] = u[p, :i]
                    u[q, i] = second
                    pm[q] = metric[(p, second)]
                    alive[q] = True
            for p in rows:
                if first[p] >= 0:
                    u[p, i] = first[p]
                    pm[p] = metric[(p, first[p])]

        rows = np.flatnonzero(alive)
        if rows.size == 1:
            pm[rows] = 0.0
        _climb(cw, rows, n, m, m, i, u[rows, i:i + 1].copy())
        i += 1
    return u, pm, alive
