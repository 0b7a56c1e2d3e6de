"""Compiled exhaustive-enumeration kernel.

For every bond mask in ``[start, stop)`` the kernel evaluates, per vertex
``x``, the indicators needed by the oracles and adds them to integer
histograms indexed by a *weight key*: the vector of occupied-bond counts per
weight class, packed mixed-radix.  All configurations with the same key have
the same probability, so the histograms are independent of ``p`` and exact.

Per configuration the kernel uses:

* ``cnt[s, v]``: number of occupied paths ``s -> v`` (DAG, exact integers);
* pivotal test: ``b`` is pivotal for ``s -> x`` iff it is occupied and
  ``cnt[s, tail] * cnt[head, x] == cnt[s, x] > 0`` (every path uses ``b``);
* double connection ``s => x`` iff ``s == x`` or ``s -> x`` has no pivotal
  bond (Menger);
* ``C~^b(v)`` by one forward sweep over bonds in tail order.

Bonds must be sorted by tail vertex index and vertex indices must increase
with time, which ``ModelSpec`` guarantees.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _path_counts(mask, nv, n_sites, tails, heads, cnt):
    for s in range(nv):
        for v in range(nv):
            cnt[s, v] = 0
        cnt[s, s] = 1
    for b in range(tails.shape[0]):
        if (mask >> b) & 1:
            t = tails[b]
            h = heads[b]
            top = (t // n_sites + 1) * n_sites
            for s in range(top):
                c = cnt[s, t]
                if c != 0:
                    cnt[s, h] += c


@njit(cache=True)
def _reach_without(mask, s, forbidden, tails, heads):
    r = np.int64(1) << s
    for b in range(tails.shape[0]):
        if b != forbidden and (mask >> b) & 1 and (r >> tails[b]) & 1:
            r |= np.int64(1) << heads[b]
    return r


@njit(cache=True)
def _is_pivotal(b, s, x, cnt, tails, heads):
    total = cnt[s, x]
    return total > 0 and cnt[s, tails[b]] * cnt[heads[b], x] == total


@njit(cache=True)
def _double_connected(s, x, occ, n_occ, cnt, tails, heads):
    if s == x:
        return True
    if cnt[s, x] == 0:
        return False
    for i in range(n_occ):
        if _is_pivotal(occ[i], s, x, cnt, tails, heads):
            return False
    return True


@njit(cache=True)
def _stage(d, b, prev_head, mask, nv, occ, n_occ, cnt, tails, heads, eok, pivc):
    """Fill ``eok[d, y] = E(b, y; C~^b(prev_head))`` and ``pivc[d, y] = |piv(b_bar, y)|``."""
    C = _reach_without(mask, prev_head, b, tails, heads)
    h = heads[b]
    for y in range(nv):
        eok[d, y] = False
        pivc[d, y] = 0
        if not (C >> y) & 1 or cnt[h, y] == 0:
            continue
        ok = True
        pc = 0
        for i in range(n_occ):
            b2 = occ[i]
            if _is_pivotal(b2, h, y, cnt, tails, heads):
                pc += 1
                if (C >> tails[b2]) & 1:
                    ok = False
                    break
        eok[d, y] = ok
        pivc[d, y] = pc


@njit(cache=True)
def scan_range(start, stop, nv, n_sites, origin, tails, heads, bond_class, strides,
               n_max, reach, pi, pij, extra):
    """Accumulate oracle histograms over masks ``start <= mask < stop``.

    Output arrays (all int64, updated in place):

    * ``reach[key, x]``: ``o -> x``
    * ``pi[N, key, x]``: number of bond sequences with ``E~^(N)(x)`` (``N=0``:
      indicator of ``o => x``)
    * ``pij[N, j, key, x]``: ``sum_{b_vec, b} 1{E~ and (b = b_j or b in piv(b_bar_j, b_under_{j+1}))}``
    * ``extra[N, j, key, x]``: same with ``b in piv(...)`` only, counted as
      ``|piv(...)|``
    """
    nb = tails.shape[0]
    cnt = np.zeros((nv, nv), dtype=np.int64)
    occ = np.zeros(nb, dtype=np.int64)
    depth_cap = max(n_max, 1)
    eok = np.zeros((depth_cap, nv), dtype=np.bool_)
    pivc = np.zeros((depth_cap, nv), dtype=np.int64)
    bsel = np.zeros(depth_cap, dtype=np.int64)
    it = np.zeros(depth_cap, dtype=np.int64)
    pathpiv = np.zeros(depth_cap, dtype=np.int64)
    dbl_o = np.zeros(nv, dtype=np.bool_)

    for mask in range(start, stop):
        key = 0
        n_occ = 0
        for b in range(nb):
            if (mask >> b) & 1:
                occ[n_occ] = b
                n_occ += 1
                key += strides[bond_class[b]]
        _path_counts(mask, nv, n_sites, tails, heads, cnt)
        for x in range(nv):
            if cnt[origin, x] > 0:
                reach[key, x] += 1
            dbl_o[x] = _double_connected(origin, x, occ, n_occ, cnt, tails, heads)
            if dbl_o[x]:
                pi[0, key, x] += 1
        if n_max < 1:
            continue

        d = 0
        it[0] = 0
        while d >= 0:
            if it[d] >= n_occ:
                d -= 1
                continue
            b = occ[it[d]]
            it[d] += 1
            if d == 0:
                if not dbl_o[tails[b]]:
                    continue
                prev_head = origin
            else:
                if not eok[d - 1, tails[b]]:
                    continue
                pathpiv[d - 1] = pivc[d - 1, tails[b]]
                prev_head = heads[bsel[d - 1]]
            bsel[d] = b
            _stage(d, b, prev_head, mask, nv, occ, n_occ, cnt, tails, heads, eok, pivc)
            N = d + 1
            for x in range(nv):
                if not eok[d, x]:
                    continue
                pi[N, key, x] += 1
                for j in range(N):
                    if j < d:
                        extra[N, j, key, x] += pathpiv[j]
                        y = tails[bsel[j + 1]]
                    else:
                        extra[N, j, key, x] += pivc[d, x]
                        y = x
                    hj = heads[bsel[j]]
                    c = 0
                    for b2 in range(nb):
                        if b2 == bsel[j]:
                            c += 1
                        elif (mask >> b2) & 1 and _is_pivotal(b2, hj, y, cnt, tails, heads):
                            c += 1
                    pij[N, j, key, x] += c
            if N < n_max:
                d += 1
                it[d] = 0


def allocate(n_keys: int, nv: int, n_max: int):
    jdim = max(n_max, 1)
    reach = np.zeros((n_keys, nv), dtype=np.int64)
    pi = np.zeros((n_max + 1, n_keys, nv), dtype=np.int64)
    pij = np.zeros((n_max + 1, jdim, n_keys, nv), dtype=np.int64)
    extra = np.zeros((n_max + 1, jdim, n_keys, nv), dtype=np.int64)
    return reach, pi, pij, extra
