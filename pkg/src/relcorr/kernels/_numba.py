"""Numba versions of the kernels in :mod:`._numpy` (same signatures)."""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def union_keys(a, b):
    out = np.empty(a.size + b.size, dtype=np.int64)
    i = j = k = 0
    while i < a.size and j < b.size:
        if a[i] < b[j]:
            out[k] = a[i]
            i += 1
        elif b[j] < a[i]:
            out[k] = b[j]
            j += 1
        else:
            out[k] = a[i]
            i += 1
            j += 1
        k += 1
    while i < a.size:
        out[k] = a[i]
        i += 1
        k += 1
    while j < b.size:
        out[k] = b[j]
        j += 1
        k += 1
    return out[:k].copy()


@njit(cache=True)
def inter_keys(a, b):
    out = np.empty(min(a.size, b.size), dtype=np.int64)
    i = j = k = 0
    while i < a.size and j < b.size:
        if a[i] < b[j]:
            i += 1
        elif b[j] < a[i]:
            j += 1
        else:
            out[k] = a[i]
            i += 1
            j += 1
            k += 1
    return out[:k].copy()


@njit(cache=True)
def diff_keys(a, b):
    out = np.empty(a.size, dtype=np.int64)
    i = j = k = 0
    while i < a.size:
        while j < b.size and b[j] < a[i]:
            j += 1
        if j < b.size and b[j] == a[i]:
            i += 1
            continue
        out[k] = a[i]
        i += 1
        k += 1
    return out[:k].copy()


@njit(cache=True)
def member(keys, query):
    out = np.zeros(query.size, dtype=np.bool_)
    for t in range(query.size):
        x = query[t]
        lo, hi = 0, keys.size
        while lo < hi:
            mid = (lo + hi) // 2
            if keys[mid] < x:
                lo = mid + 1
            else:
                hi = mid
        out[t] = lo < keys.size and keys[lo] == x
    return out


@njit(cache=True)
def converse_keys(keys, n):
    # counting sort on the target; keys are sorted by source, so each
    # bucket comes out already ordered
    start = np.zeros(n + 1, dtype=np.int64)
    for t in range(keys.size):
        start[keys[t] % n + 1] += 1
    for s in range(n):
        start[s + 1] += start[s]
    out = np.empty_like(keys)
    for t in range(keys.size):
        d = keys[t] % n
        out[start[d]] = d * n + keys[t] // n
        start[d] += 1
    return out


@njit(cache=True)
def compose_keys(k1, k2, n):
    indptr = np.zeros(n + 1, dtype=np.int64)
    for t in range(k2.size):
        indptr[k2[t] // n + 1] += 1
    for s in range(n):
        indptr[s + 1] += indptr[s]
    total = 0
    for t in range(k1.size):
        mid = k1[t] % n
        total += indptr[mid + 1] - indptr[mid]
    out = np.empty(total, dtype=np.int64)
    stamp = np.full(n, -1, dtype=np.int64)
    k = 0
    t = 0
    while t < k1.size:
        # one source row at a time; dedupe with a stamp, then sort the row
        src = k1[t] // n
        row_start = k
        while t < k1.size and k1[t] // n == src:
            mid = k1[t] % n
            for u in range(indptr[mid], indptr[mid + 1]):
                c = k2[u] % n
                if stamp[c] != src:
                    stamp[c] = src
                    out[k] = c
                    k += 1
            t += 1
        if (k - row_start) * 16 > n:
            # dense row: a scan of the stamps is cheaper than sorting
            w = row_start
            for c in range(n):
                if stamp[c] == src:
                    out[w] = src * n + c
                    w += 1
        else:
            out[row_start:k].sort()
            for u in range(row_start, k):
                out[u] += src * n
    return out[:k].copy()


@njit(cache=True)
def row_counts(keys, n):
    out = np.zeros(n, dtype=np.int64)
    for t in range(keys.size):
        out[keys[t] // n] += 1
    return out


@njit(cache=True)
def _domvec(m, n):
    full = np.uint64((1 << n) - 1)
    out = np.uint64(0)
    for s in range(n):
        shift = np.uint64(s * n)
        if (m >> shift) & full:
            out |= full << shift
    return out


@njit(cache=True)
def _sweep(n, rels, specs, max_examples):
    m = rels.size
    dom = np.empty(m, dtype=np.uint64)
    for i in range(m):
        dom[i] = _domvec(rels[i], n)
    cd = np.empty((m, specs.size), dtype=np.uint64)
    for i in range(m):
        for r in range(specs.size):
            cd[i, r] = _domvec(specs[r] & rels[i], n)
    mismatches = 0
    ex = np.full((max_examples, 3), -1, dtype=np.int64)
    for i in range(m):
        p = rels[i]
        dp = dom[i]
        for j in range(m):
            q = rels[j]
            dq = dom[j]
            refines = (dp & ~dq) == 0 and (dp & q & ~p) == 0
            witness = -1
            for r in range(specs.size):
                cp = cd[i, r]
                if (cp & ~cd[j, r]) != 0 or (cp & ~specs[r] & q & ~p) != 0:
                    witness = r
                    break
            all_ok = witness == -1
            if refines != all_ok:
                if mismatches < max_examples:
                    ex[mismatches, 0] = i
                    ex[mismatches, 1] = j
                    ex[mismatches, 2] = witness
                mismatches += 1
    return mismatches, ex


def bruteforce_equivalence(n, rels, specs, max_examples):
    rels = np.asarray(rels, dtype=np.uint64)
    specs = np.asarray(specs, dtype=np.uint64)
    count, ex = _sweep(n, rels, specs, max(int(max_examples), 1))
    k = min(count, max_examples)
    return int(count), [tuple(int(v) for v in row) for row in ex[:k]]
