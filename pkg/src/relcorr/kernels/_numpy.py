"""Pure-numpy kernels.

Relations are sorted, duplicate-free int64 arrays of pair keys
``src * n + dst``.  Small-space brute-force kernels use uint64 bitmasks with
bit ``s * n + t`` set when ``(s, t)`` is in the relation.
"""

import numpy as np

NAME = "numpy"


def union_keys(a, b):
    return np.union1d(a, b)


def inter_keys(a, b):
    return np.intersect1d(a, b, assume_unique=True)


def diff_keys(a, b):
    return np.setdiff1d(a, b, assume_unique=True)


def member(keys, query):
    if keys.size == 0:
        return np.zeros(np.shape(query), dtype=bool)
    pos = np.searchsorted(keys, query)
    pos = np.minimum(pos, keys.size - 1)
    return keys[pos] == query


def converse_keys(keys, n):
    return np.sort((keys % n) * n + keys // n)


def compose_keys(k1, k2, n):
    if k1.size == 0 or k2.size == 0:
        return np.zeros(0, dtype=np.int64)
    src2 = k2 // n
    deg2 = np.bincount(src2, minlength=n)
    indptr = np.concatenate(([0], np.cumsum(deg2)))
    mid = k1 % n
    cnt = deg2[mid]
    total = int(cnt.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    rep_src = np.repeat(k1 // n, cnt)
    within = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    cols = k2[np.repeat(indptr[mid], cnt) + within] % n
    return np.unique(rep_src * n + cols)


def row_counts(keys, n):
    return np.bincount(keys // n, minlength=n)


# ---------------------------------------------------------------- bitmasks


def _domvec(m, n):
    full = np.uint64((1 << n) - 1)
    out = np.zeros_like(m)
    for s in range(n):
        shift = np.uint64(s * n)
        has = ((m >> shift) & full) != 0
        out |= np.where(has, full << shift, np.uint64(0))
    return out


def bruteforce_equivalence(n, rels, specs, max_examples):
    """Compare ``refines(P', P)`` with ``all R: more_correct(P', P, R)``.

    ``rels`` and ``specs`` are uint64 bitmask arrays.  Returns
    (mismatch_count, examples) where each example is (i, j, spec_index) with
    P = rels[i], P' = rels[j], and spec_index = -1 when no single spec
    witnesses the mismatch.
    """
    rels = np.asarray(rels, dtype=np.uint64)
    specs = np.asarray(specs, dtype=np.uint64)
    dom_rels = _domvec(rels, n)
    mismatches = 0
    examples = []
    for i in range(rels.size):
        p, dp = rels[i], dom_rels[i]
        rp = specs & p
        cd_p = _domvec(rp, n)
        for j in range(rels.size):
            q, dq = rels[j], dom_rels[j]
            refines = (dp & ~dq) == 0 and (dp & q & ~p) == 0
            cd_q = _domvec(specs & q, n)
            ok = ((cd_p & ~cd_q) == 0) & ((cd_p & ~specs & q & ~p) == 0)
            all_ok = bool(ok.all())
            if refines != all_ok:
                mismatches += 1
                if len(examples) < max_examples:
                    w = int(np.flatnonzero(~ok)[0]) if not all_ok else -1
                    examples.append((i, j, w))
    return mismatches, examples
