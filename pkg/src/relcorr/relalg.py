"""Binary relations over a finite space and the usual relational calculus.

Two representations share one interface:

* :class:`ExtRelation` stores the pair set explicitly as sorted int64 keys
  ``src * |S| + dst``.
* :class:`LazyRelation` wraps a vectorized pair predicate together with its
  *support*: the variables it reads in the source state and in the target
  state.  Domain, image and cardinality queries evaluate the predicate once
  per combination of supported values only, so a predicate over a few
  variables of a large space stays cheap.

Binary operations keep results extensional whenever one operand is
extensional and the result is a subset of it; otherwise they build lazy
relations by predicate rewriting.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .space import Space, SpaceError, StateSet

# Maximum number of predicate evaluations for one support matrix.
EVAL_BUDGET = 2**27
# Maximum number of pairs an extensional relation may hold.
PAIR_CAP = 2**26
_CHUNK = 2**22


class MaterializationError(RuntimeError):
    """An operation would enumerate more pairs or evaluations than allowed."""


PairFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class Relation:
    space: Space

    # subclasses provide: contains, dom, image, keys, row_counts, support

    @property
    def n(self) -> int:
        return self.space.cardinality

    def __len__(self) -> int:
        return int(self.row_counts().sum())

    def pairs(self) -> list[tuple[int, int]]:
        k = self.keys()
        n = self.n
        return list(zip((k // n).tolist(), (k % n).tolist()))

    def state_pairs(self) -> list[tuple]:
        sa = self.space.state_at
        return [(sa(s), sa(t)) for s, t in self.pairs()]

    def __contains__(self, pair) -> bool:
        s, t = pair
        if not isinstance(s, (int, np.integer)):
            s, t = self.space.index(s), self.space.index(t)
        return bool(self.contains(np.array([s], dtype=np.int64), np.array([t], dtype=np.int64))[0])

    def __or__(self, other):
        return union(self, other)

    def __and__(self, other):
        return inter(self, other)

    def __sub__(self, other):
        return diff(self, other)

    def __invert__(self):
        return complement(self)

    def __matmul__(self, other):
        return compose(self, other)

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        return equals(self, other)

    __hash__ = None  # type: ignore[assignment]

    def __le__(self, other: Relation) -> bool:
        return subset(self, other)

    def __ge__(self, other: Relation) -> bool:
        return subset(other, self)

    @property
    def converse(self) -> Relation:
        return converse(self)


class ExtRelation(Relation):
    def __init__(self, space: Space, keys: np.ndarray, *, presorted: bool = False):
        keys = np.asarray(keys, dtype=np.int64)
        if not presorted:
            keys = np.unique(keys)
        if keys.size > PAIR_CAP:
            raise MaterializationError(f"{keys.size} pairs exceed the pair cap {PAIR_CAP}")
        if keys.size and (keys[0] < 0 or keys[-1] >= space.cardinality**2):
            raise SpaceError("pair key out of range")
        keys.flags.writeable = False
        self.space = space
        self._keys = keys

    def keys(self) -> np.ndarray:
        return self._keys

    @property
    def support(self):
        names = self.space.names
        return names, names

    def contains(self, src, dst) -> np.ndarray:
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        q = (src * self.n + dst).ravel()
        return kernels.member(self._keys, q).reshape(np.shape(src))

    def dom(self) -> StateSet:
        m = np.zeros(self.n, dtype=bool)
        m[self._keys // self.n] = True
        return StateSet(self.space, m)

    def image(self, s: int) -> np.ndarray:
        lo, hi = np.searchsorted(self._keys, [s * self.n, (s + 1) * self.n])
        return self._keys[lo:hi] % self.n

    def row_counts(self) -> np.ndarray:
        return kernels.row_counts(self._keys, self.n)

    def __len__(self) -> int:
        return int(self._keys.size)

    def __repr__(self):
        return f"ExtRelation({self.space.name}, {self._keys.size} pairs)"


class LazyRelation(Relation):
    """Relation given by a vectorized pair predicate.

    ``support`` is ``(src_vars, dst_vars)``: the predicate must depend only on
    those variables of the source and target states.  The predicate is
    evaluated on the product of the two reduced subspaces on first use and
    memoized.
    """

    def __init__(self, space: Space, fn: PairFn, support=None, *, label: str = "lazy",
                 budget: int | None = None):
        self.space = space
        self.fn = fn
        names = space.names
        if support is None:
            support = (names, names)
        src_vars, dst_vars = support
        # keep declaration order so projections are canonical
        self._src_vars = tuple(v for v in names if v in set(src_vars))
        self._dst_vars = tuple(v for v in names if v in set(dst_vars))
        unknown = (set(src_vars) | set(dst_vars)) - set(names)
        if unknown:
            raise SpaceError(f"support mentions unknown variables {sorted(unknown)}")
        self.label = label
        self.budget = EVAL_BUDGET if budget is None else budget
        self._lock = threading.Lock()
        self._matrix: np.ndarray | None = None
        self._dom: StateSet | None = None

    @property
    def support(self):
        return self._src_vars, self._dst_vars

    def __repr__(self):
        return f"LazyRelation({self.space.name}, {self.label})"

    def _matrix_cheap(self, queries: int) -> bool:
        if self._matrix is not None:
            return True
        cells = self.space.sub_cardinality(self._src_vars) * self.space.sub_cardinality(self._dst_vars)
        return cells <= min(self.budget, _CHUNK, 2 * queries)

    def contains(self, src, dst) -> np.ndarray:
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        shape = np.broadcast_shapes(src.shape, dst.shape)
        src, dst = np.broadcast_to(src, shape).ravel(), np.broadcast_to(dst, shape).ravel()
        if self._matrix_cheap(src.size):
            # one evaluation per class pair, then table lookups
            return self.matrix()[self._row_class(src), self._col_class(dst)].reshape(shape)
        out = np.empty(src.size, dtype=bool)
        for lo in range(0, src.size, _CHUNK):
            out[lo:lo + _CHUNK] = self.fn(src[lo:lo + _CHUNK], dst[lo:lo + _CHUNK])
        return out.reshape(shape)

    def matrix(self) -> np.ndarray:
        """Predicate value for every (source class, target class)."""
        with self._lock:
            if self._matrix is None:
                self._matrix = self._build_matrix()
            return self._matrix

    def _build_matrix(self) -> np.ndarray:
        sp = self.space
        rows = sp.sub_cardinality(self._src_vars)
        cols = sp.sub_cardinality(self._dst_vars)
        if rows * cols > self.budget:
            raise MaterializationError(
                f"{self.label}: {rows} x {cols} predicate evaluations exceed budget {self.budget}")
        rep_src = sp.embed(np.arange(rows), self._src_vars)
        rep_dst = sp.embed(np.arange(cols), self._dst_vars)
        m = np.empty((rows, cols), dtype=bool)
        step = max(1, _CHUNK // max(cols, 1))
        for lo in range(0, rows, step):
            block = rep_src[lo:lo + step]
            s = np.repeat(block, cols)
            t = np.tile(rep_dst, block.size)
            m[lo:lo + step] = np.asarray(self.fn(s, t), dtype=bool).reshape(block.size, cols)
        m.flags.writeable = False
        return m

    def _row_class(self, idx) -> np.ndarray:
        return self.space.project(idx, self._src_vars)

    def _col_class(self, idx) -> np.ndarray:
        return self.space.project(idx, self._dst_vars)

    def dom(self) -> StateSet:
        if self._dom is None:
            has = self.matrix().any(axis=1)
            self._dom = StateSet(self.space, has[self._row_class(np.arange(self.n))])
        return self._dom

    def image(self, s: int) -> np.ndarray:
        row = self.matrix()[int(self._row_class(np.int64(s)))]
        return np.flatnonzero(row[self._col_class(np.arange(self.n))])

    def row_counts(self) -> np.ndarray:
        m = self.matrix()
        per_col_class = self.n // self.space.sub_cardinality(self._dst_vars)
        class_counts = m.sum(axis=1).astype(np.int64) * per_col_class
        return class_counts[self._row_class(np.arange(self.n))]

    def keys(self) -> np.ndarray:
        counts = self.row_counts()
        total = int(counts.sum())
        if total > PAIR_CAP:
            raise MaterializationError(f"{self.label}: {total} pairs exceed the pair cap {PAIR_CAP}")
        m = self.matrix()
        n = self.n
        row_cls = self._row_class(np.arange(n))
        col_cls = self._col_class(np.arange(n))
        parts = []
        for c in np.flatnonzero(m.any(axis=1)):
            states = np.flatnonzero(row_cls == c)
            img = np.flatnonzero(m[c][col_cls])
            parts.append((states[:, None] * n + img[None, :]).ravel())
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(parts))


# ---------------------------------------------------------------- constructors


def from_pairs(space: Space, pairs: Iterable[tuple[int, int]]) -> ExtRelation:
    """Relation from (source index, target index) pairs."""
    n = space.cardinality
    arr = np.array(list(pairs), dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise SpaceError("state index out of range")
    return ExtRelation(space, arr[:, 0] * n + arr[:, 1])


def from_state_pairs(space: Space, pairs: Iterable[tuple]) -> ExtRelation:
    return from_pairs(space, ((space.index(s), space.index(t)) for s, t in pairs))


def from_successors(space: Space, succ: np.ndarray) -> ExtRelation:
    """Deterministic relation from a successor array (``-1`` = undefined)."""
    succ = np.asarray(succ, dtype=np.int64)
    src = np.flatnonzero(succ >= 0)
    return ExtRelation(space, src * space.cardinality + succ[src], presorted=True)


def empty(space: Space) -> ExtRelation:
    return ExtRelation(space, np.zeros(0, dtype=np.int64), presorted=True)


def universal(space: Space) -> LazyRelation:
    return LazyRelation(space, lambda s, t: np.ones(s.shape, dtype=bool), ((), ()), label="L")


def identity(space: Space) -> ExtRelation:
    n = space.cardinality
    return ExtRelation(space, np.arange(n, dtype=np.int64) * (n + 1), presorted=True)


def vector_of(a: StateSet) -> LazyRelation:
    """The vector ``a x S``."""
    mask = a.mask
    return LazyRelation(a.space, lambda s, t: mask[s], (a.space.names, ()), label="vector")


def lazy(space: Space, fn: PairFn, support=None, label: str = "lazy") -> LazyRelation:
    return LazyRelation(space, fn, support, label=label)


def materialize(r: Relation) -> ExtRelation:
    if isinstance(r, ExtRelation):
        return r
    return ExtRelation(r.space, r.keys(), presorted=True)


# ---------------------------------------------------------------- operations


def _same(a: Relation, b: Relation):
    if a.space != b.space:
        raise SpaceError(f"relations over different spaces: {a.space.name} vs {b.space.name}")


def _merge_support(a: Relation, b: Relation):
    (sa, da), (sb, db) = a.support, b.support
    return tuple(set(sa) | set(sb)), tuple(set(da) | set(db))


def _split(r: ExtRelation):
    k = r.keys()
    return k // r.n, k % r.n


def union(a: Relation, b: Relation) -> Relation:
    _same(a, b)
    if isinstance(a, ExtRelation) and isinstance(b, ExtRelation):
        return ExtRelation(a.space, kernels.union_keys(a.keys(), b.keys()), presorted=True)
    return LazyRelation(a.space, lambda s, t: a.contains(s, t) | b.contains(s, t),
                        _merge_support(a, b), label="union")


def inter(a: Relation, b: Relation) -> Relation:
    _same(a, b)
    if isinstance(a, ExtRelation) and isinstance(b, ExtRelation):
        return ExtRelation(a.space, kernels.inter_keys(a.keys(), b.keys()), presorted=True)
    if isinstance(b, ExtRelation):
        a, b = b, a
    if isinstance(a, ExtRelation):
        s, t = _split(a)
        return ExtRelation(a.space, a.keys()[b.contains(s, t)], presorted=True)
    return LazyRelation(a.space, lambda s, t: a.contains(s, t) & b.contains(s, t),
                        _merge_support(a, b), label="inter")


def diff(a: Relation, b: Relation) -> Relation:
    _same(a, b)
    if isinstance(a, ExtRelation) and isinstance(b, ExtRelation):
        return ExtRelation(a.space, kernels.diff_keys(a.keys(), b.keys()), presorted=True)
    if isinstance(a, ExtRelation):
        s, t = _split(a)
        return ExtRelation(a.space, a.keys()[~b.contains(s, t)], presorted=True)
    return LazyRelation(a.space, lambda s, t: a.contains(s, t) & ~b.contains(s, t),
                        _merge_support(a, b), label="diff")


def complement(a: Relation) -> LazyRelation:
    return LazyRelation(a.space, lambda s, t: ~a.contains(s, t), a.support, label="complement")


def converse(a: Relation) -> Relation:
    if isinstance(a, ExtRelation):
        return ExtRelation(a.space, kernels.converse_keys(a.keys(), a.n), presorted=True)
    src, dst = a.support
    return LazyRelation(a.space, lambda s, t: a.contains(t, s), (dst, src), label="converse")


def compose(a: Relation, b: Relation) -> ExtRelation:
    """Relational product ``a o b``; both operands are materialized."""
    _same(a, b)
    ka, kb = materialize(a).keys(), materialize(b).keys()
    n = a.n
    deg = np.bincount(kb // n, minlength=n)
    if ka.size and int(deg[ka % n].sum()) > PAIR_CAP:
        raise MaterializationError("composition would exceed the pair cap")
    return ExtRelation(a.space, kernels.compose_keys(ka, kb, n), presorted=True)


def dom(r: Relation) -> StateSet:
    return r.dom()


def dom_vector(r: Relation) -> LazyRelation:
    """``r o L``, i.e. ``dom(r) x S``."""
    return vector_of(r.dom())


def restrict_pre(r: Relation, a: StateSet) -> Relation:
    return inter(r, vector_of(a))


def is_empty(r: Relation) -> bool:
    if isinstance(r, ExtRelation):
        return len(r) == 0
    return not r.dom()


def subset(a: Relation, b: Relation) -> bool:
    return is_empty(diff(a, b))


def equals(a: Relation, b: Relation) -> bool:
    _same(a, b)
    if isinstance(a, ExtRelation) and isinstance(b, ExtRelation):
        return bool(np.array_equal(a.keys(), b.keys()))
    return subset(a, b) and subset(b, a)


# ---------------------------------------------------------------- properties


def is_reflexive(r: Relation) -> bool:
    ar = np.arange(r.n)
    return bool(r.contains(ar, ar).all())


def is_symmetric(r: Relation) -> bool:
    return equals(r, converse(r))


def is_antisymmetric(r: Relation) -> bool:
    return subset(inter(r, converse(r)), identity(r.space))


def is_asymmetric(r: Relation) -> bool:
    return is_empty(inter(r, converse(r)))


def is_transitive(r: Relation) -> bool:
    return subset(compose(r, r), r)


def is_total(r: Relation) -> bool:
    return bool(r.dom().mask.all())


def is_deterministic(r: Relation) -> bool:
    return bool((r.row_counts() <= 1).all())


def is_vector(r: Relation) -> bool:
    c = r.row_counts()
    return bool(((c == 0) | (c == r.n)).all())


PROPERTIES: dict[str, Callable[[Relation], bool]] = {
    "reflexive": is_reflexive,
    "symmetric": is_symmetric,
    "antisymmetric": is_antisymmetric,
    "asymmetric": is_asymmetric,
    "transitive": is_transitive,
    "total": is_total,
    "deterministic": is_deterministic,
    "vector": is_vector,
}


def properties(r: Relation, names: Sequence[str] | None = None) -> dict[str, bool]:
    return {k: PROPERTIES[k](r) for k in (names or PROPERTIES)}
