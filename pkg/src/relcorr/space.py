"""Finite state spaces, canonical state indexing, and state sets."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

# Spaces above this many states may only be processed row by row.
MATERIALIZATION_CAP = 2**24


class SpaceError(ValueError):
    pass


@dataclass(frozen=True)
class VarDecl:
    """A typed variable with a finite domain.

    ``kind`` is one of ``"int"`` (range ``lo..hi``), ``"char"`` (one character
    of ``alphabet``) or ``"seq"`` (string over ``alphabet`` of length at most
    ``maxlen``).
    """

    name: str
    kind: str
    lo: int = 0
    hi: int = 0
    alphabet: str = ""
    maxlen: int = 0

    def __post_init__(self):
        if self.kind == "int":
            if self.lo > self.hi:
                raise SpaceError(f"empty range {self.lo}..{self.hi} for {self.name!r}")
        elif self.kind in ("char", "seq"):
            if not self.alphabet:
                raise SpaceError(f"empty alphabet for {self.name!r}")
            if len(set(self.alphabet)) != len(self.alphabet):
                raise SpaceError(f"repeated character in alphabet of {self.name!r}")
            if self.kind == "seq" and self.maxlen < 0:
                raise SpaceError(f"negative maxlen for {self.name!r}")
        else:
            raise SpaceError(f"unknown variable kind {self.kind!r}")

    @property
    def cardinality(self) -> int:
        if self.kind == "int":
            return self.hi - self.lo + 1
        if self.kind == "char":
            return len(self.alphabet)
        k = len(self.alphabet)
        return sum(k**i for i in range(self.maxlen + 1))

    def values(self) -> Iterator:
        """Domain values in canonical order."""
        if self.kind == "int":
            yield from range(self.lo, self.hi + 1)
        elif self.kind == "char":
            yield from self.alphabet
        else:
            for length in range(self.maxlen + 1):
                for chars in itertools.product(self.alphabet, repeat=length):
                    yield "".join(chars)

    def ordinal(self, value) -> int:
        if self.kind == "int":
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise SpaceError(f"{self.name}: expected int, got {value!r}")
            if not self.lo <= value <= self.hi:
                raise SpaceError(f"{self.name}={value} outside {self.lo}..{self.hi}")
            return int(value) - self.lo
        if self.kind == "char":
            if not isinstance(value, str) or len(value) != 1 or value not in self.alphabet:
                raise SpaceError(f"{self.name}: {value!r} not in alphabet {self.alphabet!r}")
            return self.alphabet.index(value)
        if not isinstance(value, str) or len(value) > self.maxlen:
            raise SpaceError(f"{self.name}: {value!r} is not a sequence of length <= {self.maxlen}")
        k = len(self.alphabet)
        offset = sum(k**i for i in range(len(value)))
        digits = 0
        for ch in value:
            if ch not in self.alphabet:
                raise SpaceError(f"{self.name}: {ch!r} not in alphabet {self.alphabet!r}")
            digits = digits * k + self.alphabet.index(ch)
        return offset + digits

    def value_at(self, ordinal: int):
        if not 0 <= ordinal < self.cardinality:
            raise SpaceError(f"{self.name}: ordinal {ordinal} out of range")
        if self.kind == "int":
            return self.lo + ordinal
        if self.kind == "char":
            return self.alphabet[ordinal]
        k = len(self.alphabet)
        length = 0
        while ordinal >= k**length:
            ordinal -= k**length
            length += 1
        chars = []
        for _ in range(length):
            ordinal, d = divmod(ordinal, k)
            chars.append(self.alphabet[d])
        return "".join(reversed(chars))

    def source(self) -> str:
        if self.kind == "int":
            return f"{self.name}: int {self.lo}..{self.hi};"
        if self.kind == "char":
            return f'{self.name}: char over "{self.alphabet}";'
        return f'{self.name}: seq over "{self.alphabet}" maxlen {self.maxlen};'

    # Numeric tables used by the vectorized evaluator.  Ints map to their
    # value, chars to their code point, sequences to their ordinal.
    @cached_property
    def numeric_values(self) -> np.ndarray:
        if self.kind == "int":
            return np.arange(self.lo, self.hi + 1, dtype=np.int64)
        if self.kind == "char":
            return np.array([ord(c) for c in self.alphabet], dtype=np.int64)
        return np.arange(self.cardinality, dtype=np.int64)

    @cached_property
    def seq_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """(lengths, codes) for a sequence variable; codes padded with -1."""
        if self.kind != "seq":
            raise SpaceError(f"{self.name} is not a sequence")
        n = self.cardinality
        lengths = np.zeros(n, dtype=np.int64)
        codes = np.full((n, max(self.maxlen, 1)), -1, dtype=np.int64)
        for i, w in enumerate(self.values()):
            lengths[i] = len(w)
            for j, ch in enumerate(w):
                codes[i, j] = ord(ch)
        return lengths, codes


State = tuple


@dataclass(frozen=True)
class Space:
    name: str
    vars: tuple[VarDecl, ...]

    def __post_init__(self):
        names = [v.name for v in self.vars]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise SpaceError(f"duplicate variable name(s) {sorted(dup)} in space {self.name}")
        if not self.vars:
            raise SpaceError(f"space {self.name} declares no variables")

    @property
    def cardinality(self) -> int:
        c = 1
        for v in self.vars:
            c *= v.cardinality
        return c

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars)

    def var(self, name: str) -> VarDecl:
        for v in self.vars:
            if v.name == name:
                return v
        raise KeyError(name)

    def position(self, name: str) -> int:
        return self.names.index(name)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        # row-major: the first declared variable varies slowest
        out = []
        s = 1
        for v in reversed(self.vars):
            out.append(s)
            s *= v.cardinality
        return tuple(reversed(out))

    @cached_property
    def alphabet_codes(self) -> frozenset[int]:
        return frozenset(ord(c) for v in self.vars for c in v.alphabet)

    def index(self, state: Sequence) -> int:
        if len(state) != len(self.vars):
            raise SpaceError(f"state has {len(state)} values, space {self.name} has {len(self.vars)}")
        return sum(v.ordinal(x) * st for v, x, st in zip(self.vars, state, self.strides))

    def state_at(self, i: int) -> State:
        if not 0 <= i < self.cardinality:
            raise SpaceError(f"index {i} out of range for space {self.name} ({self.cardinality} states)")
        return tuple(v.value_at((i // st) % v.cardinality) for v, st in zip(self.vars, self.strides))

    def enumerate(self) -> Iterator[State]:
        return itertools.product(*(list(v.values()) for v in self.vars))

    def as_dict(self, state: Sequence) -> dict:
        return dict(zip(self.names, state))

    def from_dict(self, values: dict) -> State:
        return tuple(values[n] for n in self.names)

    # -- vectorized helpers -------------------------------------------------

    def ordinals(self, idx: np.ndarray, name: str) -> np.ndarray:
        p = self.position(name)
        return (idx // self.strides[p]) % self.vars[p].cardinality

    def column(self, idx: np.ndarray, name: str) -> np.ndarray:
        """Numeric value of variable ``name`` at each state index."""
        return self.var(name).numeric_values[self.ordinals(idx, name)]

    def sub_cardinality(self, names) -> int:
        c = 1
        for n in names:
            c *= self.var(n).cardinality
        return c

    def project(self, idx: np.ndarray, names: Sequence[str]) -> np.ndarray:
        """Mixed-radix index of each state's restriction to ``names``."""
        out = np.zeros(np.shape(idx), dtype=np.int64)
        for n in names:
            out = out * self.var(n).cardinality + self.ordinals(idx, n)
        return out

    def embed(self, sub: np.ndarray, names: Sequence[str]) -> np.ndarray:
        """Inverse of :meth:`project` with every other variable at ordinal 0."""
        sub = np.asarray(sub, dtype=np.int64)
        out = np.zeros(sub.shape, dtype=np.int64)
        for n in reversed(names):
            card = self.var(n).cardinality
            out += (sub % card) * self.strides[self.position(n)]
            sub = sub // card
        return out

    def source(self) -> str:
        body = " ".join(v.source() for v in self.vars)
        return f"space {self.name} {{ {body} }}"


@dataclass(frozen=True, eq=False)
class StateSet:
    """A subset of a space, stored as a dense membership mask."""

    space: Space
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.space.cardinality,):
            raise SpaceError("mask length does not match space cardinality")
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    @classmethod
    def empty(cls, space: Space) -> StateSet:
        return cls(space, np.zeros(space.cardinality, dtype=bool))

    @classmethod
    def full(cls, space: Space) -> StateSet:
        return cls(space, np.ones(space.cardinality, dtype=bool))

    @classmethod
    def from_indices(cls, space: Space, indices) -> StateSet:
        m = np.zeros(space.cardinality, dtype=bool)
        m[np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.int64)] = True
        return cls(space, m)

    @classmethod
    def from_predicate(cls, space: Space, pred) -> StateSet:
        """Build from a Python predicate over state dicts (slow; for oracles)."""
        m = np.fromiter((bool(pred(space.as_dict(s))) for s in space.enumerate()),
                        dtype=bool, count=space.cardinality)
        return cls(space, m)

    def _check(self, other: StateSet):
        if not isinstance(other, StateSet):
            return NotImplemented
        if other.space != self.space:
            raise SpaceError("state sets belong to different spaces")

    def __or__(self, other):
        self._check(other)
        return StateSet(self.space, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return StateSet(self.space, self.mask & other.mask)

    def __sub__(self, other):
        self._check(other)
        return StateSet(self.space, self.mask & ~other.mask)

    def __invert__(self):
        return StateSet(self.space, ~self.mask)

    def complement(self) -> StateSet:
        return ~self

    def __eq__(self, other):
        if not isinstance(other, StateSet):
            return NotImplemented
        return self.space == other.space and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash((self.space, self.mask.tobytes()))

    def __le__(self, other: StateSet) -> bool:
        self._check(other)
        return not bool(np.any(self.mask & ~other.mask))

    def __lt__(self, other: StateSet) -> bool:
        return self <= other and self != other

    def __ge__(self, other: StateSet) -> bool:
        return other <= self

    def __gt__(self, other: StateSet) -> bool:
        return other < self

    def __len__(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __bool__(self) -> bool:
        return bool(self.mask.any())

    def __contains__(self, state) -> bool:
        i = state if isinstance(state, (int, np.integer)) else self.space.index(state)
        return bool(self.mask[i])

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices().tolist())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def states(self) -> list[State]:
        return [self.space.state_at(i) for i in self.indices().tolist()]

    def values_of(self, name: str) -> set:
        """Distinct values variable ``name`` takes over the set."""
        v = self.space.var(name)
        ords = np.unique(self.space.ordinals(self.indices(), name))
        return {v.value_at(int(o)) for o in ords}

    def __repr__(self):
        return f"StateSet({self.space.name}, {len(self)}/{self.space.cardinality})"
