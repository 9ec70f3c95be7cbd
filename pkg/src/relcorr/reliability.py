"""Exact and sampled reliability of programs under a usage distribution.

Sampling uses xorshift64* (Vigna 2016)::

    x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27
    out = x * 0x2545F4914F6CDD1D  (mod 2**64)

and a uniform double is ``(out >> 11) * 2**-53``.  Draws are grouped in
blocks of ``BLOCK`` samples; block ``b`` is seeded with
``splitmix64(seed + (b + 1) * 0x9E3779B97F4A7C15)`` so any block can be
generated on its own and the estimate does not depend on how blocks are
spread over workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from os import PathLike
from typing import Mapping

import numpy as np

from .correctness import competence_domain, is_correct, order_chain
from .minilang import DEFAULT_FUEL, ProgramDef, extract_function, run_cached
from .relalg import Relation
from .space import Space, StateSet
from .speclang import SpecDef, as_relation, pred_vector

BLOCK = 1024
GOLDEN = 0x9E3779B97F4A7C15
XS_MULT = 0x2545F4914F6CDD1D
_MASK = (1 << 64) - 1


class SupportError(ValueError):
    pass


def splitmix64(x: int) -> int:
    x = (x + GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def block_seed(seed: int, block: int) -> int:
    s = splitmix64((seed + (block + 1) * GOLDEN) & _MASK)
    return s or GOLDEN  # xorshift state must be nonzero


def xorshift64star(state: int, count: int) -> tuple[np.ndarray, int]:
    """``count`` raw outputs from ``state``; returns (outputs, next state)."""
    out = np.empty(count, dtype=np.uint64)
    x = state
    for i in range(count):
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        out[i] = (x * XS_MULT) & _MASK
    return out, x


def uniforms(seed: int, block: int, count: int = BLOCK) -> np.ndarray:
    raw, _ = xorshift64star(block_seed(seed, block), count)
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability weights over a space, zero outside ``support``."""

    space: Space
    weights: np.ndarray = field(repr=False)
    uniform: bool = False

    @property
    def support(self) -> StateSet:
        return StateSet(self.space, self.weights > 0)

    @classmethod
    def uniform_on(cls, states: StateSet) -> Distribution:
        if not states:
            raise SupportError("cannot build a distribution on an empty set")
        w = states.mask.astype(np.float64) / len(states)
        return cls(states.space, w, uniform=True)

    @classmethod
    def from_weights(cls, space: Space, weights: Mapping[int, float] | np.ndarray,
                     support: StateSet | None = None) -> Distribution:
        w = np.zeros(space.cardinality, dtype=np.float64)
        if isinstance(weights, Mapping):
            for i, v in weights.items():
                if not 0 <= i < w.size:
                    raise SupportError(f"state index {i} outside space {space.name}")
                w[i] += v
        else:
            w[:] = np.asarray(weights, dtype=np.float64)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise SupportError("weights must be finite and nonnegative")
        if support is not None:
            stray = np.flatnonzero((w > 0) & ~support.mask)
            if stray.size:
                raise SupportError(f"{stray.size} weighted states lie outside the domain "
                                   f"(first: {int(stray[0])})")
        total = math.fsum(w.tolist())
        if total <= 0:
            raise SupportError("weights sum to zero")
        if abs(total - 1.0) > 1e-12:
            warnings.warn(f"weights sum to {total!r}; normalizing", stacklevel=2)
            w /= total
        return cls(space, w)

    @classmethod
    def from_file(cls, path: str | PathLike, space: Space,
                  support: StateSet | None = None) -> Distribution:
        weights: dict[int, float] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise SupportError(f"{path}:{lineno}: expected 'index weight'")
                try:
                    idx, wt = int(parts[0]), float(parts[1])
                except ValueError:
                    raise SupportError(f"{path}:{lineno}: malformed entry") from None
                weights[idx] = weights.get(idx, 0.0) + wt
        return cls.from_weights(space, weights, support)

    def mass(self, states: StateSet) -> float:
        if self.uniform:
            return len(states & self.support) / len(self.support)
        return math.fsum(self.weights[states.mask].tolist())

    def sample_block(self, seed: int, block: int, count: int = BLOCK) -> np.ndarray:
        """State indices for one block, by inverse-CDF over the support."""
        u = uniforms(seed, block, count)
        idx = np.flatnonzero(self.weights > 0)
        if self.uniform:
            pos = np.minimum((u * idx.size).astype(np.int64), idx.size - 1)
        else:
            cdf = np.cumsum(self.weights[idx])
            pos = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), idx.size - 1)
        return idx[pos]

    def sample(self, n: int, seed: int) -> np.ndarray:
        blocks = [self.sample_block(seed, b, min(BLOCK, n - b * BLOCK))
                  for b in range(-(-n // BLOCK))]
        return np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)


def _check_support(d: Distribution, r: Relation) -> StateSet:
    if d.space != r.space:
        raise SupportError("distribution and relation live on different spaces")
    dom = r.dom()
    if not d.support <= dom:
        raise SupportError("distribution puts weight outside dom(R)")
    return dom


def exact_reliability(p: Relation, r: Relation, d: Distribution | None = None) -> float:
    """Probability that ``p`` runs correctly on a state drawn from ``d``."""
    if d is None:
        d = Distribution.uniform_on(r.dom())
    else:
        _check_support(d, r)
    cd = competence_domain(p, r)
    # ratio form keeps a full competence domain at exactly 1.0
    return d.mass(cd) / d.mass(d.support)


@dataclass(frozen=True)
class Estimate:
    successes: int
    n: int

    @property
    def value(self) -> float:
        return self.successes / self.n

    @property
    def stderr(self) -> float:
        p = self.value
        return math.sqrt(p * (1 - p) / self.n)


def _score_block(prog: ProgramDef, spec: SpecDef, states: np.ndarray, fuel: int) -> int:
    src, dst, owner = [], [], []
    for k, s in enumerate(states.tolist()):
        for t in run_cached(prog, s, fuel):
            src.append(s)
            dst.append(t)
            owner.append(k)
    if not src:
        return 0
    ok = pred_vector(spec, np.array(src), np.array(dst))
    hit = np.zeros(states.size, dtype=bool)
    hit[np.array(owner)[ok]] = True
    return int(hit.sum())


def mc_reliability(prog: ProgramDef, spec: SpecDef, d: Distribution | None = None,
                   n: int = 4000, seed: int = 0, shards: int = 1,
                   fuel: int = DEFAULT_FUEL) -> Estimate:
    """Monte-Carlo estimate: run ``prog`` on ``n`` sampled states and count
    those with an outcome the spec accepts."""
    if n <= 0:
        raise ValueError("sample count must be positive")
    if prog.space != spec.space:
        raise SupportError("program and spec live on different spaces")
    r = as_relation(spec)
    if d is None:
        d = Distribution.uniform_on(r.dom())
    else:
        _check_support(d, r)
    nblocks = -(-n // BLOCK)

    def work(b: int) -> int:
        states = d.sample_block(seed, b, min(BLOCK, n - b * BLOCK))
        return _score_block(prog, spec, states, fuel)

    if shards <= 1:
        counts = [work(b) for b in range(nblocks)]
    else:
        with ThreadPoolExecutor(max_workers=shards) as pool:
            counts = list(pool.map(work, range(nblocks)))
    return Estimate(sum(counts), n)


@dataclass
class ReliabilityRow:
    name: str
    exact: float
    estimate: float
    n: int
    stderr: float
    correct: bool


@dataclass
class ReliabilityReport:
    rows: list[ReliabilityRow]
    verdicts: list[str]

    @property
    def monotone(self) -> bool:
        ex = [r.exact for r in self.rows]
        return all(a <= b for a, b in zip(ex, ex[1:]))

    @property
    def final_consistent(self) -> bool:
        last = self.rows[-1]
        return (last.exact == 1.0) == last.correct

    def as_dict(self) -> dict:
        return {
            "programs": [vars(r) for r in self.rows],
            "verdicts": self.verdicts,
            "monotone": self.monotone,
            "final_consistent": self.final_consistent,
        }


def chain_report(spec: SpecDef, progs: Mapping[str, ProgramDef], d: Distribution | None = None,
                 n: int = 4000, seed: int = 0, shards: int = 1,
                 fuel: int = DEFAULT_FUEL) -> ReliabilityReport:
    if not progs:
        raise ValueError("need at least one program")
    r = as_relation(spec)
    if d is None:
        d = Distribution.uniform_on(r.dom())
    rels = {k: extract_function(p, fuel) for k, p in progs.items()}
    rows = []
    for k, p in progs.items():
        est = mc_reliability(p, spec, d, n, seed, shards, fuel)
        rows.append(ReliabilityRow(k, exact_reliability(rels[k], r, d), est.value, n,
                                   est.stderr, is_correct(rels[k], r)))
    verdicts = order_chain(r, rels).verdicts if len(rels) > 1 else []
    return ReliabilityReport(rows, verdicts)
