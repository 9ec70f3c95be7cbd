"""Correctness verdicts between relations, and orderings of candidate
programs built from them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .relalg import (Relation, diff, dom_vector, inter, is_deterministic, is_empty,
                     restrict_pre, subset, union)
from .space import SpaceError, StateSet


class NondeterministicError(ValueError):
    pass


def _same(*rels: Relation):
    sp = rels[0].space
    for r in rels[1:]:
        if r.space != sp:
            raise SpaceError(f"relations over different spaces: {sp.name} vs {r.space.name}")


def refines(r2: Relation, r1: Relation) -> bool:
    """True when ``r2`` refines ``r1``: it is defined wherever ``r1`` is, and
    on that domain it only produces outcomes ``r1`` allows."""
    _same(r1, r2)
    d1 = r1.dom()
    if not d1 <= r2.dom():
        return False
    return subset(inter(dom_vector(r1), r2), r1)


def is_correct(p: Relation, r: Relation) -> bool:
    return refines(p, r)


def competence_domain(p: Relation, r: Relation) -> StateSet:
    _same(p, r)
    # relations are immutable, so the result can live on the program side;
    # keeping r in the entry pins its id
    memo = p.__dict__.setdefault("_cd_memo", {})
    hit = memo.get(id(r))
    if hit is None or hit[0] is not r:
        hit = memo[id(r)] = (r, inter(r, p).dom())
    return hit[1]


def _require_det(*rels: Relation):
    for x in rels:
        if not is_deterministic(x):
            raise NondeterministicError("argument is not deterministic")


def more_correct_det(p2: Relation, p1: Relation, r: Relation) -> bool:
    _same(p1, p2, r)
    _require_det(p1, p2)
    return competence_domain(p1, r) <= competence_domain(p2, r)


def strictly_more_correct_det(p2: Relation, p1: Relation, r: Relation) -> bool:
    _same(p1, p2, r)
    _require_det(p1, p2)
    return competence_domain(p1, r) < competence_domain(p2, r)


def more_correct(p2: Relation, p1: Relation, r: Relation) -> bool:
    """``p2`` is more-correct than ``p1`` with respect to ``r``.

    Competence must not shrink, and on ``p1``'s competence domain ``p2`` may
    not introduce an outcome that is both wrong and unknown to ``p1``.
    """
    _same(p1, p2, r)
    cd1 = competence_domain(p1, r)
    if not cd1 <= competence_domain(p2, r):
        return False
    # (R n P1)L n ~R n P2 must lie inside P1
    return is_empty(diff(diff(restrict_pre(p2, cd1), r), p1))


def strictly_more_correct(p2: Relation, p1: Relation, r: Relation) -> bool:
    return more_correct(p2, p1, r) and not more_correct(p1, p2, r)


def projection(r: Relation, p: Relation) -> Relation:
    """The part of ``p``'s behaviour that ``r`` mandates: (R n P)L n (R u P)."""
    _same(r, p)
    return inter(dom_vector(inter(r, p)), union(r, p))


# ---------------------------------------------------------------- chains

VERDICTS = ("strictly_more_correct", "more_correct", "less_correct", "incomparable")


def verdict(p_next: Relation, p_prev: Relation, r: Relation) -> str:
    fwd = more_correct(p_next, p_prev, r)
    bwd = more_correct(p_prev, p_next, r)
    if fwd and not bwd:
        return "strictly_more_correct"
    if fwd:
        return "more_correct"
    if bwd:
        return "less_correct"
    return "incomparable"


@dataclass
class ChainVerdict:
    names: list[str]
    verdicts: list[str]  # verdicts[i] compares names[i + 1] with names[i]
    competence: list[StateSet] = field(repr=False)
    final_correct: bool = False

    @property
    def monotone(self) -> bool:
        return all(v in ("strictly_more_correct", "more_correct") for v in self.verdicts)

    @property
    def strictly_monotone(self) -> bool:
        return all(v == "strictly_more_correct" for v in self.verdicts)

    def as_dict(self) -> dict:
        return {
            "programs": self.names,
            "verdicts": self.verdicts,
            "competence_sizes": [len(c) for c in self.competence],
            "monotone": self.monotone,
            "final_correct": self.final_correct,
        }


def order_chain(r: Relation, progs: Sequence[Relation] | Mapping[str, Relation]) -> ChainVerdict:
    if isinstance(progs, Mapping):
        names, rels = list(progs), list(progs.values())
    else:
        rels = list(progs)
        names = [f"P{i}" for i in range(len(rels))]
    if len(rels) < 2:
        raise ValueError("a chain needs at least two programs")
    _same(r, *rels)
    verdicts = [verdict(rels[i + 1], rels[i], r) for i in range(len(rels) - 1)]
    cds = [competence_domain(p, r) for p in rels]
    return ChainVerdict(names, verdicts, cds, is_correct(rels[-1], r))


@dataclass
class HasseDiagram:
    nodes: list[tuple[str, ...]]  # equivalence classes, names sorted
    edges: list[tuple[int, int]]  # (lower, upper) node indices
    correct: list[bool]

    def node_of(self, name: str) -> int:
        for i, members in enumerate(self.nodes):
            if name in members:
                return i
        raise KeyError(name)

    def edge_names(self) -> set[tuple[tuple[str, ...], tuple[str, ...]]]:
        return {(self.nodes[a], self.nodes[b]) for a, b in self.edges}

    def to_dot(self, name: str = "relcorr") -> str:
        lines = [f"digraph {name} {{", "  rankdir=BT;"]
        for i, members in enumerate(self.nodes):
            label = ", ".join(members)
            shape = "doublecircle" if self.correct[i] else "ellipse"
            lines.append(f'  n{i} [label="{label}", shape={shape}];')
        for a, b in self.edges:
            lines.append(f"  n{a} -> n{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {"nodes": [list(n) for n in self.nodes],
                "edges": [[list(self.nodes[a]), list(self.nodes[b])] for a, b in self.edges],
                "correct": [list(self.nodes[i]) for i, c in enumerate(self.correct) if c]}


def hasse(r: Relation, progs: Mapping[str, Relation]) -> HasseDiagram:
    """Merge equally-correct programs, then keep only covering edges."""
    if not progs:
        raise ValueError("need at least one program")
    names = sorted(progs)
    rels = [progs[k] for k in names]
    _same(r, *rels)
    det = all(is_deterministic(p) for p in rels)
    k = len(names)
    if det:
        cds = [competence_domain(p, r) for p in rels]
        le = np.array([[cds[i] <= cds[j] for j in range(k)] for i in range(k)])
    else:
        le = np.array([[i == j or more_correct(rels[j], rels[i], r) for j in range(k)]
                       for i in range(k)])
    classes: list[list[int]] = []
    for i in range(k):
        for cls in classes:
            j = cls[0]
            if le[i, j] and le[j, i]:
                cls.append(i)
                break
        else:
            classes.append([i])
    classes.sort(key=lambda c: names[c[0]])
    reps = [c[0] for c in classes]
    m = len(classes)
    lt = np.array([[le[reps[a], reps[b]] and not le[reps[b], reps[a]] for b in range(m)]
                   for a in range(m)])
    edges = []
    for a, b in itertools.product(range(m), repeat=2):
        if lt[a, b] and not any(lt[a, c] and lt[c, b] for c in range(m)):
            edges.append((a, b))
    nodes = [tuple(names[i] for i in c) for c in classes]
    correct = [is_correct(rels[c[0]], r) for c in classes]
    return HasseDiagram(nodes, edges, correct)


# ---------------------------------------------------------------- brute force


def _mask_relations(n: int, deterministic: bool) -> np.ndarray:
    """All relations (or all partial functions) on an n-state space as bitmasks."""
    if deterministic:
        out = []
        for images in itertools.product(range(-1, n), repeat=n):
            m = 0
            for s, t in enumerate(images):
                if t >= 0:
                    m |= 1 << (s * n + t)
            out.append(m)
        return np.array(out, dtype=np.uint64)
    return np.arange(2 ** (n * n), dtype=np.uint64)


@dataclass
class EquivalenceReport:
    n: int
    mode: str
    programs: int
    specs: int
    counterexamples: int
    examples: list = field(default_factory=list)  # (P, P', R or None) as pair lists
    backend: str = kernels.NAME

    @property
    def holds(self) -> bool:
        return self.counterexamples == 0

    def as_dict(self) -> dict:
        return {"n": self.n, "mode": self.mode, "programs": self.programs, "specs": self.specs,
                "counterexamples": self.counterexamples, "holds": self.holds,
                "examples": self.examples}


def mask_pairs(mask: int, n: int) -> list[tuple[int, int]]:
    return [(b // n, b % n) for b in range(n * n) if mask >> b & 1]


def refinement_equiv_bruteforce(n: int, mode: str = "deterministic",
                                max_examples: int = 5) -> EquivalenceReport:
    """Check refines(P', P) <=> for all R: more_correct(P', P, R) exhaustively."""
    if mode not in ("deterministic", "all"):
        raise ValueError(f"unknown mode {mode!r}")
    limit = 4 if mode == "deterministic" else 3
    if not 1 <= n <= limit:
        raise ValueError(f"space too large for {mode} mode (1 <= n <= {limit})")
    rels = _mask_relations(n, mode == "deterministic")
    specs = np.arange(2 ** (n * n), dtype=np.uint64)
    count, ex = kernels.bruteforce_equivalence(n, rels, specs, max_examples)
    examples = [(mask_pairs(int(rels[i]), n), mask_pairs(int(rels[j]), n),
                 mask_pairs(int(specs[w]), n) if w >= 0 else None) for i, j, w in ex]
    return EquivalenceReport(n, mode, int(rels.size), int(specs.size), count, examples)
