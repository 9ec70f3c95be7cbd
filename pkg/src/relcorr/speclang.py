"""Specification predicates over (state, state') pairs."""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .evaluate import (ERR_NONE, ERROR_NAMES, EvalError, ScalarCompiler,
                       VecContext, eval_vector)
from .relalg import LazyRelation, MaterializationError
from .space import Space, StateSet
from .syntax import (DSLError, Expr, Parser, SpecAST, check_seq_comparisons,
                     free_vars, pretty, typecheck)


class Diagnostics:
    """Thread-safe tally of evaluation errors, keyed by error kind."""

    def __init__(self):
        self._lock = threading.Lock()
        self.counts: Counter = Counter()

    def add(self, kind: str, n: int = 1):
        if n:
            with self._lock:
                self.counts[kind] += n

    def add_codes(self, codes: np.ndarray):
        bad = codes[codes != ERR_NONE]
        if bad.size:
            vals, cnt = np.unique(bad, return_counts=True)
            for v, c in zip(vals.tolist(), cnt.tolist()):
                self.add(ERROR_NAMES[v], c)

    def as_dict(self) -> dict[str, int]:
        with self._lock:
            return dict(sorted(self.counts.items()))

    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class DomainVerdict:
    status: str  # verified | refuted | sampled-ok
    rows_checked: int
    witnesses: tuple[int, ...] = ()  # state indices where claim and domain disagree

    def __bool__(self):
        return self.status != "refuted"


@dataclass(frozen=True, eq=False)
class SpecDef:
    name: str
    space: Space
    pred: Expr
    domain: Expr | None = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def free_vars(self) -> set[tuple[str, bool]]:
        return free_vars(self.pred)

    @property
    def claim_verified(self) -> bool:
        v = self._cache.get("verdict")
        return v is not None and v.status == "verified"

    def source(self) -> str:
        out = f"spec {self.name} on {self.space.name} := {pretty(self.pred)};"
        if self.domain is not None:
            out += f" domain := {pretty(self.domain)};"
        return out

    def __eq__(self, other):
        if not isinstance(other, SpecDef):
            return NotImplemented
        return (self.name, self.space, self.pred, self.domain) == \
            (other.name, other.space, other.pred, other.domain)

    def __hash__(self):
        return hash((self.name, self.space, self.pred, self.domain))


def _lookup_for(space: Space, allow_primed: bool):
    def lookup(name, primed):
        if primed and not allow_primed:
            return None
        try:
            return space.var(name).kind
        except KeyError:
            return None
    return lookup


def resolve_spec(ast: SpecAST, space: Space) -> SpecDef:
    if ast.space != space.name:
        raise DSLError(f"spec {ast.name} is declared on {ast.space}, not {space.name}")
    try:
        if typecheck(ast.pred, _lookup_for(space, True)) != "bool":
            raise DSLError(f"spec {ast.name}: predicate must be boolean")
        check_seq_comparisons(ast.pred, space.var)
        if ast.domain is not None:
            if any(p for _, p in free_vars(ast.domain)):
                raise DSLError(f"spec {ast.name}: domain claim may only mention unprimed variables")
            if typecheck(ast.domain, _lookup_for(space, False)) != "bool":
                raise DSLError(f"spec {ast.name}: domain claim must be boolean")
    except DSLError as e:
        if e.line:
            raise
        raise DSLError(f"spec {ast.name}: {e.message}") from None
    return SpecDef(ast.name, space, ast.pred, ast.domain)


def parse_spec(text: str, spaces: Space | Mapping[str, Space]) -> SpecDef:
    """Parse one ``spec`` declaration against a space (or spaces by name)."""
    p = Parser(text)
    ast = p.spec_decl()
    p.end()
    if isinstance(spaces, Space):
        space = spaces
    else:
        if ast.space not in spaces:
            raise DSLError(f"spec {ast.name}: unknown space {ast.space!r}")
        space = spaces[ast.space]
    return resolve_spec(ast, space)


# ---------------------------------------------------------------- evaluation


def _env_value(decl, value):
    if decl.kind == "char":
        return ord(value)
    return value


def _compiled(spec: SpecDef, which: str):
    cache = spec._cache.setdefault("compiled", {})
    if which not in cache:
        names = spec.space.names
        k = len(names)
        slots = {n: i for i, n in enumerate(names)}

        def resolve(name, primed):
            return slots[name] + (k if primed else 0)

        comp = ScalarCompiler(resolve, 2 * k, spec.space.alphabet_codes)
        expr = spec.pred if which == "pred" else spec.domain
        cache[which] = (comp.compile(expr), comp)
    return cache[which]


def eval_pred(spec: SpecDef, s, s2) -> bool:
    """Truth of the predicate at (s, s2); evaluation errors count as false."""
    fn, comp = _compiled(spec, "pred")
    env = [None] * comp.nslots
    decls = spec.space.vars
    k = len(decls)
    for i, (d, v, w) in enumerate(zip(decls, s, s2)):
        env[i] = _env_value(d, v)
        env[k + i] = _env_value(d, w)
    try:
        return bool(fn(env))
    except EvalError as e:
        spec.diagnostics.add(e.kind)
        return False


def eval_claim(spec: SpecDef, s) -> bool:
    if spec.domain is None:
        raise ValueError(f"spec {spec.name} has no domain claim")
    fn, comp = _compiled(spec, "domain")
    env = [None] * comp.nslots
    for i, (d, v) in enumerate(zip(spec.space.vars, s)):
        env[i] = _env_value(d, v)
    try:
        return bool(fn(env))
    except EvalError as e:
        spec.diagnostics.add(e.kind)
        return False


def _context(space: Space, src: np.ndarray, dst: np.ndarray | None) -> VecContext:
    def column(name, primed):
        return space.column(dst if primed else src, name)

    return VecContext(src.size, column, lambda name: space.var(name).seq_tables,
                      space.alphabet_codes)


def pred_vector(spec: SpecDef, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    val, err = eval_vector(spec.pred, _context(spec.space, src, dst))
    spec.diagnostics.add_codes(err)
    return np.asarray(val, dtype=bool) & (err == ERR_NONE)


def claim_vector(spec: SpecDef, idx: np.ndarray) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    val, err = eval_vector(spec.domain, _context(spec.space, idx, None))
    spec.diagnostics.add_codes(err)
    return np.asarray(val, dtype=bool) & (err == ERR_NONE)


class SpecRelation(LazyRelation):
    """The relation denoted by a spec; uses a verified domain claim for dom()."""

    def __init__(self, spec: SpecDef, budget: int | None = None):
        fv = spec.free_vars
        support = (tuple(n for n, p in fv if not p), tuple(n for n, p in fv if p))
        super().__init__(spec.space, lambda s, t: pred_vector(spec, s, t), support,
                         label=f"spec {spec.name}", budget=budget)
        self.spec = spec
        self._claim_dom: StateSet | None = None

    def dom(self) -> StateSet:
        if self.spec.claim_verified:
            if self._claim_dom is None:
                self._claim_dom = StateSet(self.space, claim_vector(self.spec, np.arange(self.n)))
            return self._claim_dom
        return super().dom()


def as_relation(spec: SpecDef, budget: int | None = None) -> SpecRelation:
    rel = spec._cache.get(("relation", budget))
    if rel is None:
        rel = spec._cache[("relation", budget)] = SpecRelation(spec, budget)
    return rel


def check_domain_claim(spec: SpecDef, budget: int = 2**26, seed: int = 0,
                       max_witnesses: int = 16) -> DomainVerdict:
    """Compare the domain claim with the actual domain, row by row.

    Rows are grouped by the variables that either the predicate (unprimed
    side) or the claim reads; each group needs one witness search over the
    primed variables the predicate reads.  When ``groups x targets`` exceeds
    ``budget`` a uniform random sample of groups is checked instead.
    """
    if spec.domain is None:
        raise ValueError(f"spec {spec.name} has no domain claim")
    if budget <= 0:
        raise ValueError("budget must be positive")
    sp = spec.space
    fv = spec.free_vars
    src_vars = {n for n, p in fv if not p}
    dst_vars = tuple(n for n in sp.names if (n, True) in fv)
    row_vars = tuple(n for n in sp.names if n in src_vars or (n, False) in free_vars(spec.domain))
    rows = sp.sub_cardinality(row_vars)
    cols = sp.sub_cardinality(dst_vars)
    if cols > budget:
        raise MaterializationError(f"a single witness search needs {cols} evaluations (budget {budget})")
    if rows * cols <= budget:
        sample = np.arange(rows)
        status = "verified"
    else:
        k = budget // cols
        sample = np.sort(np.random.default_rng(seed).choice(rows, size=k, replace=False))
        status = "sampled-ok"
    reps = sp.embed(sample, row_vars)
    targets = sp.embed(np.arange(cols), dst_vars)
    exists = np.empty(reps.size, dtype=bool)
    step = max(1, 2**22 // cols)
    for lo in range(0, reps.size, step):
        block = reps[lo:lo + step]
        hit = pred_vector(spec, np.repeat(block, cols), np.tile(targets, block.size))
        exists[lo:lo + step] = hit.reshape(block.size, cols).any(axis=1)
    claimed = claim_vector(spec, reps)
    bad = reps[exists != claimed]
    if bad.size:
        verdict = DomainVerdict("refuted", int(reps.size), tuple(bad[:max_witnesses].tolist()))
    else:
        verdict = DomainVerdict(status, int(reps.size))
    spec._cache["verdict"] = verdict
    return verdict
