"""A small imperative language and exhaustive extraction of program functions.

A program's function is the relation ``{(s, s') | execution from s
terminates in s'}``.  Execution is fuel bounded: every executed statement,
and every loop test, consumes one step on its path.  Paths that abort, hit a
runtime error, or run out of fuel contribute no final state.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .evaluate import EvalError, ScalarCompiler
from .relalg import PAIR_CAP, ExtRelation, MaterializationError, from_successors
from .space import MATERIALIZATION_CAP, Space
from .syntax import (Abort, Assign, DSLError, Either, If, Parser, ProgAST, Skip,
                     Stmt, While, check_seq_comparisons, free_vars, pretty_block,
                     typecheck)

DEFAULT_FUEL = 100_000
FORK_CAP = 2**16


class PathExplosionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ProgramDef:
    name: str
    space: Space
    locals: tuple  # (name, lo, hi) triples
    body: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def has_choice(self) -> bool:
        return _any_stmt(self.body, lambda s: isinstance(s, Either))

    def source(self) -> str:
        locs = "".join(f" local {n}: {lo}..{hi};" for n, lo, hi in self.locals)
        return f"prog {self.name} on {self.space.name}{locs} {pretty_block(self.body)}"

    def __eq__(self, other):
        if not isinstance(other, ProgramDef):
            return NotImplemented
        return (self.name, self.space, self.locals, self.body) == \
            (other.name, other.space, other.locals, other.body)

    def __hash__(self):
        return hash((self.name, self.space, self.locals, self.body))


def _any_stmt(stmts, pred) -> bool:
    for s in stmts:
        if pred(s):
            return True
        if isinstance(s, If) and (_any_stmt(s.then, pred) or _any_stmt(s.orelse, pred)):
            return True
        if isinstance(s, While) and _any_stmt(s.body, pred):
            return True
        if isinstance(s, Either) and (_any_stmt(s.first, pred) or _any_stmt(s.second, pred)):
            return True
    return False


# ---------------------------------------------------------------- parsing


def resolve_prog(ast: ProgAST, space: Space) -> ProgramDef:
    if ast.space != space.name:
        raise DSLError(f"prog {ast.name} is declared on {ast.space}, not {space.name}")
    local_names = [n for n, _, _ in ast.locals]
    for n, lo, hi in ast.locals:
        if n in space.names:
            raise DSLError(f"prog {ast.name}: local {n!r} shadows a space variable")
        if local_names.count(n) > 1:
            raise DSLError(f"prog {ast.name}: duplicate local {n!r}")
        if lo > hi:
            raise DSLError(f"prog {ast.name}: empty range for local {n!r}")
    kinds = {v.name: v.kind for v in space.vars}
    kinds.update({n: "int" for n in local_names})

    def lookup(name, primed):
        return None if primed else kinds.get(name)

    def check_expr(e, want):
        if any(p for _, p in free_vars(e)):
            raise DSLError(f"prog {ast.name}: primed variables are not allowed in programs")
        got = typecheck(e, lookup)
        if got != want:
            raise DSLError(f"prog {ast.name}: expected {want} expression, got {got}")
        check_seq_comparisons(e, space.var)

    def check(stmts):
        for s in stmts:
            if isinstance(s, Assign):
                if s.target not in kinds:
                    raise DSLError(f"prog {ast.name}: assignment to undeclared variable {s.target!r}")
                if kinds[s.target] == "seq":
                    raise DSLError(f"prog {ast.name}: sequence {s.target!r} is read-only")
                check_expr(s.expr, "int")
            elif isinstance(s, If):
                check_expr(s.cond, "bool")
                check(s.then)
                check(s.orelse)
            elif isinstance(s, While):
                check_expr(s.cond, "bool")
                check(s.body)
            elif isinstance(s, Either):
                check(s.first)
                check(s.second)

    try:
        check(ast.body)
    except DSLError as e:
        if e.line or e.message.startswith("prog "):
            raise
        raise DSLError(f"prog {ast.name}: {e.message}") from None
    return ProgramDef(ast.name, space, tuple(ast.locals), ast.body)


def parse_prog(text: str, spaces: Space | Mapping[str, Space]) -> ProgramDef:
    p = Parser(text)
    ast = p.prog_decl()
    p.end()
    if isinstance(spaces, Space):
        space = spaces
    else:
        if ast.space not in spaces:
            raise DSLError(f"prog {ast.name}: unknown space {ast.space!r}")
        space = spaces[ast.space]
    return resolve_prog(ast, space)


# ---------------------------------------------------------------- liveness


def _uses(e) -> set[str]:
    return {n for n, _ in free_vars(e)}


def _live_before(stmts, live_after: frozenset) -> frozenset:
    live = live_after
    for s in reversed(stmts):
        live = _live_stmt(s, live)
    return live


def _live_stmt(s: Stmt, after: frozenset) -> frozenset:
    if isinstance(s, Assign):
        return (after - {s.target}) | _uses(s.expr)
    if isinstance(s, Skip):
        return after
    if isinstance(s, Abort):
        return frozenset()
    if isinstance(s, If):
        return _uses(s.cond) | _live_before(s.then, after) | _live_before(s.orelse, after)
    if isinstance(s, Either):
        return _live_before(s.first, after) | _live_before(s.second, after)
    if isinstance(s, While):
        live = after | _uses(s.cond)
        while True:
            nxt = after | _uses(s.cond) | _live_before(s.body, live)
            if nxt == live:
                return live
            live = nxt
    raise TypeError(s)


def live_inputs(prog: ProgramDef) -> tuple[str, ...]:
    """Space variables whose initial value can influence the final state."""
    live = _live_before(prog.body, frozenset(prog.space.names))
    return tuple(n for n in prog.space.names if n in live)


# ---------------------------------------------------------------- execution


@dataclass
class ExecOutcome:
    finals: set = field(default_factory=set)  # final state indices
    fuel_exhausted_paths: int = 0
    runtime_error_paths: int = 0
    abort_paths: int = 0

    def final_states(self, space: Space) -> list[tuple]:
        return [space.state_at(i) for i in sorted(self.finals)]


class _Runner:
    """Compiled form of a program; executes all paths from one state."""

    def __init__(self, prog: ProgramDef):
        self.prog = prog
        space = prog.space
        self.k = len(space.vars)
        names = list(space.names) + [n for n, _, _ in prog.locals]
        self.slots = {n: i for i, n in enumerate(names)}
        self.comp = ScalarCompiler(lambda n, _p: self.slots[n], len(names), space.alphabet_codes)
        self.local_init = [0 if lo <= 0 <= hi else lo for _, lo, hi in prog.locals]
        checks: list[Callable[[int], bool]] = []
        for v in space.vars:
            if v.kind == "int":
                checks.append(lambda x, lo=v.lo, hi=v.hi: lo <= x <= hi)
            elif v.kind == "char":
                codes = frozenset(ord(c) for c in v.alphabet)
                checks.append(lambda x, codes=codes: x in codes)
            else:
                checks.append(lambda x: False)
        for _, lo, hi in prog.locals:
            checks.append(lambda x, lo=lo, hi=hi: lo <= x <= hi)
        self.in_range = checks
        self.body = self._block(prog.body)
        self.width = self.comp.nslots

    # Each compiled statement maps a list of live paths [env, fuel] to the
    # surviving paths, recording failures on the outcome.
    def _block(self, stmts):
        compiled = [self._stmt(s) for s in stmts]

        def run(paths, out):
            for c in compiled:
                if not paths:
                    break
                paths = c(paths, out)
            return paths

        return run

    def _stmt(self, s: Stmt):
        if isinstance(s, Assign):
            slot = self.slots[s.target]
            f = self.comp.compile(s.expr)
            ok = self.in_range[slot]

            def assign(paths, out):
                live = []
                for p in paths:
                    if p[1] <= 0:
                        out.fuel_exhausted_paths += 1
                        continue
                    p[1] -= 1
                    env = p[0]
                    try:
                        v = f(env)
                    except EvalError:
                        out.runtime_error_paths += 1
                        continue
                    if not ok(v):
                        out.runtime_error_paths += 1
                        continue
                    env[slot] = v
                    live.append(p)
                return live

            return assign
        if isinstance(s, Skip):
            return self._tick
        if isinstance(s, Abort):
            def abort(paths, out):
                out.abort_paths += len(paths)
                return []
            return abort
        if isinstance(s, If):
            cond = self.comp.compile(s.cond)
            then, orelse = self._block(s.then), self._block(s.orelse)

            def if_(paths, out):
                yes, no = self._split(cond, paths, out)
                return (then(yes, out) if yes else []) + (orelse(no, out) if no else [])

            return if_
        if isinstance(s, While):
            cond = self.comp.compile(s.cond)
            body = self._block(s.body)

            def while_(paths, out):
                done = []
                while paths:
                    yes, no = self._split(cond, paths, out)
                    done.extend(no)
                    paths = body(yes, out) if yes else []
                return done

            return while_
        if isinstance(s, Either):
            first, second = self._block(s.first), self._block(s.second)

            def either(paths, out):
                paths = self._tick(paths, out)
                out.forks += len(paths)
                if out.forks >= FORK_CAP:
                    raise PathExplosionError(
                        f"prog {self.prog.name}: more than {FORK_CAP} forks from one initial state")
                copies = [[list(p[0]), p[1]] for p in paths]
                return first(paths, out) + second(copies, out)

            return either
        raise TypeError(s)

    @staticmethod
    def _tick(paths, out):
        live = []
        for p in paths:
            if p[1] <= 0:
                out.fuel_exhausted_paths += 1
                continue
            p[1] -= 1
            live.append(p)
        return live

    @staticmethod
    def _split(cond, paths, out):
        yes, no = [], []
        for p in paths:
            if p[1] <= 0:
                out.fuel_exhausted_paths += 1
                continue
            p[1] -= 1
            try:
                (yes if cond(p[0]) else no).append(p)
            except EvalError:
                out.runtime_error_paths += 1
        return yes, no

    def run(self, state: tuple, fuel: int) -> ExecOutcome:
        space = self.prog.space
        env = [None] * self.width
        for i, (v, x) in enumerate(zip(space.vars, state)):
            env[i] = ord(x) if v.kind == "char" else x
        env[self.k:self.k + len(self.local_init)] = self.local_init
        out = _Tally()
        finals = self.body([[env, fuel]], out)
        result = ExecOutcome(fuel_exhausted_paths=out.fuel_exhausted_paths,
                             runtime_error_paths=out.runtime_error_paths,
                             abort_paths=out.abort_paths)
        for env_, _ in finals:
            vals = tuple(chr(x) if v.kind == "char" else x
                         for v, x in zip(space.vars, env_[:self.k]))
            result.finals.add(space.index(vals))
        return result


class _Tally:
    __slots__ = ("fuel_exhausted_paths", "runtime_error_paths", "abort_paths", "forks")

    def __init__(self):
        self.fuel_exhausted_paths = self.runtime_error_paths = self.abort_paths = self.forks = 0


def _runner(prog: ProgramDef) -> _Runner:
    r = prog._cache.get("runner")
    if r is None:
        r = prog._cache["runner"] = _Runner(prog)
    return r


def exec_prog(prog: ProgramDef, s, fuel: int = DEFAULT_FUEL) -> ExecOutcome:
    """Run ``prog`` from state ``s`` (tuple or index) along every path."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    if isinstance(s, (int, np.integer)):
        s = prog.space.state_at(int(s))
    else:
        prog.space.index(s)  # validates membership
    return _runner(prog).run(tuple(s), fuel)


# ---------------------------------------------------------------- extraction


@dataclass(frozen=True)
class Extraction:
    relation: ExtRelation
    inputs: tuple[str, ...]  # live input variables the function depends on
    runs: int  # interpreter executions performed
    deterministic: bool
    fuel_exhausted_states: int
    runtime_error_states: int
    abort_states: int

    def tallies(self) -> dict[str, int]:
        return {"abort": self.abort_states, "fuel_exhausted": self.fuel_exhausted_states,
                "runtime_error": self.runtime_error_states}


_extract_lock = threading.Lock()


def extract(prog: ProgramDef, fuel: int = DEFAULT_FUEL, reduce: bool = True) -> Extraction:
    """Exhaustively execute ``prog`` and collect its input/output relation.

    With ``reduce`` the interpreter runs once per combination of live input
    values; states that agree on those variables have identical outcomes.
    Tallies count initial states with at least one failing path of each kind.
    """
    key = ("extract", fuel, reduce)
    with _extract_lock:
        if key in prog._cache:
            return prog._cache[key]
    space = prog.space
    n = space.cardinality
    if n > MATERIALIZATION_CAP:
        raise MaterializationError(f"space {space.name} has {n} states (cap {MATERIALIZATION_CAP})")
    inputs = live_inputs(prog) if reduce else space.names
    classes = space.sub_cardinality(inputs)
    reps = space.embed(np.arange(classes), inputs)
    runner = _runner(prog)
    finals: list[list[int]] = []
    fails = np.zeros((classes, 3), dtype=bool)
    for c, rep in enumerate(reps.tolist()):
        out = runner.run(space.state_at(rep), fuel)
        finals.append(sorted(out.finals))
        fails[c] = (out.fuel_exhausted_paths > 0, out.runtime_error_paths > 0, out.abort_paths > 0)
    cls_of = space.project(np.arange(n), inputs)
    class_size = n // classes
    deterministic = all(len(f) <= 1 for f in finals)
    if deterministic:
        succ_cls = np.array([f[0] if f else -1 for f in finals], dtype=np.int64)
        rel = from_successors(space, succ_cls[cls_of])
    else:
        total = sum(len(f) for f in finals) * class_size
        if total > PAIR_CAP:
            raise MaterializationError(f"prog {prog.name}: {total} pairs exceed the pair cap")
        parts = []
        for c, f in enumerate(finals):
            if f:
                states = np.flatnonzero(cls_of == c)
                parts.append((states[:, None] * n + np.array(f)[None, :]).ravel())
        keys = np.sort(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)
        rel = ExtRelation(space, keys, presorted=True)
    counts = fails.sum(axis=0) * class_size
    result = Extraction(rel, tuple(inputs), classes, deterministic,
                        int(counts[0]), int(counts[1]), int(counts[2]))
    with _extract_lock:
        prog._cache[key] = result
    return result


def extract_function(prog: ProgramDef, fuel: int = DEFAULT_FUEL) -> ExtRelation:
    return extract(prog, fuel).relation


def is_deterministic_prog(prog: ProgramDef, fuel: int = DEFAULT_FUEL) -> bool:
    return extract(prog, fuel).deterministic


def run_cached(prog: ProgramDef, s: int, fuel: int = DEFAULT_FUEL) -> frozenset[int]:
    """Final state indices from ``s``, memoized on the live-input projection."""
    memo = prog._cache.setdefault(("memo", fuel), {})
    space = prog.space
    inputs = prog._cache.get("inputs")
    if inputs is None:
        inputs = prog._cache["inputs"] = live_inputs(prog)
    c = int(space.project(np.int64(s), inputs))
    hit = memo.get(c)
    if hit is None:
        rep = int(space.embed(np.int64(c), inputs))
        hit = memo[c] = frozenset(_runner(prog).run(space.state_at(rep), fuel).finals)
    return hit
