"""Bundled case studies and their replay.

Each case is a DSL file holding one space, one spec and a list of
programs, plus the expected competence domains written as independent
Python predicates.  ``replay`` recomputes everything from the interpreter
and returns a JSON-ready report whose ``checks`` say which expectations held.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Mapping

import numpy as np

from .. import relalg as ra
from ..correctness import (competence_domain, hasse, is_correct, more_correct,
                           more_correct_det, order_chain, projection, refines,
                           strictly_more_correct_det)
from ..minilang import DEFAULT_FUEL, extract
from ..oracles import (char_class, oracle_fermat_domain, oracle_isqrt_ceil,
                       oracle_isqrt_floor, oracle_mu, oracle_perfect_square)
from ..reliability import chain_report
from ..space import Space, StateSet
from ..speclang import as_relation, check_domain_claim, parse_spec
from ..syntax import Parser
from ..workspace import Workspace


@dataclass(frozen=True)
class Expected:
    """A set of states given by a predicate over a few variables."""

    vars: tuple[str, ...]
    fn: Callable[..., bool]


def expected_set(space: Space, exp: Expected) -> StateSet:
    values = [list(space.var(v).values()) for v in exp.vars]
    table = np.array([bool(exp.fn(*combo)) for combo in itertools.product(*values)])
    return StateSet(space, table[space.project(np.arange(space.cardinality), exp.vars)])


@dataclass(frozen=True)
class CorpusCase:
    name: str
    spec: str
    chain: tuple[str, ...]
    expected: Mapping[str, Expected] = field(default_factory=dict)
    helpers: tuple[str, ...] = ()  # programs loaded but kept out of orderings
    derivation: bool = True  # chain runs from abort to a correct program
    extra: Callable | None = None

    def source(self) -> str:
        return resources.files(__package__).joinpath(f"{self.name}.rc").read_text("utf-8")

    def load(self) -> Workspace:
        ws = Workspace()
        ws.load_text(self.source(), f"{self.name}.rc")
        return ws


def _succ_relation(space: Space, fn: Callable[[tuple], tuple | None]) -> ra.ExtRelation:
    succ = np.full(space.cardinality, -1, dtype=np.int64)
    for i, s in enumerate(space.enumerate()):
        t = fn(s)
        if t is not None:
            succ[i] = space.index(t)
    return ra.from_successors(space, succ)


def _succ_by_vars(space: Space, names: tuple[str, ...], fn) -> ra.ExtRelation:
    """Like ``_succ_relation`` for functions that read only ``names``."""
    idx = np.arange(space.cardinality)
    cls = space.project(idx, names)
    reps = space.embed(np.arange(space.sub_cardinality(names)), names)
    table = np.array([(-1 if (t := fn(space.state_at(int(r)))) is None else space.index(t))
                      for r in reps], dtype=np.int64)
    return ra.from_successors(space, table[cls])


# ---------------------------------------------------------------- case extras


_CUBE_EDGES = {("p0", "p1"), ("p0", "p2"), ("p0", "p3"), ("p1", "p4"), ("p1", "p6"),
                   ("p2", "p4"), ("p2", "p5"), ("p3", "p5"), ("p3", "p6")}


def _cube_extra(ws: Workspace, ctx: dict) -> dict[str, bool]:
    h = ctx["hasse"]
    edges = {(a[0], b[0]) for a, b in h.edge_names() if len(a) == 1 and len(b) == 1}
    top = h.node_of("p7")
    return {
        "hasse_has_expected_edges": _CUBE_EDGES <= edges,
        "hasse_p8_equiv_p9": h.node_of("p8") == h.node_of("p9"),
        "hasse_p7_only_correct": [i for i, c in enumerate(h.correct) if c] == [top],
        "hasse_p7_is_top": all(a != top for a, _ in h.edges),
        "p1_p2_incomparable": not any(set(e) == {h.node_of("p1"), h.node_of("p2")}
                                      for e in h.edges),
    }


FERMAT_SMALL = """
space Fermat60 { n: int 0..60; x: int 0..31; y: int 0..31; }
"""


def _fermat_extra(ws: Workspace, ctx: dict) -> dict[str, bool]:
    spec = ws.spec("F")
    sp = spec.space
    small = Parser(FERMAT_SMALL).space_decl()
    pred = spec.source().split(":=", 1)[1].split(";", 1)[0]
    spec60 = parse_spec(f"spec F60 on Fermat60 := {pred}; domain := n % 2 == 1 || n % 4 == 0;",
                        small)
    v60 = check_domain_claim(spec60)
    wrong = parse_spec(f"spec Fw on Fermat := {pred}; domain := n % 2 == 1;", sp)
    vw = check_domain_claim(wrong)
    witness_n = {sp.state_at(i)[0] for i in vw.witnesses}
    rels = ctx["relations"]
    bound = sp.var("x").hi

    def p1(s):
        return (s[0], oracle_isqrt_ceil(s[0]), 0)

    def p3(s):
        m = oracle_mu(s[0], bound)
        if m is None:
            return None
        return (s[0], m, oracle_isqrt_floor(m * m - s[0]))

    cd2 = ctx["cd"]["p2"]
    r2 = rels["p2"]
    # closed form of P2 only describes its competence domain
    c2 = _succ_by_vars(sp, ("n",), lambda s: (s[0], c := oracle_isqrt_ceil(s[0]),
                                              oracle_isqrt_floor(c * c - s[0])))
    return {
        "claim_verified_n_le_60": v60.status == "verified",
        "wrong_claim_refuted": vw.status == "refuted",
        "wrong_claim_witness_4": 4 in witness_n,
        "p1_closed_form": ra.equals(rels["p1"], _succ_by_vars(sp, ("n",), p1)),
        "p2_closed_form_on_cd": ra.equals(ra.restrict_pre(r2, cd2), ra.restrict_pre(c2, cd2)),
        "p3_closed_form": ra.equals(rels["p3"], _succ_by_vars(sp, ("n",), p3)),
        "cd3_is_dom": ctx["cd"]["p3"] == ctx["dom"],
    }


def _sqrt_extra(ws: Workspace, ctx: dict) -> dict[str, bool]:
    sp = ws.spec("Sq").space
    rels = ctx["relations"]
    p2 = rels["p2"]
    src, dst = np.divmod(p2.keys(), sp.cardinality)
    n, x, xn = sp.column(src, "n"), sp.column(dst, "x"), sp.column(dst, "n")
    pos = n >= 1
    closed = ((x - 1) ** 2 < n) & (n <= x * x) & (x >= 0) & (xn == n)
    return {
        "p1_closed_form": ra.equals(rels["p1"], _succ_by_vars(sp, ("n",), lambda s: (s[0], 0))),
        "p2_total": len(p2.dom()) == sp.cardinality,
        "p2_closed_form_n_ge_1": bool(closed[pos].all()),
        "p2_at_n0_gives_0": bool((x[n == 0] == 0).all()),
        "p3_closed_form": ra.equals(rels["p3"], _succ_by_vars(
            sp, ("n",), lambda s: (s[0], oracle_isqrt_floor(s[0])))),
        "p2_then_f_is_p3": ra.equals(ra.compose(p2, rels["f"]), rels["p3"]),
    }


def _fig2_extra(ws: Workspace, ctx: dict) -> dict[str, bool]:
    sp = ws.spec("R").space
    r = ctx["spec_relation"]
    p, q = ctx["relations"]["P"], ctx["relations"]["Pp"]
    rp = ra.materialize(ra.inter(r, p))
    rq = ra.materialize(ra.inter(r, q))
    return {
        "r_and_p": rp.pairs() == [(1, 2), (2, 3)],
        "r_and_pp": rq.pairs() == [(1, 0), (2, 1), (3, 2)],
        "cd_p": ctx["cd"]["P"] == StateSet.from_indices(sp, [1, 2]),
        "cd_pp": ctx["cd"]["Pp"] == StateSet.from_indices(sp, [1, 2, 3]),
        "pp_more_correct": more_correct(q, p, r),
        "p_not_more_correct": not more_correct(p, q, r),
        "pp_strict_det": more_correct_det(q, p, r) and strictly_more_correct_det(q, p, r),
        "pp_does_not_refine_p": not refines(q, p),
    }


def _projection_extra(ws: Workspace, ctx: dict) -> dict[str, bool]:
    sp = ws.spec("Sum").space
    loop = ctx["relations"]["loop"]

    def cols(s, t):
        g = sp.column
        return g(s, "x"), g(s, "y"), g(t, "x"), g(t, "y")

    def fn_loop(s, t):
        x, y, x2, y2 = cols(s, t)
        return (y >= 0) & (x2 == x + y) & (y2 == 0)

    def fn_proj(s, t):
        x, y, x2, _ = cols(s, t)
        return (y >= 0) & (x2 == x + y)

    pi = projection(ctx["spec_relation"], loop)
    return {
        "loop_function": ra.equals(loop, ra.lazy(sp, fn_loop)),
        "projection": ra.equals(pi, ra.lazy(sp, fn_proj)),
        "projection_idempotent": ra.equals(projection(ctx["spec_relation"], pi), pi),
    }


def _strings_closure(*classes):
    allowed = set(classes)
    return Expected(("q",), lambda q: all(char_class(c) in allowed for c in q))


CASES: dict[str, CorpusCase] = {
    "cube": CorpusCase(
        "cube", "R", ("p0", "p1", "p4", "p8", "p7"),
        {
            "p0": Expected(("s",), lambda s: False),
            "p1": Expected(("s",), lambda s: s == 0),
            "p2": Expected(("s",), lambda s: s == 1),
            "p3": Expected(("s",), lambda s: s == 2),
            "p4": Expected(("s",), lambda s: s in (0, 1)),
            "p5": Expected(("s",), lambda s: s in (1, 2)),
            "p6": Expected(("s",), lambda s: s in (0, 2)),
            # value bound 125 truncates the last three
            "p7": Expected(("s",), lambda s: s <= 11),
            "p8": Expected(("s",), lambda s: s <= 5),
            "p9": Expected(("s",), lambda s: s <= 5),
        },
        extra=_cube_extra),
    "fermat": CorpusCase(
        "fermat", "F", ("p0", "p1", "p2", "p3"),
        {
            "p0": Expected(("n",), lambda n: False),
            "p1": Expected(("n",), oracle_perfect_square),
            "p2": Expected(("n",), lambda n: oracle_perfect_square(oracle_isqrt_ceil(n) ** 2 - n)),
            "p3": Expected(("n",), oracle_fermat_domain),
        },
        extra=_fermat_extra),
    "sqrt": CorpusCase(
        "sqrt", "Sq", ("p0", "p1", "p2", "p3"),
        {
            "p0": Expected(("n",), lambda n: False),
            "p1": Expected(("n",), lambda n: n == 0),
            "p2": Expected(("n",), oracle_perfect_square),
            "p3": Expected(("n",), lambda n: n >= 0),
        },
        helpers=("f",), extra=_sqrt_extra),
    "strings": CorpusCase(
        "strings", "S", ("p0", "p1", "p2", "p3", "p4"),
        {
            "p0": Expected(("q",), lambda q: False),
            "p1": _strings_closure("upper"),
            "p2": _strings_closure("upper", "lower"),
            "p3": _strings_closure("upper", "lower", "digit"),
            "p4": _strings_closure("upper", "lower", "digit", "sym"),
        }),
    "fig2": CorpusCase("fig2", "R", ("P", "Pp"), derivation=False, extra=_fig2_extra),
    "projection": CorpusCase("projection", "Sum", ("loop",), derivation=False,
                             extra=_projection_extra),
}

DERIVATION_CASES = ("cube", "fermat", "sqrt", "strings")


def _set_summary(a: StateSet) -> dict:
    return {"size": len(a)}


def replay(case: CorpusCase | str, fuel: int = DEFAULT_FUEL, n: int = 4000, seed: int = 0,
           shards: int = 1) -> dict:
    """Recompute a case from scratch; the result contains no timings."""
    if isinstance(case, str):
        case = CASES[case]
    ws = case.load()
    spec = ws.spec(case.spec)
    checks: dict[str, bool] = {}
    out: dict = {"case": case.name, "space": {"name": spec.space.name,
                                              "states": spec.space.cardinality}}
    if spec.domain is not None:
        v = check_domain_claim(spec)
        out["domain_claim"] = {"status": v.status, "rows": v.rows_checked}
        checks["domain_claim"] = v.status == "verified"
    r = as_relation(spec)
    dom = r.dom()
    out["spec"] = {"name": spec.name, "domain_size": len(dom)}

    relations, cds, programs = {}, {}, {}
    for name, prog in ws.progs.items():
        ex = extract(prog, fuel)
        relations[name] = ex.relation
        cd = competence_domain(ex.relation, r)
        cds[name] = cd
        entry = {"runs": ex.runs, "inputs": list(ex.inputs), "deterministic": ex.deterministic,
                 "pairs": len(ex.relation), "failures": ex.tallies(),
                 "competence": len(cd), "correct": is_correct(ex.relation, r)}
        if name in case.expected:
            ok = cd == expected_set(spec.space, case.expected[name])
            entry["competence_matches"] = ok
            checks[f"cd_{name}"] = ok
        programs[name] = entry
    out["programs"] = programs

    ranked = {k: relations[k] for k in ws.progs if k not in case.helpers}
    h = hasse(r, ranked)
    out["hasse"] = h.as_dict()
    chain = {k: relations[k] for k in case.chain}
    if len(chain) > 1:
        cv = order_chain(r, chain)
        out["chain"] = cv.as_dict()
        checks["chain_strict"] = cv.strictly_monotone
        if case.derivation:
            checks["chain_final_correct"] = cv.final_correct
        checks["cd_subset_dom"] = all(c <= dom for c in cv.competence)
    rep = chain_report(spec, {k: ws.prog(k) for k in case.chain}, None, n, seed, shards, fuel)
    out["reliability"] = rep.as_dict()
    if len(case.chain) > 1:
        checks["reliability_monotone"] = rep.monotone
    if case.derivation:
        checks["reliability_endpoints"] = rep.rows[0].exact == 0.0 and rep.rows[-1].exact == 1.0
    ctx = {"relations": relations, "cd": cds, "dom": dom, "hasse": h, "spec_relation": r}
    if case.extra is not None:
        checks.update(case.extra(ws, ctx))
    out["diagnostics"] = spec.diagnostics.as_dict()
    out["checks"] = checks
    out["ok"] = all(checks.values())
    return out


def replay_all(names=None, **kw) -> dict:
    names = list(names or CASES)
    cases = {k: replay(k, **kw) for k in names}
    return {"cases": cases, "ok": all(c["ok"] for c in cases.values())}


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (set, frozenset, tuple)):
        return sorted(o)
    raise TypeError(f"not serializable: {type(o).__name__}")
