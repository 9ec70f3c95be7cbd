"""``relcorr`` command-line interface.

Exit codes: 0 when the verdict is true (or the command succeeded), 1 when it
is false, 2 for usage, parse and resource errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import relalg as ra
from .correctness import (NondeterministicError, competence_domain, hasse,
                          is_correct, more_correct, more_correct_det, order_chain,
                          projection, refines, strictly_more_correct,
                          strictly_more_correct_det)
from .minilang import DEFAULT_FUEL, PathExplosionError, ProgramDef, extract
from .relalg import MaterializationError, Relation
from .reliability import Distribution, SupportError, chain_report
from .space import SpaceError, StateSet
from .speclang import SpecDef, as_relation, check_domain_claim
from .syntax import DSLError
from .workspace import Workspace

EXIT_TRUE, EXIT_FALSE, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


class Session:
    """Workspace plus the options shared by every subcommand."""

    def __init__(self, args):
        self.fuel = args.fuel
        self.budget = args.budget
        self.ws = Workspace()
        for f in args.space or ():
            self.ws.load(f)

    def operand(self, ref: str) -> SpecDef | ProgramDef:
        """A spec or program, named directly or as the single one in a file."""
        path = Path(ref)
        if path.is_file():
            names = self.ws.load(path)
            defs = [n for n in names if n in self.ws.specs or n in self.ws.progs]
            if len(defs) != 1:
                raise UsageError(f"{ref}: expected exactly one spec or program, found {len(defs)}")
            ref = defs[0]
        if ref in self.ws.specs:
            return self.ws.specs[ref]
        if ref in self.ws.progs:
            return self.ws.progs[ref]
        raise UsageError(f"unknown spec or program {ref!r}")

    def spec(self, ref: str) -> SpecDef:
        obj = self.operand(ref)
        if not isinstance(obj, SpecDef):
            raise UsageError(f"{ref}: expected a spec, got program {obj.name}")
        return obj

    def prog(self, ref: str) -> ProgramDef:
        obj = self.operand(ref)
        if not isinstance(obj, ProgramDef):
            raise UsageError(f"{ref}: expected a program, got spec {obj.name}")
        return obj

    def relation(self, obj: SpecDef | ProgramDef) -> Relation:
        if isinstance(obj, SpecDef):
            if obj.domain is not None and "verdict" not in obj._cache:
                v = check_domain_claim(obj, budget=self.budget)
                if v.status == "refuted":
                    print(f"warning: domain claim of {obj.name} is refuted "
                          f"(e.g. state {obj.space.state_at(v.witnesses[0])})", file=sys.stderr)
            return as_relation(obj, self.budget)
        ex = extract(obj, self.fuel)
        bad = {k: v for k, v in ex.tallies().items() if v}
        if bad:
            print(f"note: {obj.name}: states with failing paths: {bad}", file=sys.stderr)
        return ex.relation

    def rel(self, ref: str) -> Relation:
        return self.relation(self.operand(ref))


def _fmt_states(a: StateSet, limit: int) -> list[str]:
    sp = a.space
    out = []
    for i in a.indices()[:limit].tolist():
        out.append(", ".join(f"{k}={v!r}" for k, v in zip(sp.names, sp.state_at(i))))
    return out


# ---------------------------------------------------------------- commands


def cmd_check(ses: Session, args) -> tuple[int, dict]:
    if args.what == "refines":
        if len(args.operands) != 2:
            raise UsageError("check refines takes R2 R1 (does R2 refine R1?)")
        a, b = (ses.rel(x) for x in args.operands)
        ok = refines(a, b)
        print(f"{args.operands[0]} refines {args.operands[1]}: {ok}")
        return _exit(ok), {"refines": ok}
    if args.what == "correct":
        if len(args.operands) != 2:
            raise UsageError("check correct takes PROG SPEC")
        p = ses.rel(args.operands[0])
        r = ses.relation(ses.spec(args.operands[1]))
        ok = is_correct(p, r)
        print(f"{args.operands[0]} correct w.r.t. {args.operands[1]}: {ok}")
        return _exit(ok), {"correct": ok}
    if len(args.operands) != 3:
        raise UsageError("check more-correct takes P2 P1 SPEC")
    p2, p1 = ses.rel(args.operands[0]), ses.rel(args.operands[1])
    r = ses.relation(ses.spec(args.operands[2]))
    if args.det:
        ok, strict = more_correct_det(p2, p1, r), strictly_more_correct_det(p2, p1, r)
    else:
        ok, strict = more_correct(p2, p1, r), strictly_more_correct(p2, p1, r)
    word = "strictly more-correct" if strict else "more-correct"
    print(f"{args.operands[0]} {word if ok else 'not more-correct'} than {args.operands[1]}: {ok}")
    return _exit(ok), {"more_correct": ok, "strict": strict}


def cmd_cd(ses: Session, args) -> tuple[int, dict]:
    p = ses.rel(args.prog)
    r = ses.relation(ses.spec(args.spec))
    cd = competence_domain(p, r)
    dom = r.dom()
    print(f"competence domain: {len(cd)} of {len(dom)} states in dom({args.spec})")
    for line in _fmt_states(cd, args.limit):
        print(f"  {line}")
    return EXIT_TRUE, {"competence": len(cd), "domain": len(dom),
                       "states": cd.indices()[:args.limit].tolist()}


def cmd_project(ses: Session, args) -> tuple[int, dict]:
    r = ses.relation(ses.spec(args.spec))
    p = ses.rel(args.prog)
    pi = ra.materialize(projection(r, p))
    print(f"projection: {len(pi)} pairs over {len(pi.dom())} states")
    sp = pi.space
    shown = pi.pairs()[:args.limit]
    for s, t in shown:
        print(f"  {sp.state_at(s)} -> {sp.state_at(t)}")
    return EXIT_TRUE, {"pairs": len(pi), "domain": len(pi.dom()), "sample": shown}


def cmd_order(ses: Session, args) -> tuple[int, dict]:
    r = ses.relation(ses.spec(args.spec))
    progs = [ses.prog(x) for x in args.progs]
    rels = {p.name: ses.relation(p) for p in progs}
    if len(rels) != len(progs):
        raise UsageError("program names must be distinct")
    h = hasse(r, rels)
    report = {"hasse": h.as_dict()}
    code = EXIT_TRUE
    if len(rels) > 1:
        cv = order_chain(r, rels)
        report["chain"] = cv.as_dict()
        for a, b, v in zip(cv.names, cv.names[1:], cv.verdicts):
            print(f"{b} vs {a}: {v}")
        print(f"final program correct: {cv.final_correct}")
        code = _exit(cv.monotone)
    for i, members in enumerate(h.nodes):
        up = [", ".join(h.nodes[b]) for a, b in h.edges if a == i]
        tag = " [correct]" if h.correct[i] else ""
        print(f"node {{{', '.join(members)}}}{tag} -> {'; '.join(up) or '(top)'}")
    if args.dot is not None:
        dot = h.to_dot()
        if args.dot == "-":
            sys.stdout.write(dot)
        else:
            Path(args.dot).write_text(dot, encoding="utf-8")
    return code, report


def cmd_rel(ses: Session, args) -> tuple[int, dict]:
    r = ses.rel(args.operand)
    names = args.only.split(",") if args.only else None
    try:
        props = ra.properties(r, names)
    except KeyError as e:
        raise UsageError(f"unknown property {e.args[0]!r}; known: {', '.join(ra.PROPERTIES)}")
    for k, v in props.items():
        print(f"{k}: {v}")
    return EXIT_TRUE, {"properties": props}


def cmd_reliability(ses: Session, args) -> tuple[int, dict]:
    spec = ses.spec(args.spec)
    r = ses.relation(spec)
    progs = {}
    for x in args.progs:
        p = ses.prog(x)
        progs[p.name] = p
    d = Distribution.from_file(args.dist, spec.space, r.dom()) if args.dist else None
    rep = chain_report(spec, progs, d, args.n, args.seed, args.shards, ses.fuel)
    print(f"{'program':<12} {'exact':>8} {'estimate':>9} {'stderr':>8}  correct")
    for row in rep.rows:
        print(f"{row.name:<12} {row.exact:8.4f} {row.estimate:9.4f} {row.stderr:8.4f}  {row.correct}")
    print(f"monotone: {rep.monotone}")
    return _exit(rep.monotone), rep.as_dict()


def cmd_corpus(ses: Session, args) -> tuple[int, dict]:
    names = list(corpus_mod.CASES) if args.case == "all" else [args.case]
    report = corpus_mod.replay_all(names, fuel=ses.fuel, n=args.n, seed=args.seed,
                                   shards=args.shards)
    for name, rep in report["cases"].items():
        failed = [k for k, v in rep["checks"].items() if not v]
        status = "ok" if not failed else "FAILED " + ", ".join(failed)
        print(f"{name:<12} {len(rep['checks']):3d} checks  {status}")
    return _exit(report["ok"]), report


def _exit(ok: bool) -> int:
    return EXIT_TRUE if ok else EXIT_FALSE


# ---------------------------------------------------------------- parser


def _common(sub: bool) -> argparse.ArgumentParser:
    # sub-parsers repeat the global flags with suppressed defaults so they
    # work on either side of the subcommand
    d = (lambda v: argparse.SUPPRESS) if sub else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--fuel", type=int, default=d(DEFAULT_FUEL),
                   help="per-path step budget (default %(default)s)")
    p.add_argument("--budget", type=int, default=d(2**26),
                   help="predicate evaluation budget")
    p.add_argument("--report", metavar="FILE", default=d(None),
                   help="write a JSON report ('-' for stdout)")
    p.add_argument("--space", metavar="FILE", action="append", default=d(None),
                   help="load a DSL file before resolving names (repeatable)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relcorr", parents=[_common(False)],
                                     description="Relational correctness toolkit.")
    subs = parser.add_subparsers(dest="command", required=True)
    common = [_common(True)]

    p = subs.add_parser("check", parents=common, help="refinement and correctness verdicts")
    p.add_argument("what", choices=["refines", "correct", "more-correct"])
    p.add_argument("operands", nargs="+", help="spec/program names or files")
    p.add_argument("--det", action="store_true", help="use the deterministic definition")
    p.set_defaults(func=cmd_check)

    p = subs.add_parser("cd", parents=common, help="competence domain of a program")
    p.add_argument("prog")
    p.add_argument("spec")
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(func=cmd_cd)

    p = subs.add_parser("project", parents=common, help="projection of a program onto a spec")
    p.add_argument("spec")
    p.add_argument("prog")
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(func=cmd_project)

    p = subs.add_parser("order", parents=common, help="order programs by relative correctness")
    p.add_argument("spec")
    p.add_argument("progs", nargs="+")
    p.add_argument("--dot", nargs="?", const="-", metavar="FILE",
                   help="write the Hasse diagram as DOT (stdout when no FILE)")
    p.set_defaults(func=cmd_order)

    p = subs.add_parser("rel", parents=common, help="relation utilities")
    rel_subs = p.add_subparsers(dest="rel_command", required=True)
    q = rel_subs.add_parser("props", parents=common, help="relational property predicates")
    q.add_argument("operand")
    q.add_argument("--only", metavar="NAMES", help="comma-separated property names")
    q.set_defaults(func=cmd_rel)

    p = subs.add_parser("reliability", parents=common, help="exact and sampled reliability")
    p.add_argument("spec")
    p.add_argument("progs", nargs="+")
    p.add_argument("--dist", metavar="FILE", help="weights file: 'state-index weight' lines")
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=1)
    p.set_defaults(func=cmd_reliability)

    p = subs.add_parser("corpus", parents=common, help="replay the bundled case studies")
    p.add_argument("case", choices=[*corpus_mod.CASES, "all"])
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=1)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.fuel <= 0 or args.budget <= 0:
        parser.error("--fuel and --budget must be positive")
    try:
        ses = Session(args)
        code, report = args.func(ses, args)
    except (UsageError, DSLError, SpaceError, SupportError, MaterializationError,
            PathExplosionError, NondeterministicError, OSError) as e:
        print(f"relcorr: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    if args.report:
        text = corpus_mod.dumps(report)
        if args.report == "-":
            sys.stdout.write(text)
        else:
            Path(args.report).write_text(text, encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
