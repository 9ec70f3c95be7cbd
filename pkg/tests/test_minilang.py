import pytest
from hypothesis import given, strategies as st

from relcorr import relalg as ra
from relcorr.corpus import CASES
from relcorr.minilang import (PathExplosionError, exec_prog, extract, extract_function,
                              is_deterministic_prog, live_inputs, parse_prog)
from relcorr.oracles import oracle_isqrt_ceil
from relcorr.relalg import MaterializationError
from relcorr.space import Space, VarDecl
from relcorr.syntax import DSLError

T = Space("T", (VarDecl("s", "int", 0, 125),))
XY = Space("XY", (VarDecl("x", "int", -8, 8), VarDecl("y", "int", -8, 8)))
LOOP = "prog loop on XY { while (y != 0) { x = x + 1; y = y - 1; } }"


def test_parse_examples():
    parse_prog("prog p4 on T { skip; }", T)
    parse_prog("prog p0 on T { abort; }", T)
    p = parse_prog(LOOP, XY)
    assert not p.has_choice


@pytest.mark.parametrize("text", [
    "prog p on T { z = 1; }",
    "prog p on T { s = s' + 1; }",
    "prog p on T { if (s) { skip; } }",
    "prog p on T local s: 0..1; { skip; }",
    "prog p on T local a: 0..1; local a: 0..2; { skip; }",
    "prog p on T local a: 3..1; { skip; }",
    "prog p on T { s = 1 }",
    "prog p on U { skip; }",
])
def test_parse_errors(text):
    with pytest.raises(DSLError):
        parse_prog(text, {"T": T})


def test_sequences_are_read_only():
    sp = Space("Q", (VarDecl("q", "seq", alphabet="ab", maxlen=2),))
    with pytest.raises(DSLError, match="read-only"):
        parse_prog("prog p on Q { q = 1; }", sp)


def test_exec_examples():
    fermat = CASES["fermat"].load()
    out = exec_prog(fermat.prog("p1"), (9, 0, 0))
    assert out.final_states(fermat.prog("p1").space) == [(9, 3, 0)]
    sq = CASES["sqrt"].load()
    out = exec_prog(sq.prog("p2"), (10, 0))
    assert out.final_states(sq.prog("p2").space) == [(10, 4)]
    out = exec_prog(parse_prog("prog a on T { abort; }", T), 7)
    assert not out.finals and out.abort_paths == 1


def test_runtime_errors_and_fuel():
    p = parse_prog("prog p on T { s = 2*s*s*s - 8; }", T)
    out = exec_prog(p, 0)
    assert not out.finals and out.runtime_error_paths == 1
    assert exec_prog(p, 2).final_states(T) == [(8,)]
    spin = parse_prog("prog w on T { while (s >= 0) { skip; } }", T)
    out = exec_prog(spin, 3, fuel=50)
    assert not out.finals and out.fuel_exhausted_paths == 1
    with pytest.raises(ValueError):
        exec_prog(spin, 3, fuel=0)
    div = parse_prog("prog d on T { s = 10 / s; }", T)
    assert exec_prog(div, 0).runtime_error_paths == 1


def test_extract_examples():
    skip = extract_function(parse_prog("prog p4 on T { skip; }", T))
    assert ra.equals(skip, ra.identity(T))
    sq = extract_function(parse_prog("prog p7 on T { s = s*s; }", T))
    assert sq.pairs() == [(s, s * s) for s in range(12)]
    loop = extract_function(parse_prog(LOOP, XY))
    expected = {(XY.index((x, y)), XY.index((x + y, 0)))
                for x in range(-8, 9) for y in range(0, 9) if -8 <= x + y <= 8}
    assert set(loop.pairs()) == expected


def test_reduced_and_full_extraction_agree():
    for name in ("sqrt", "strings"):
        ws = CASES[name].load()
        for p in ws.progs.values():
            a = extract(p, reduce=True)
            b = extract(p, reduce=False)
            assert ra.equals(a.relation, b.relation), (name, p.name)
            assert a.tallies() == b.tallies()
            assert a.runs <= b.runs


def test_liveness():
    ws = CASES["sqrt"].load()
    assert live_inputs(ws.prog("p1")) == ("n",)  # n passes through unchanged
    assert live_inputs(ws.prog("p0")) == ()
    assert live_inputs(ws.prog("p2")) == ("n",)
    assert live_inputs(ws.prog("f")) == ("n", "x")


def test_nondeterminism():
    sp = Space("X", (VarDecl("x", "int", 0, 3),))
    p = parse_prog("prog c on X { either { x = 0; } or { x = 1; } }", sp)
    assert p.has_choice
    assert exec_prog(p, 3).final_states(sp) == [(0,), (1,)]
    assert not is_deterministic_prog(p)
    assert is_deterministic_prog(parse_prog("prog a on X { abort; }", sp))
    # choice that collapses to one outcome is still deterministic
    q = parse_prog("prog c on X { either { x = 1; } or { x = 1; } }", sp)
    assert q.has_choice and is_deterministic_prog(q)


def test_fork_cap():
    sp = Space("X", (VarDecl("x", "int", 0, 3),))
    p = parse_prog("prog f on X local i: 0..100; "
                   "{ while (i < 20) { i = i + 1; either { skip; } or { skip; } } }", sp)
    with pytest.raises(PathExplosionError):
        exec_prog(p, 0)


def test_space_cap():
    big = Space("B", (VarDecl("a", "int", 0, 4999), VarDecl("b", "int", 0, 4999)))
    with pytest.raises(MaterializationError):
        extract(parse_prog("prog p on B { skip; }", big))


def test_corpus_programs_deterministic():
    for case in CASES.values():
        for p in case.load().progs.values():
            assert not p.has_choice
            assert is_deterministic_prog(p)


@given(st.integers(1, 40))
def test_fuel_monotone(fuel):
    ws = CASES["sqrt"].load()
    p = ws.prog("p2")
    small = extract_function(p, fuel)
    big = extract_function(p, 2 * fuel)
    assert ra.subset(small, big)
    assert ra.is_deterministic(big)


def test_fuel_stable():
    p = CASES["sqrt"].load().prog("p3")
    a, b = extract_function(p, 10_000), extract_function(p, 20_000)
    assert ra.equals(a, b)


def test_fermat_p1_closed_form_spot():
    p = CASES["fermat"].load().prog("p1")
    for n in (0, 1, 2, 50, 199, 200):
        assert exec_prog(p, (n, 0, 0)).final_states(p.space) == [(n, oracle_isqrt_ceil(n), 0)]
