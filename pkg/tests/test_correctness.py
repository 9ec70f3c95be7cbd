import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import small_space
from relcorr import relalg as ra
from relcorr.correctness import (NondeterministicError, competence_domain, hasse, is_correct,
                                 more_correct, more_correct_det, order_chain, projection,
                                 refinement_equiv_bruteforce, refines, strictly_more_correct,
                                 strictly_more_correct_det, verdict)
from relcorr.corpus import CASES
from relcorr.minilang import extract_function
from relcorr.space import SpaceError, StateSet
from relcorr.speclang import as_relation


@st.composite
def relations(draw, k=1, n=None, deterministic=None):
    n = n or draw(st.integers(2, 4))
    sp = small_space(n)
    out = []
    for i in range(k):
        det = draw(st.booleans()) if deterministic is None else deterministic
        if det:
            succ = draw(st.lists(st.integers(-1, n - 1), min_size=n, max_size=n))
            out.append(ra.from_successors(sp, np.array(succ)))
        else:
            cells = list(itertools.product(range(n), repeat=2))
            out.append(ra.from_pairs(sp, draw(st.sets(st.sampled_from(cells)))))
    return out


def fig2():
    ws = CASES["fig2"].load()
    r = as_relation(ws.spec("R"))
    return r, extract_function(ws.prog("P")), extract_function(ws.prog("Pp"))


def test_fig2_fixture():
    r, p, q = fig2()
    assert more_correct(q, p, r) and strictly_more_correct(q, p, r)
    assert not more_correct(p, q, r)
    assert more_correct_det(q, p, r) and strictly_more_correct_det(q, p, r)
    assert not refines(q, p)
    sp = r.space
    assert ra.equals(ra.dom_vector(ra.inter(r, p)), ra.vector_of(StateSet.from_indices(sp, [1, 2])))
    assert ra.equals(ra.dom_vector(ra.inter(r, q)),
                     ra.vector_of(StateSet.from_indices(sp, [1, 2, 3])))
    assert verdict(q, p, r) == "strictly_more_correct"
    assert verdict(p, q, r) == "less_correct"
    assert more_correct_det(p, p, r) and not strictly_more_correct_det(p, p, r)


def test_trivial_refinements(rng):
    sp = small_space(4)
    from conftest import random_relation
    r = random_relation(rng, sp)
    assert refines(r, r)
    assert refines(r, ra.empty(sp))
    assert ra.is_empty(projection(r, ra.empty(sp)))
    ident = ra.identity(sp)
    assert is_correct(ident, ident) and ra.equals(projection(ident, ident), ident)


def test_nondeterministic_arguments_rejected():
    sp = small_space(2)
    nd = ra.from_pairs(sp, [(0, 0), (0, 1)])
    f = ra.identity(sp)
    with pytest.raises(NondeterministicError):
        more_correct_det(nd, f, f)
    with pytest.raises(NondeterministicError):
        strictly_more_correct_det(f, nd, f)


def test_wrong_outcome_on_competence_domain():
    sp = small_space(2)
    p, r = ra.from_pairs(sp, [(0, 0)]), ra.from_pairs(sp, [(0, 0)])
    p2 = ra.from_pairs(sp, [(0, 0), (0, 1)])
    assert competence_domain(p, r) == competence_domain(p2, r)
    assert not more_correct(p2, p, r)
    assert more_correct(p, p2, r)


def test_space_mismatch():
    a, b = small_space(2, "A"), small_space(2, "B")
    with pytest.raises(SpaceError):
        refines(ra.identity(a), ra.identity(b))
    with pytest.raises(SpaceError):
        more_correct(ra.identity(a), ra.identity(a), ra.identity(b))


def test_corpus_correctness_examples():
    for name, prog in (("fermat", "p3"), ("sqrt", "p3")):
        ws = CASES[name].load()
        r = as_relation(ws.spec(CASES[name].spec))
        assert is_correct(extract_function(ws.prog(prog)), r)
    ws = CASES["cube"].load()
    r = as_relation(ws.spec("R"))
    rels = {k: extract_function(p) for k, p in ws.progs.items()}
    assert not is_correct(rels["p4"], r)
    assert competence_domain(rels["p4"], r) == StateSet.from_indices(r.space, [0, 1])
    assert strictly_more_correct_det(rels["p6"], rels["p1"], r)


def test_order_chain_and_reverse():
    ws = CASES["fermat"].load()
    r = as_relation(ws.spec("F"))
    names = ["p0", "p1", "p2", "p3"]
    rels = {k: extract_function(ws.prog(k)) for k in names}
    cv = order_chain(r, rels)
    assert cv.verdicts == ["strictly_more_correct"] * 3
    assert cv.final_correct and cv.strictly_monotone
    back = order_chain(r, [rels[k] for k in reversed(names)])
    assert back.verdicts == ["less_correct"] * 3 and not back.monotone
    with pytest.raises(ValueError):
        order_chain(r, [rels["p0"]])


def test_hasse_cube():
    ws = CASES["cube"].load()
    r = as_relation(ws.spec("R"))
    rels = {k: extract_function(p) for k, p in ws.progs.items()}
    h = hasse(r, rels)
    assert ("p8", "p9") in h.nodes
    bottom = h.node_of("p0")
    assert all(b != bottom for _, b in h.edges)
    edges = h.edge_names()
    for lo, hi in (("p0", "p1"), ("p1", "p4"), ("p3", "p6"), ("p4", "p8")):
        assert any(lo in a and hi in b for a, b in edges)
    assert h.correct[h.node_of("p7")]
    dot = h.to_dot()
    assert dot.startswith("digraph") and 'label="p8, p9"' in dot
    assert 'n7 [label="p7", shape=doublecircle]' in dot and "n8 -> n7;" in dot
    # edges agree with strict more-correctness
    for a, b in h.edges:
        assert strictly_more_correct(rels[h.nodes[b][0]], rels[h.nodes[a][0]], r)


def test_hasse_single_program():
    sp = small_space(3)
    i = ra.identity(sp)
    h = hasse(i, {"only": i})
    assert list(h.nodes) == [("only",)]
    assert not h.edges and list(h.correct) == [True]


def test_bruteforce_deterministic_small():
    rep = refinement_equiv_bruteforce(2)
    assert rep.holds and rep.programs == 9 and rep.specs == 16
    with pytest.raises(ValueError):
        refinement_equiv_bruteforce(4, "all")
    with pytest.raises(ValueError):
        refinement_equiv_bruteforce(2, "bogus")


def test_bruteforce_kernel_matches_relalg():
    """The bitmask kernel against the relation-level definitions, n=2."""
    n = 2
    sp = small_space(n)
    cells = list(itertools.product(range(n), repeat=2))
    rels = [ra.from_pairs(sp, [c for b, c in enumerate(cells) if m >> b & 1])
            for m in range(16)]
    mismatches = 0
    for p in rels:
        for p2 in rels:
            all_ok = all(more_correct(p2, p, r) for r in rels)
            mismatches += refines(p2, p) != all_ok
    rep = refinement_equiv_bruteforce(n, "all", max_examples=1)
    assert rep.counterexamples == mismatches
    p, p2, r = rep.examples[0]
    P, P2 = ra.from_pairs(sp, p), ra.from_pairs(sp, p2)
    if r is None:
        assert not refines(P2, P) and all(more_correct(P2, P, x) for x in rels)
    else:
        assert refines(P2, P) and not more_correct(P2, P, ra.from_pairs(sp, r))


@given(relations(k=2))
def test_projection_laws(rels):
    r, p = rels
    pi = projection(r, p)
    assert ra.equals(projection(r, pi), pi)
    assert refines(p, pi) and refines(r, pi)
    assert is_correct(p, r) == ra.equals(pi, r)


@given(relations(k=2, deterministic=True))
def test_correct_iff_full_competence(rels):
    r, p = rels
    assert is_correct(p, r) == (competence_domain(p, r) == r.dom())


@given(relations(k=4))
def test_relative_correctness_preorder(rels):
    r, a, b, c = rels
    assert more_correct(a, a, r)
    if more_correct(b, a, r) and more_correct(c, b, r):
        assert more_correct(c, a, r)


@given(relations(k=3, deterministic=True))
def test_prop1_deterministic(rels):
    r, p, p2 = rels
    assert more_correct_det(p2, p, r) == refines(projection(r, p2), projection(r, p))
    assert more_correct_det(p2, p, r) == more_correct(p2, p, r)


@given(relations(k=2), st.data())
def test_correct_program_is_maximal(rels, data):
    r, p = rels
    sp = r.space
    dom = r.dom().indices()
    succ = np.full(sp.cardinality, -1)
    for s in dom.tolist():
        succ[s] = data.draw(st.sampled_from(r.image(s).tolist()))
    star = ra.from_successors(sp, succ)
    assert is_correct(star, r)
    assert more_correct(star, p, r)
