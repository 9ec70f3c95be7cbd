import numpy as np
import pytest

from relcorr import relalg as ra
from relcorr.corpus import CASES
from relcorr.relalg import MaterializationError
from relcorr.space import Space, StateSet, VarDecl
from relcorr.speclang import (as_relation, check_domain_claim, eval_pred, parse_spec,
                              pred_vector)
from relcorr.syntax import DSLError, Parser

CUBE = Space("T", (VarDecl("s", "int", 0, 125),))
FERMAT = Space("Fermat", (VarDecl("n", "int", 0, 200), VarDecl("x", "int", 0, 101),
                          VarDecl("y", "int", 0, 101)))
SQRT = Space("SqrtSp", (VarDecl("n", "int", 0, 400), VarDecl("x", "int", 0, 21)))
FERMAT_PRED = "n == x'*x' - y'*y' && 0 <= y' && y' <= x'"


def cube_spec():
    return parse_spec("spec R on T := s*s <= s' && s' <= s*s*s;", CUBE)


def test_parse_examples():
    r = cube_spec()
    assert r.free_vars == {("s", False), ("s", True)}
    parse_spec(f"spec F on Fermat := {FERMAT_PRED};", FERMAT)
    parse_spec("spec Sq on SqrtSp := x'*x' <= n && n < (x'+1)*(x'+1) && x' >= 0;", SQRT)


@pytest.mark.parametrize("text, msg", [
    ("spec R on T := z < 1;", "unknown"),
    ("spec R on T := s + 1;", "boolean"),
    ("spec R on T := forall(k in 0..3 : k' == 1);", ""),
    ("spec R on T := len(s) == 1;", ""),
    ("spec R on T := s == 1; domain := s' == 1;", "unprimed"),
    ("spec R on T := s == ;", ""),
])
def test_parse_errors(text, msg):
    with pytest.raises(DSLError) as ei:
        parse_spec(text, CUBE)
    assert msg in str(ei.value)


def test_eval_pred_cube():
    r = cube_spec()
    assert eval_pred(r, (2,), (6,))
    assert not eval_pred(r, (2,), (9,))


def test_string_counts_on_custom_alphabet():
    sp = Space("Str7", (VarDecl("q", "seq", alphabet="A7a#", maxlen=2),
                        VarDecl("let", "int", 0, 3), VarDecl("dig", "int", 0, 3),
                        VarDecl("other", "int", 0, 3)))
    src = CASES["strings"].source()
    body = src.split("spec S on Str :=", 1)[1].split(";", 1)[0]
    spec = parse_spec(f"spec S on Str7 := {body};", sp)
    assert eval_pred(spec, ("A7", 0, 0, 0), ("", 1, 1, 0))
    assert not eval_pred(spec, ("A7", 0, 0, 0), ("", 2, 0, 0))
    assert eval_pred(spec, ("#a", 0, 0, 0), ("", 1, 0, 1))


def test_cube_images():
    r = as_relation(cube_spec())
    assert r.image(2).tolist() == [4, 5, 6, 7, 8]
    assert r.dom() == StateSet.from_indices(CUBE, range(12))


def test_fermat_image_witnesses():
    spec = parse_spec(f"spec F on Fermat := {FERMAT_PRED};", FERMAT)
    r = as_relation(spec)
    img = {FERMAT.state_at(int(t))[1:] for t in r.image(FERMAT.index((9, 0, 0)))}
    assert {(3, 0), (5, 4)} <= img
    assert all(x * x - y * y == 9 for x, y in img)


def test_false_spec_is_empty():
    r = as_relation(parse_spec("spec E on T := false;", CUBE))
    assert ra.is_empty(r) and len(r) == 0


def test_lazy_equals_materialized():
    sp = Space("M", (VarDecl("a", "int", -4, 4), VarDecl("b", "int", 0, 5)))
    spec = parse_spec("spec M on M := a' + b' == a * b && b' <= b;", sp)
    r = as_relation(spec)
    m = ra.materialize(r)
    n = sp.cardinality
    s, t = np.divmod(np.arange(n * n), n)
    assert np.array_equal(np.flatnonzero(pred_vector(spec, s, t)), m.keys())
    assert ra.equals(r, m)


def test_domain_claims():
    small = Parser("space Fermat60 { n: int 0..60; x: int 0..31; y: int 0..31; }").space_decl()
    good = parse_spec(f"spec F on Fermat60 := {FERMAT_PRED}; "
                      "domain := n % 2 == 1 || n % 4 == 0;", small)
    assert check_domain_claim(good).status == "verified"
    sq = parse_spec("spec Sq on SqrtSp := x'*x' <= n && n < (x'+1)*(x'+1) && x' >= 0; "
                    "domain := n >= 0;", SQRT)
    assert check_domain_claim(sq).status == "verified"
    wrong = parse_spec(f"spec W on Fermat60 := {FERMAT_PRED}; domain := n % 2 == 1;", small)
    v = check_domain_claim(wrong)
    assert v.status == "refuted" and not v
    assert 4 in {small.state_at(i)[0] for i in v.witnesses}


def test_domain_claim_sampling_and_budget():
    sq = parse_spec("spec Sq on SqrtSp := x'*x' <= n && n < (x'+1)*(x'+1); domain := n >= 0;",
                    SQRT)
    v = check_domain_claim(sq, budget=22 * 50)
    assert v.status == "sampled-ok" and v.rows_checked == 50
    with pytest.raises(ValueError):
        check_domain_claim(sq, budget=0)
    with pytest.raises(MaterializationError):
        check_domain_claim(sq, budget=5)
    with pytest.raises(ValueError):
        check_domain_claim(cube_spec())


def test_verified_claim_gives_domain():
    sq = parse_spec("spec Sq on SqrtSp := x'*x' <= n && n < (x'+1)*(x'+1); domain := n >= 0;",
                    SQRT)
    check_domain_claim(sq)
    assert as_relation(sq).dom().mask.all()


def test_errors_fold_to_false_with_diagnostics():
    sp = Space("D", (VarDecl("a", "int", -2, 2),))
    spec = parse_spec("spec D on D := 10 / a == a';", sp)
    r = as_relation(spec)
    assert sp.index((0,)) not in set(r.dom())
    assert not eval_pred(spec, (0,), (0,))
    assert spec.diagnostics.as_dict().get("division-by-zero", 0) > 0
    over = parse_spec("spec O on D := a * 9223372036854775807 * 2 == a';", sp)
    assert ra.is_empty(ra.restrict_pre(as_relation(over), StateSet.from_indices(sp, [4])))
    assert over.diagnostics.as_dict().get("overflow", 0) > 0
