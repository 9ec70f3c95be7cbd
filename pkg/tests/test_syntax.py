import pytest
from hypothesis import given, strategies as st

from relcorr.syntax import (Binary, BoolLit, Call, CharLit, DSLError, Index, Num, Parser,
                            Quant, Unary, Var, free_vars, parse_expr, pretty, pretty_block,
                            tokenize, typecheck)


def lookup(name, primed):
    return {"a": "int", "b": "int", "q": "seq", "c": "char"}.get(name)


def test_precedence():
    e = parse_expr("a + b * 2 == 7 || !(a < b) && true")
    assert e == Binary(
        "||",
        Binary("==", Binary("+", Var("a"), Binary("*", Var("b"), Num(2))), Num(7)),
        Binary("&&", Unary("!", Binary("<", Var("a"), Var("b"))), BoolLit(True)))


def test_power_binds_tighter_than_unary_minus():
    assert parse_expr("-2 ** 2") == Unary("-", Binary("**", Num(2), Num(2)))
    assert parse_expr("2 ** 3 ** 2") == Binary("**", Num(2), Binary("**", Num(3), Num(2)))


def test_primes_quantifiers_and_builtins():
    e = parse_expr("count(k in 0..len(q)-1 : isupper(q[k])) == let'")
    assert isinstance(e.left, Quant)
    assert e.right == Var("let", True)
    assert free_vars(e) == {("q", False), ("let", True)}


def test_char_literals_and_escapes():
    assert parse_expr("'A'") == CharLit(65)
    assert parse_expr(r"'\n'") == CharLit(10)
    assert parse_expr(r"'\''") == CharLit(39)
    assert parse_expr("'#'") == CharLit(35)
    for code in (10, 39, 92, 35, 65):
        assert parse_expr(pretty(CharLit(code))) == CharLit(code)


def test_comments_are_skipped():
    assert parse_expr("a // trailing\n + 1 # another") == Binary("+", Var("a"), Num(1))


@pytest.mark.parametrize("text", ["a +", "a < b < c", "(a", "foo(a)", "a ==", "x'' + 1",
                                  "forall(i in 0..2 a)", "'ab'", "1 2"])
def test_syntax_errors(text):
    with pytest.raises(DSLError):
        parse_expr(text)


def test_error_position():
    with pytest.raises(DSLError) as ei:
        Parser("space T {\n s: int 0..3 }").space_decl()
    assert ei.value.line == 2


@pytest.mark.parametrize("text, kind", [
    ("a + 1", "int"), ("a < b", "bool"), ("len(q)", "int"), ("q[0] == 'A'", "bool"),
    ("forall(i in 0..2 : i < a)", "bool"), ("count(i in 0..2 : true)", "int"),
    ("issq(a)", "bool"), ("c == 'x'", "bool"),
])
def test_typecheck_ok(text, kind):
    assert typecheck(parse_expr(text), lookup) == kind


@pytest.mark.parametrize("text", [
    "a + true", "q + 1", "!a", "len(a)", "a[0]", "zz == 1", "forall(i in 0..2 : i)",
    "forall(a in 0..2 : true)", "forall(i in 0..2 : i' == 1)", "q < q",
    "forall(i in 0..1 : forall(i in 0..1 : true))",
])
def test_typecheck_errors(text):
    with pytest.raises(DSLError):
        typecheck(parse_expr(text), lookup)


def test_tokenize_positions():
    toks = tokenize("a\n  b'")
    assert [(t.text, t.line, t.col) for t in toks[:2]] == [("a", 1, 1), ("b'", 2, 3)]


# -- round trip ------------------------------------------------------------

_ints = st.deferred(lambda: st.one_of(
    st.builds(Num, st.integers(0, 10**6)),
    st.builds(CharLit, st.sampled_from([65, 97, 48, 35, 10, 39, 92])),
    st.builds(Var, st.sampled_from(["a", "b"]), st.booleans()),
    st.builds(Unary, st.just("-"), _ints),
    st.builds(Binary, st.sampled_from(["+", "-", "*", "/", "%", "**"]), _ints, _ints),
    st.builds(Call, st.just("len"), st.just((Var("q"),))),
    st.builds(Index, st.just(Var("q")), _ints),
))
_bools = st.deferred(lambda: st.one_of(
    st.builds(BoolLit, st.booleans()),
    st.builds(Binary, st.sampled_from(["==", "!=", "<", "<=", ">", ">="]), _ints, _ints),
    st.builds(Binary, st.sampled_from(["&&", "||"]), _bools, _bools),
    st.builds(Unary, st.just("!"), _bools),
    st.builds(Call, st.sampled_from(["issq", "isupper", "isdigit"]), st.tuples(_ints)),
    st.builds(Quant, st.sampled_from(["forall", "exists"]), st.just("k"), _ints, _ints,
              _bools),
))


@given(st.one_of(_ints, _bools))
def test_pretty_roundtrip(e):
    assert parse_expr(pretty(e)) == e


def test_pretty_block_roundtrip():
    src = """prog p on T local r: -3..9; {
      r = 0;
      if (s > 2) { s = s - 1; } else if (s == 0) { abort; } else { skip; }
      while (r < s) { r = r + 1; }
      either { s = 0; } or { s = 1; }
    }"""
    ast = Parser(src).prog_decl()
    again = Parser(f"prog p on T local r: -3..9; {pretty_block(ast.body)}").prog_decl()
    assert again == ast
