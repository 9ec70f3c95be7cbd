import numpy as np
import pytest
from hypothesis import given, strategies as st

from relcorr.evaluate import (ERR_DIV0, ERR_INDEX, ERR_NEGEXP, ERR_NONE, ERR_OVERFLOW,
                              INT_MAX, INT_MIN, EvalError, ScalarCompiler, VecContext,
                              _vec_issq, c_div, c_mod, c_pow, eval_vector, is_square)
from relcorr.space import Space, VarDecl
from relcorr.syntax import (Binary, BoolLit, Call, CharLit, Index, Num, Quant, Unary, Var,
                            parse_expr)

SPACE = Space("E", (VarDecl("a", "int", -3, 3), VarDecl("b", "int", 0, 4),
                    VarDecl("q", "seq", alphabet="aB1#", maxlen=2)))
ALL = np.arange(SPACE.cardinality)


def scalar_all(e):
    """Evaluate ``e`` on every state with the closure compiler."""
    slots = {n: i for i, n in enumerate(SPACE.names)}
    comp = ScalarCompiler(lambda n, p: slots[n], len(slots), SPACE.alphabet_codes)
    fn = comp.compile(e)
    vals, errs = [], []
    for s in SPACE.enumerate():
        env = list(s) + [None] * (comp.nslots - len(s))
        try:
            vals.append(int(fn(env)))
            errs.append(ERR_NONE)
        except EvalError as ex:
            vals.append(0)
            errs.append(ex.code)
    return np.array(vals), np.array(errs)


def vector_all(e):
    ctx = VecContext(ALL.size, lambda n, p: SPACE.column(ALL, n),
                     lambda n: SPACE.var(n).seq_tables, SPACE.alphabet_codes)
    v, err = eval_vector(e, ctx)
    return np.asarray(v).astype(np.int64), err


_ints = st.deferred(lambda: st.one_of(
    st.builds(Num, st.integers(0, 40)),
    st.builds(Num, st.sampled_from([INT_MAX, 2**62, 2**32])),
    st.builds(CharLit, st.sampled_from([ord("a"), ord("B"), ord("1"), ord("#")])),
    st.builds(Var, st.sampled_from(["a", "b"])),
    st.builds(Unary, st.just("-"), _ints),
    st.builds(Binary, st.sampled_from(["+", "-", "*", "/", "%", "**"]), _ints, _ints),
    st.builds(Call, st.just("len"), st.just((Var("q"),))),
    st.builds(Index, st.just(Var("q")), _ints),
    st.builds(Quant, st.just("count"), st.just("k"), _ints, _ints, _bools),
))
_bools = st.deferred(lambda: st.one_of(
    st.builds(BoolLit, st.booleans()),
    st.builds(Binary, st.sampled_from(["==", "!=", "<", "<=", ">", ">="]), _ints, _ints),
    st.builds(Binary, st.sampled_from(["&&", "||"]), _bools, _bools),
    st.builds(Unary, st.just("!"), _bools),
    st.builds(Call, st.sampled_from(["issq", "isupper", "islower", "isdigit", "issym"]),
              st.tuples(_ints)),
    st.builds(Quant, st.sampled_from(["forall", "exists"]), st.just("k"), _ints, _ints, _bools),
))


@given(st.one_of(_ints, _bools))
def test_scalar_and_vector_agree(e):
    sv, se = scalar_all(e)
    vv, ve = vector_all(e)
    assert np.array_equal(se, ve)
    ok = se == ERR_NONE
    assert np.array_equal(sv[ok], vv[ok])


def test_c_division_semantics():
    assert c_div(-7, 2) == -3 and c_mod(-7, 2) == -1
    assert c_div(7, -2) == -3 and c_mod(7, -2) == 1
    assert c_div(-7, -2) == 3 and c_mod(-7, -2) == -1
    with pytest.raises(EvalError) as ei:
        c_div(1, 0)
    assert ei.value.code == ERR_DIV0
    with pytest.raises(EvalError):
        c_mod(1, 0)
    with pytest.raises(EvalError) as ei:
        c_div(INT_MIN, -1)
    assert ei.value.code == ERR_OVERFLOW


def test_power():
    assert c_pow(3, 4) == 81 and c_pow(-2, 3) == -8 and c_pow(5, 0) == 1
    with pytest.raises(EvalError) as ei:
        c_pow(2, -1)
    assert ei.value.code == ERR_NEGEXP
    with pytest.raises(EvalError) as ei:
        c_pow(2, 63)
    assert ei.value.code == ERR_OVERFLOW
    assert c_pow(-2, 63) == INT_MIN


@pytest.mark.parametrize("text, code", [
    ("9223372036854775807 + 1", ERR_OVERFLOW),
    ("-9223372036854775807 - 2", ERR_OVERFLOW),
    ("4611686018427387904 * 2", ERR_OVERFLOW),
    ("a / 0", ERR_DIV0),
    ("q[5]", ERR_INDEX),
    ("2 ** -1", ERR_NEGEXP),
])
def test_errors_both_evaluators(text, code):
    e = parse_expr(text)
    _, se = scalar_all(e)
    _, ve = vector_all(e)
    assert (se == code).all() and (ve == code).all()


def test_short_circuit():
    e = parse_expr("b == 0 || 10 / b > 1")
    _, err = scalar_all(e)
    assert (err == ERR_NONE).all()
    _, err = vector_all(e)
    assert (err == ERR_NONE).all()


def test_quantifier_errors_are_not_short_circuited():
    # the body fails at k = 5 even though k = 0 already decides exists
    e = parse_expr("exists(k in 0..5 : 10 / (5 - k) > 0)")
    _, se = scalar_all(e)
    _, ve = vector_all(e)
    assert (se == ERR_DIV0).all() and (ve == ERR_DIV0).all()


def test_empty_quantifier_ranges():
    for text, want in [("forall(k in 3..2 : false)", 1), ("exists(k in 3..2 : true)", 0),
                       ("count(k in 3..2 : true)", 0)]:
        v, err = scalar_all(parse_expr(text))
        assert (v == want).all() and (err == ERR_NONE).all()


def test_issym_uses_declared_alphabet():
    e = parse_expr("issym(q[0])")
    v, err = vector_all(e)
    idx = [i for i, s in enumerate(SPACE.enumerate()) if s[2][:1] == "#"]
    assert v[idx].all()
    assert v.sum() == len(idx)


def test_vector_issq_large_values():
    vals = [0, 1, 2, 4, 2**62, 3037000499**2, 3037000499**2 + 1, INT_MAX, (2**26 + 1)**2, -4]
    got = _vec_issq(np.array(vals, dtype=np.int64)).tolist()
    assert got == [is_square(v) for v in vals]


def test_quantifier_bounds_near_int_limits():
    e = Quant("count", "k", Num(3), Unary("-", Num(INT_MAX)), BoolLit(True))
    v, err = vector_all(e)
    assert np.all(err == ERR_NONE) and np.all(v == 0)
    # each row's range is tiny but their union spans almost all of int64
    lo = parse_expr("(a < 0) * (0 - 4611686018427387904) + (a >= 0) * 4611686018427387904")
    e = Quant("count", "k", lo, Binary("+", lo, Num(1)), BoolLit(True))
    v, err = vector_all(e)
    assert np.all(err == ERR_NONE) and np.all(v == 2)
    sv, se = scalar_all(e)
    assert np.array_equal(sv, v)
