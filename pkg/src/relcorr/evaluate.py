"""Scalar and vectorized evaluation of DSL expressions.

Both evaluators implement the same strict semantics: signed 64-bit
arithmetic, C-style truncating ``/`` and ``%``, ``&&``/``||`` short-circuit,
quantifiers evaluate their body at every index of the range.  Any overflow,
division by zero, negative exponent, or out-of-bounds sequence index is an
evaluation error.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .syntax import (Binary, BoolLit, Call, CharLit, Expr, Index, Num, Quant,
                     Unary, Var)

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1
QUANT_WIDTH_CAP = 2**20

ERR_NONE, ERR_OVERFLOW, ERR_DIV0, ERR_INDEX, ERR_NEGEXP, ERR_QUANT = range(6)
ERROR_NAMES = {ERR_OVERFLOW: "overflow", ERR_DIV0: "division-by-zero",
               ERR_INDEX: "index-out-of-bounds", ERR_NEGEXP: "negative-exponent",
               ERR_QUANT: "quantifier-range"}


class EvalError(Exception):
    def __init__(self, code: int):
        self.code = code
        super().__init__(ERROR_NAMES.get(code, str(code)))

    @property
    def kind(self) -> str:
        return ERROR_NAMES[self.code]


def is_upper(c: int) -> bool:
    return 65 <= c <= 90


def is_lower(c: int) -> bool:
    return 97 <= c <= 122


def is_digit(c: int) -> bool:
    return 48 <= c <= 57


def is_square(v: int) -> bool:
    return v >= 0 and math.isqrt(v) ** 2 == v


# ---------------------------------------------------------------- scalar


def _chk(v: int) -> int:
    if v < INT_MIN or v > INT_MAX:
        raise EvalError(ERR_OVERFLOW)
    return v


def c_div(a: int, b: int) -> int:
    if b == 0:
        raise EvalError(ERR_DIV0)
    q = abs(a) // abs(b)
    return _chk(q if (a >= 0) == (b >= 0) else -q)


def c_mod(a: int, b: int) -> int:
    if b == 0:
        raise EvalError(ERR_DIV0)
    q = abs(a) // abs(b)
    q = q if (a >= 0) == (b >= 0) else -q
    return a - b * q


def c_pow(a: int, b: int) -> int:
    if b < 0:
        raise EvalError(ERR_NEGEXP)
    if a in (0, 1):
        return a if b else 1
    if a == -1:
        return -1 if b % 2 else 1
    if b > 64:
        raise EvalError(ERR_OVERFLOW)
    return _chk(a**b)


_SCALAR_ARITH = {
    "+": lambda a, b: _chk(a + b),
    "-": lambda a, b: _chk(a - b),
    "*": lambda a, b: _chk(a * b),
    "/": c_div,
    "%": c_mod,
    "**": c_pow,
}
_SCALAR_CMP = {
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


class ScalarCompiler:
    """Compile expressions to closures over a flat environment list.

    ``resolve(name, primed)`` returns the environment slot of a variable.
    Integer and character variables hold ints (characters as code points);
    sequence variables hold ``str``.  Quantifier indices get fresh slots past
    the resolved ones, so environments must be at least ``nslots`` long.
    """

    def __init__(self, resolve: Callable[[str, bool], int], nslots: int,
                 sym_codes: frozenset[int] = frozenset()):
        self.resolve = resolve
        self.nslots = nslots
        self.sym_codes = sym_codes

    def compile(self, e: Expr, bound: dict | None = None) -> Callable[[list], object]:
        bound = bound or {}
        if isinstance(e, Num):
            v = e.value
            return lambda env: v
        if isinstance(e, BoolLit):
            v = e.value
            return lambda env: v
        if isinstance(e, CharLit):
            v = e.code
            return lambda env: v
        if isinstance(e, Var):
            slot = bound[e.name] if e.name in bound and not e.primed else self.resolve(e.name, e.primed)
            return lambda env: env[slot]
        if isinstance(e, Unary):
            f = self.compile(e.operand, bound)
            if e.op == "-":
                return lambda env: _chk(-f(env))
            return lambda env: not f(env)
        if isinstance(e, Binary):
            lf, rf = self.compile(e.left, bound), self.compile(e.right, bound)
            if e.op == "&&":
                return lambda env: lf(env) and rf(env)
            if e.op == "||":
                return lambda env: lf(env) or rf(env)
            op = _SCALAR_ARITH.get(e.op) or _SCALAR_CMP[e.op]
            return lambda env: op(lf(env), rf(env))
        if isinstance(e, Quant):
            slot = self.nslots
            self.nslots += 1
            lof, hif = self.compile(e.lo, bound), self.compile(e.hi, bound)
            body = self.compile(e.body, {**bound, e.var: slot})
            kind = e.kind

            def quant(env):
                lo, hi = lof(env), hif(env)
                if hi - lo + 1 > QUANT_WIDTH_CAP:
                    raise EvalError(ERR_QUANT)
                n = 0
                for i in range(lo, hi + 1):
                    env[slot] = i
                    if body(env):
                        n += 1
                width = max(hi - lo + 1, 0)
                if kind == "count":
                    return n
                return n == width if kind == "forall" else n >= 1

            return quant
        if isinstance(e, Call):
            f = self.compile(e.args[0], bound)
            if e.func == "len":
                return lambda env: len(f(env))
            if e.func == "isupper":
                return lambda env: is_upper(f(env))
            if e.func == "islower":
                return lambda env: is_lower(f(env))
            if e.func == "isdigit":
                return lambda env: is_digit(f(env))
            if e.func == "issq":
                return lambda env: is_square(f(env))
            syms = self.sym_codes

            def issym(env):
                c = f(env)
                return c in syms and not (is_upper(c) or is_lower(c) or is_digit(c))

            return issym
        if isinstance(e, Index):
            sf, inf = self.compile(e.seq, bound), self.compile(e.index, bound)

            def index(env):
                s, i = sf(env), inf(env)
                if not 0 <= i < len(s):
                    raise EvalError(ERR_INDEX)
                return ord(s[i])

            return index
        raise TypeError(e)


# ---------------------------------------------------------------- vectorized


class VecContext:
    """Column source for :func:`eval_vector`.

    ``column(name, primed)`` returns int64 values (sequence variables give
    their ordinal); ``seq_tables(name)`` returns (lengths, codes) lookup
    tables indexed by ordinal.
    """

    def __init__(self, size: int, column, seq_tables, sym_codes=frozenset()):
        self.size = size
        self.column = column
        self.seq_tables = seq_tables
        self.sym_codes = np.array(sorted(sym_codes), dtype=np.int64)


def _merge(err: np.ndarray, new: np.ndarray, code: int) -> np.ndarray:
    return np.where((err == ERR_NONE) & new, np.int8(code), err)


def _first(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a != ERR_NONE, a, b)


def _vec_arith(op: str, a: np.ndarray, b: np.ndarray):
    """Return (result, overflow_mask, code) for checked int64 arithmetic."""
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if op == "+":
            r = a + b
            return r, ((a ^ r) & (b ^ r)) < 0, ERR_OVERFLOW
        if op == "-":
            r = a - b
            return r, ((a ^ b) & (a ^ r)) < 0, ERR_OVERFLOW
        if op == "*":
            r = a * b
            safe = np.where(a == 0, 1, a)
            bad = (a != 0) & ((r // safe != b) | ((a == -1) & (b == INT_MIN)))
            return r, bad, ERR_OVERFLOW
        if op in ("/", "%"):
            zero = b == 0
            ovf = (a == INT_MIN) & (b == -1)
            bs = np.where(zero | ovf, 1, b)
            rem = np.fmod(a, bs)
            if op == "%":
                return np.where(ovf, 0, rem), zero, ERR_DIV0
            q = (a - rem) // bs
            return q, zero, ERR_DIV0  # overflow handled by caller via ovf
        raise ValueError(op)


def _vec_pow(a: np.ndarray, b: np.ndarray):
    neg = b < 0
    out = np.ones_like(a)
    ovf = np.zeros(a.shape, dtype=bool)
    trivial = (a == 0) | (a == 1) | (a == -1)
    out = np.where(a == 0, np.where(b == 0, 1, 0), out)
    out = np.where(a == -1, np.where(b % 2 == 1, -1, 1), out)
    big = ~trivial & (b > 64)
    ovf |= big
    work = ~trivial & ~neg & ~big
    if work.any():
        acc = np.ones_like(a)
        for k in range(int(b[work].max())):
            step = work & (k < b)
            prod, bad, _ = _vec_arith("*", acc, a)
            ovf |= step & bad
            acc = np.where(step & ~bad, prod, acc)
        out = np.where(work, acc, out)
    return out, neg, ovf


def _covered(lo: np.ndarray, hi: np.ndarray):
    """Integers in the union of the closed intervals [lo, hi], in order."""
    if lo.size == 0:
        return
    order = np.argsort(lo, kind="stable")
    top = None
    for a, b in zip(lo[order].tolist(), hi[order].tolist()):
        start = a if top is None else max(a, top + 1)
        yield from range(start, b + 1)
        top = b if top is None else max(top, b)


def eval_vector(e: Expr, ctx: VecContext, bound: dict | None = None):
    """Evaluate over ``ctx.size`` rows; return (values, error_codes)."""
    bound = bound or {}
    n = ctx.size
    none = np.zeros(n, dtype=np.int8)
    if isinstance(e, Num):
        return np.full(n, e.value, dtype=np.int64), none
    if isinstance(e, BoolLit):
        return np.full(n, e.value, dtype=bool), none
    if isinstance(e, CharLit):
        return np.full(n, e.code, dtype=np.int64), none
    if isinstance(e, Var):
        if e.name in bound and not e.primed:
            return np.full(n, bound[e.name], dtype=np.int64), none
        return np.broadcast_to(ctx.column(e.name, e.primed), (n,)), none
    if isinstance(e, Unary):
        v, err = eval_vector(e.operand, ctx, bound)
        if e.op == "!":
            return ~v, err
        return -v, _merge(err, v == INT_MIN, ERR_OVERFLOW)
    if isinstance(e, Binary):
        lv, le = eval_vector(e.left, ctx, bound)
        rv, re_ = eval_vector(e.right, ctx, bound)
        if e.op == "&&":
            return lv & rv, np.where(le != ERR_NONE, le, np.where(lv, re_, ERR_NONE)).astype(np.int8)
        if e.op == "||":
            return lv | rv, np.where(le != ERR_NONE, le, np.where(~lv, re_, ERR_NONE)).astype(np.int8)
        err = _first(le, re_)
        if e.op in _SCALAR_CMP:
            ops = {"==": np.equal, "!=": np.not_equal, "<": np.less, "<=": np.less_equal,
                   ">": np.greater, ">=": np.greater_equal}
            return ops[e.op](lv, rv), err
        if e.op == "**":
            r, neg, ovf = _vec_pow(lv, rv)
            return r, _merge(_merge(err, neg, ERR_NEGEXP), ovf, ERR_OVERFLOW)
        r, bad, code = _vec_arith(e.op, lv, rv)
        err = _merge(err, bad, code)
        if e.op == "/":
            err = _merge(err, (lv == INT_MIN) & (rv == -1), ERR_OVERFLOW)
        return r, err
    if isinstance(e, Quant):
        lo, loe = eval_vector(e.lo, ctx, bound)
        hi, hie = eval_vector(e.hi, ctx, bound)
        err = _first(loe, hie)
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        # unsigned difference is exact whenever hi >= lo, even across the int64 range
        span = hi.view(np.uint64) - lo.view(np.uint64)
        nonempty = hi >= lo
        too_wide = (err == ERR_NONE) & nonempty & (span >= np.uint64(QUANT_WIDTH_CAP))
        err = _merge(err, too_wide, ERR_QUANT)
        live = err == ERR_NONE
        count = np.zeros(n, dtype=np.int64)
        if live.any():
            for i in _covered(lo[live & nonempty], hi[live & nonempty]):
                active = live & (lo <= i) & (i <= hi)
                if not active.any():
                    continue
                bv, be = eval_vector(e.body, ctx, {**bound, e.var: i})
                count += active & bv
                err = np.where((err == ERR_NONE) & active & (be != ERR_NONE), be, err).astype(np.int8)
        if e.kind == "count":
            return count, err
        width = np.where(nonempty & ~too_wide, span.astype(np.int64) + 1, 0)
        if e.kind == "forall":
            return count == width, err
        return count >= 1, err
    if isinstance(e, Call):
        v, err = eval_vector(e.args[0], ctx, bound)
        if e.func == "len":
            lengths, _ = ctx.seq_tables(e.args[0].name)
            return lengths[v], err
        if e.func == "isupper":
            return (v >= 65) & (v <= 90), err
        if e.func == "islower":
            return (v >= 97) & (v <= 122), err
        if e.func == "isdigit":
            return (v >= 48) & (v <= 57), err
        if e.func == "issq":
            return _vec_issq(v), err
        alnum = ((v >= 65) & (v <= 90)) | ((v >= 97) & (v <= 122)) | ((v >= 48) & (v <= 57))
        return np.isin(v, ctx.sym_codes) & ~alnum, err
    if isinstance(e, Index):
        ords, se = eval_vector(e.seq, ctx, bound)
        iv, ie = eval_vector(e.index, ctx, bound)
        lengths, codes = ctx.seq_tables(e.seq.name)
        ln = lengths[ords]
        ok = (iv >= 0) & (iv < ln)
        vals = codes[ords, np.clip(iv, 0, codes.shape[1] - 1)]
        return np.where(ok, vals, 0), _merge(_first(se, ie), ~ok, ERR_INDEX)
    raise TypeError(e)


def _vec_issq(v: np.ndarray) -> np.ndarray:
    nonneg = v >= 0
    w = np.where(nonneg, v, 0)
    r = np.floor(np.sqrt(w.astype(np.float64))).astype(np.int64)
    # float sqrt can be off by one for large inputs; compare through division
    # so (r + 1) ** 2 never has to be formed
    for _ in range(2):
        safe = np.maximum(r, 1)
        r = np.where((r > 0) & (r > w // safe), r - 1, r)
        nxt = r + 1
        r = np.where(nxt <= w // nxt, nxt, r)
    return nonneg & (r * r == w)
