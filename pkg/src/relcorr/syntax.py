"""Lexer, AST and recursive-descent parser for the DSL.

Every declaration kind shares one grammar."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Union

from .space import Space, SpaceError, VarDecl


class DSLError(ValueError):
    """Syntax or static-semantics error, with a 1-based source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = ""):
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        where = ":".join([source] * bool(source) + ([str(line), str(col)] if line else []))
        super().__init__(f"{where}: {message}" if where else message)


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'?)
  | (?P<int>\d+)
  | (?P<string>"[^"\n]*")
  | (?P<char>'(?:\\.|[^'\\\n])')
  | (?P<op>\.\.|:=|==|!=|<=|>=|&&|\|\||\*\*|[{}()\[\];:,+\-*/%<>!=])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "0": "\0", "\\": "\\", "'": "'"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | string | char | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DSLError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        nl = m.group().count("\n")
        if nl:
            line += nl
            line_start = pos + m.group().rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class CharLit:
    code: int


@dataclass(frozen=True)
class Var:
    name: str
    primed: bool = False


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "!"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Quant:
    kind: str  # forall | exists | count
    var: str
    lo: "Expr"
    hi: "Expr"
    body: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class Index:
    seq: "Expr"
    index: "Expr"


Expr = Union[Num, BoolLit, CharLit, Var, Unary, Binary, Quant, Call, Index]

ARITH_OPS = ("+", "-", "*", "/", "%", "**")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&&", "||")
BUILTINS = {
    "len": ("seq", "int"),
    "isupper": ("int", "bool"),
    "islower": ("int", "bool"),
    "isdigit": ("int", "bool"),
    "issym": ("int", "bool"),
    "issq": ("int", "bool"),
}
KEYWORDS = {"true", "false", "forall", "exists", "count", "in", "space", "spec", "prog",
            "on", "domain", "local", "if", "else", "while", "either", "or", "skip", "abort",
            "int", "char", "seq", "over", "maxlen"}


# statements


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple
    orelse: tuple = ()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple


@dataclass(frozen=True)
class Either:
    first: tuple
    second: tuple


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Abort:
    pass


Stmt = Union[Assign, If, While, Either, Skip, Abort]


# top-level declarations (unresolved)


@dataclass(frozen=True)
class SpecAST:
    name: str
    space: str
    pred: Expr
    domain: Expr | None = None


@dataclass(frozen=True)
class ProgAST:
    name: str
    space: str
    locals: tuple  # of (name, lo, hi)
    body: tuple


# ---------------------------------------------------------------- parser


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, msg: str, tok: Token | None = None) -> DSLError:
        tok = tok or self.tok
        found = tok.text or "end of input"
        return DSLError(f"{msg} (found {found!r})", tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        t = self.tok
        self.pos += 1
        return t

    def ident(self, what: str = "identifier", allow_prime: bool = False) -> str:
        t = self.tok
        if t.kind != "ident" or t.text.rstrip("'") in KEYWORDS:
            raise self.error(f"expected {what}")
        if t.text.endswith("'") and not allow_prime:
            raise self.error(f"unexpected primed name in {what}")
        self.pos += 1
        return t.text

    def integer(self) -> int:
        neg = self.accept("-")
        t = self.tok
        if t.kind != "int":
            raise self.error("expected integer")
        self.pos += 1
        return -int(t.text) if neg else int(t.text)

    def string(self) -> str:
        t = self.tok
        if t.kind != "string":
            raise self.error("expected string literal")
        self.pos += 1
        return t.text[1:-1]

    def end(self):
        if self.tok.kind != "eof":
            raise self.error("expected end of input")

    # expressions, lowest precedence first
    def expr(self) -> Expr:
        left = self.and_expr()
        while self.accept("||"):
            left = Binary("||", left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.cmp_expr()
        while self.accept("&&"):
            left = Binary("&&", left, self.cmp_expr())
        return left

    def cmp_expr(self) -> Expr:
        left = self.add_expr()
        for op in CMP_OPS:
            if self.at(op):
                self.pos += 1
                right = self.add_expr()
                if any(self.at(o) for o in CMP_OPS):
                    raise self.error("comparisons do not chain; use &&")
                return Binary(op, left, right)
        return left

    def add_expr(self) -> Expr:
        left = self.mul_expr()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.pos += 1
            left = Binary(op, left, self.mul_expr())
        return left

    def mul_expr(self) -> Expr:
        left = self.unary()
        while self.at("*") or self.at("/") or self.at("%"):
            op = self.tok.text
            self.pos += 1
            left = Binary(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.accept("-"):
            return Unary("-", self.unary())
        if self.accept("!"):
            return Unary("!", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.postfix()
        if self.accept("**"):
            return Binary("**", base, self.unary())
        return base

    def postfix(self) -> Expr:
        e = self.primary()
        while self.accept("["):
            idx = self.expr()
            self.expect("]")
            e = Index(e, idx)
        return e

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.pos += 1
            return Num(int(t.text))
        if t.kind == "char":
            self.pos += 1
            body = t.text[1:-1]
            if body.startswith("\\"):
                if body[1] not in _ESCAPES:
                    raise self.error("unknown escape in character literal", t)
                body = _ESCAPES[body[1]]
            return CharLit(ord(body))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            if t.text == "true" or t.text == "false":
                self.pos += 1
                return BoolLit(t.text == "true")
            if t.text in ("forall", "exists", "count"):
                self.pos += 1
                self.expect("(")
                var = self.ident("quantifier index")
                self.expect("in")
                lo = self.expr()
                self.expect("..")
                hi = self.expr()
                self.expect(":")
                body = self.expr()
                self.expect(")")
                return Quant(t.text, var, lo, hi, body)
            name = self.ident("expression", allow_prime=True)
            if self.at("(") and not name.endswith("'"):
                if name not in BUILTINS:
                    raise self.error(f"unknown function {name!r}", t)
                self.pos += 1
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                return Call(name, tuple(args))
            if name.endswith("'"):
                return Var(name[:-1], True)
            return Var(name)
        raise self.error("expected expression")

    # declarations
    def space_decl(self) -> Space:
        self.expect("space")
        name = self.ident("space name")
        self.expect("{")
        decls = []
        start = self.tok
        while not self.at("}"):
            decl_tok = self.tok
            vname = self.ident("variable name")
            self.expect(":")
            try:
                if self.accept("int"):
                    lo = self.integer()
                    self.expect("..")
                    hi = self.integer()
                    decls.append(VarDecl(vname, "int", lo=lo, hi=hi))
                elif self.accept("char"):
                    self.expect("over")
                    decls.append(VarDecl(vname, "char", alphabet=self.string()))
                elif self.accept("seq"):
                    self.expect("over")
                    alpha = self.string()
                    self.expect("maxlen")
                    decls.append(VarDecl(vname, "seq", alphabet=alpha, maxlen=self.integer()))
                else:
                    raise self.error("expected 'int', 'char' or 'seq'")
            except SpaceError as e:
                raise DSLError(str(e), decl_tok.line, decl_tok.col) from None
            self.expect(";")
        if not decls:
            raise self.error("space needs at least one variable", start)
        self.expect("}")
        try:
            return Space(name, tuple(decls))
        except SpaceError as e:
            raise DSLError(str(e), start.line, start.col) from None

    def spec_decl(self) -> SpecAST:
        self.expect("spec")
        name = self.ident("spec name")
        self.expect("on")
        space = self.ident("space name")
        self.expect(":=")
        pred = self.expr()
        self.expect(";")
        domain = None
        if self.accept("domain"):
            self.expect(":=")
            domain = self.expr()
            self.expect(";")
        return SpecAST(name, space, pred, domain)

    def prog_decl(self) -> ProgAST:
        self.expect("prog")
        name = self.ident("program name")
        self.expect("on")
        space = self.ident("space name")
        locs = []
        while self.accept("local"):
            lname = self.ident("local name")
            self.expect(":")
            lo = self.integer()
            self.expect("..")
            hi = self.integer()
            self.expect(";")
            locs.append((lname, lo, hi))
        return ProgAST(name, space, tuple(locs), self.block())

    def block(self) -> tuple:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            stmts.append(self.stmt())
        self.expect("}")
        return tuple(stmts)

    def stmt(self) -> Stmt:
        if self.accept("skip"):
            self.expect(";")
            return Skip()
        if self.accept("abort"):
            self.expect(";")
            return Abort()
        if self.accept("if"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse: tuple = ()
            if self.accept("else"):
                # `else if` is sugar for `else { if ... }`
                orelse = (self.stmt(),) if self.at("if") else self.block()
            return If(cond, then, orelse)
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return While(cond, self.block())
        if self.accept("either"):
            first = self.block()
            self.expect("or")
            return Either(first, self.block())
        if self.at("{"):
            raise self.error("nested blocks are only allowed after if/else/while/either")
        target = self.ident("statement")
        self.expect("=")
        e = self.expr()
        self.expect(";")
        return Assign(target, e)


def parse_expr(text: str) -> Expr:
    p = Parser(text)
    e = p.expr()
    p.end()
    return e


# ---------------------------------------------------------------- typing


def typecheck(expr: Expr, lookup: Callable[[str, bool], str | None], bound=()) -> str:
    """Return "int", "bool" or "seq" for ``expr``; raise DSLError otherwise.

    ``lookup(name, primed)`` gives the kind of a variable ("int", "char",
    "seq") or None when the name is not visible.
    """

    def go(e, bound) -> str:
        if isinstance(e, Num) or isinstance(e, CharLit):
            return "int"
        if isinstance(e, BoolLit):
            return "bool"
        if isinstance(e, Var):
            if e.name in bound:
                if e.primed:
                    raise DSLError(f"quantifier index {e.name!r} cannot be primed")
                return "int"
            kind = lookup(e.name, e.primed)
            if kind is None:
                raise DSLError(f"unknown variable {e.name + chr(39) * e.primed!r}")
            return "seq" if kind == "seq" else "int"
        if isinstance(e, Unary):
            t = go(e.operand, bound)
            want = "int" if e.op == "-" else "bool"
            if t != want:
                raise DSLError(f"operator {e.op!r} needs {want}, got {t}")
            return want
        if isinstance(e, Binary):
            lt, rt = go(e.left, bound), go(e.right, bound)
            if e.op in BOOL_OPS:
                if lt != "bool" or rt != "bool":
                    raise DSLError(f"operator {e.op!r} needs bool operands")
                return "bool"
            if e.op in CMP_OPS:
                if lt == rt == "seq":
                    if e.op not in ("==", "!="):
                        raise DSLError("sequences only support == and !=")
                    return "bool"
                if lt != "int" or rt != "int":
                    raise DSLError(f"operator {e.op!r} needs int operands, got {lt} and {rt}")
                return "bool"
            if lt != "int" or rt != "int":
                raise DSLError(f"operator {e.op!r} needs int operands, got {lt} and {rt}")
            return "int"
        if isinstance(e, Quant):
            if e.var in bound:
                raise DSLError(f"quantifier index {e.var!r} shadows an enclosing index")
            if lookup(e.var, False) is not None:
                raise DSLError(f"quantifier index {e.var!r} shadows a variable")
            if go(e.lo, bound) != "int" or go(e.hi, bound) != "int":
                raise DSLError("quantifier bounds must be int")
            if go(e.body, bound + (e.var,)) != "bool":
                raise DSLError("quantifier body must be bool")
            return "int" if e.kind == "count" else "bool"
        if isinstance(e, Call):
            arg_t, ret_t = BUILTINS[e.func]
            if len(e.args) != 1:
                raise DSLError(f"{e.func} takes one argument")
            if go(e.args[0], bound) != arg_t:
                raise DSLError(f"{e.func} needs a {arg_t} argument")
            return ret_t
        if isinstance(e, Index):
            if go(e.seq, bound) != "seq":
                raise DSLError("indexing needs a sequence")
            if go(e.index, bound) != "int":
                raise DSLError("sequence index must be int")
            return "int"
        raise TypeError(f"not an expression: {e!r}")

    return go(expr, tuple(bound))


def check_seq_comparisons(expr: Expr, decl_of: Callable[[str], VarDecl]) -> None:
    """Sequence equality is only defined between identically declared domains."""
    for e in walk(expr):
        if isinstance(e, Binary) and e.op in ("==", "!=") and isinstance(e.left, Var) \
                and isinstance(e.right, Var):
            try:
                a, b = decl_of(e.left.name), decl_of(e.right.name)
            except KeyError:
                continue
            if a.kind == b.kind == "seq" and (a.alphabet, a.maxlen) != (b.alphabet, b.maxlen):
                raise DSLError(f"cannot compare sequences {a.name} and {b.name} with different domains")


def walk(expr: Expr):
    yield expr
    if isinstance(expr, Unary):
        yield from walk(expr.operand)
    elif isinstance(expr, Binary):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, Quant):
        yield from walk(expr.lo)
        yield from walk(expr.hi)
        yield from walk(expr.body)
    elif isinstance(expr, Call):
        for a in expr.args:
            yield from walk(a)
    elif isinstance(expr, Index):
        yield from walk(expr.seq)
        yield from walk(expr.index)


def free_vars(expr: Expr, bound=frozenset()) -> set[tuple[str, bool]]:
    """(name, primed) pairs referenced outside quantifier bindings."""
    if isinstance(expr, Var):
        return set() if expr.name in bound else {(expr.name, expr.primed)}
    if isinstance(expr, Quant):
        inner = bound | {expr.var}
        return free_vars(expr.lo, bound) | free_vars(expr.hi, bound) | free_vars(expr.body, inner)
    out: set = set()
    if isinstance(expr, Unary):
        out |= free_vars(expr.operand, bound)
    elif isinstance(expr, Binary):
        out |= free_vars(expr.left, bound) | free_vars(expr.right, bound)
    elif isinstance(expr, Call):
        for a in expr.args:
            out |= free_vars(a, bound)
    elif isinstance(expr, Index):
        out |= free_vars(expr.seq, bound) | free_vars(expr.index, bound)
    return out


# ---------------------------------------------------------------- printing


_UNESCAPE = {v: k for k, v in _ESCAPES.items()}


def _char_src(code: int) -> str:
    ch = chr(code)
    if ch in _UNESCAPE:
        return f"'\\{_UNESCAPE[ch]}'"
    return f"'{ch}'"


def pretty(e: Expr) -> str:
    """Fully parenthesized source text; ``parse_expr(pretty(e)) == e``."""
    if isinstance(e, Num):
        return str(e.value) if e.value >= 0 else f"(-{-e.value})"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, CharLit):
        return _char_src(e.code)
    if isinstance(e, Var):
        return e.name + ("'" if e.primed else "")
    if isinstance(e, Unary):
        return f"({e.op}{pretty(e.operand)})"
    if isinstance(e, Binary):
        return f"({pretty(e.left)} {e.op} {pretty(e.right)})"
    if isinstance(e, Quant):
        return f"{e.kind}({e.var} in {pretty(e.lo)}..{pretty(e.hi)} : {pretty(e.body)})"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(pretty(a) for a in e.args)})"
    if isinstance(e, Index):
        return f"{pretty(e.seq)}[{pretty(e.index)}]"
    raise TypeError(e)


def pretty_block(stmts: tuple, indent: int = 0) -> str:
    pad = "    " * indent
    lines = ["{"]
    for s in stmts:
        lines.append(pad + "    " + pretty_stmt(s, indent + 1))
    lines.append(pad + "}")
    return "\n".join(lines)


def pretty_stmt(s: Stmt, indent: int = 0) -> str:
    if isinstance(s, Assign):
        return f"{s.target} = {pretty(s.expr)};"
    if isinstance(s, Skip):
        return "skip;"
    if isinstance(s, Abort):
        return "abort;"
    if isinstance(s, If):
        out = f"if ({pretty(s.cond)}) {pretty_block(s.then, indent)}"
        if s.orelse:
            out += f" else {pretty_block(s.orelse, indent)}"
        return out
    if isinstance(s, While):
        return f"while ({pretty(s.cond)}) {pretty_block(s.body, indent)}"
    if isinstance(s, Either):
        return f"either {pretty_block(s.first, indent)} or {pretty_block(s.second, indent)}"
    raise TypeError(s)
