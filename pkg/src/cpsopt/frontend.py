"""A small ML-like surface language and its CPS conversion.

Syntax::

    let val x = e  fun f (a, b) = e and g x = e  in e end
    fn (x, y) => e     fn () => e     fn x => e
    if e then e else e     (e1, e2, ...)     #1 e     f (a, b)    f x
    + - * < <= =    integer literals (~3 is minus three)    true false

Applying a function to a parenthesized list passes each element as a
separate argument; bind a tuple to a name first to pass it whole.
``(* ... *)`` is a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Union

from . import ir
from .ir import (HALT, Alloc, Apply, ConstBool, ConstInt, Cont, Expr, Fun, Lambda,
                 Let, ParseError, Prim, Program, ScopeError, Select, Switch, VarId)


# -- surface syntax -----------------------------------------------------------

@dataclass(frozen=True)
class Loc:
    line: int
    col: int


@dataclass(frozen=True)
class SInt:
    n: int
    loc: Loc = None


@dataclass(frozen=True)
class SBool:
    b: bool
    loc: Loc = None


@dataclass(frozen=True)
class SVar:
    name: str
    loc: Loc = None


@dataclass(frozen=True)
class SFn:
    params: tuple
    body: "SurfaceExpr"
    loc: Loc = None


@dataclass(frozen=True)
class SApp:
    fn: "SurfaceExpr"
    args: tuple
    loc: Loc = None


@dataclass(frozen=True)
class SVal:
    name: str
    rhs: "SurfaceExpr"
    loc: Loc = None


@dataclass(frozen=True)
class SFunDef:
    name: str
    params: tuple
    body: "SurfaceExpr"
    loc: Loc = None


@dataclass(frozen=True)
class SFunGroup:
    defs: tuple
    loc: Loc = None


@dataclass(frozen=True)
class SLet:
    decls: tuple
    body: "SurfaceExpr"
    loc: Loc = None


@dataclass(frozen=True)
class SIf:
    cond: "SurfaceExpr"
    then: "SurfaceExpr"
    else_: "SurfaceExpr"
    loc: Loc = None


@dataclass(frozen=True)
class STuple:
    elems: tuple
    loc: Loc = None


@dataclass(frozen=True)
class SProj:
    index: int  # 1-based, as in ML
    expr: "SurfaceExpr"
    loc: Loc = None


@dataclass(frozen=True)
class SBinop:
    op: str
    left: "SurfaceExpr"
    right: "SurfaceExpr"
    loc: Loc = None


SurfaceExpr = Union[SInt, SBool, SVar, SFn, SApp, SLet, SIf, STuple, SProj, SBinop]

BINOPS = {"+": "add", "-": "sub", "*": "mul", "<": "lt", "<=": "leq", "=": "eq"}
KEYWORDS = {"let", "val", "fun", "and", "in", "end", "if", "then", "else", "fn", "true", "false"}

_LEX = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\(\*.*?\*\))
  | (?P<int>~?\d+)
  | (?P<proj>\#\d+)
  | (?P<ident>[A-Za-z_][\w']*)
  | (?P<op>=>|<=|[-+*<=(),])
""", re.VERBOSE | re.DOTALL)


@dataclass
class Token:
    kind: str
    text: str
    loc: Loc


def tokenize(source: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _LEX.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind, text = m.lastgroup, m.group()
        loc = Loc(line, pos - line_start + 1)
        if kind == "ident" and text in KEYWORDS:
            kind = "kw"
        if kind not in ("ws", "comment"):
            out.append(Token(kind, text, loc))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", Loc(line, pos - line_start + 1)))
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.loc.line, tok.loc.col)

    def at(self, text):
        return self.tok.text == text and self.tok.kind in ("kw", "op")

    def expect(self, text):
        if not self.at(text):
            self.error(f"expected '{text}', found '{self.tok.text or 'end of input'}'")
        self.i += 1

    def ident(self):
        if self.tok.kind != "ident":
            self.error(f"expected an identifier, found '{self.tok.text}'")
        self.i += 1
        return self.toks[self.i - 1].text

    def params(self):
        if self.at("("):
            self.i += 1
            names = []
            if not self.at(")"):
                names.append(self.ident())
                while self.at(","):
                    self.i += 1
                    names.append(self.ident())
            self.expect(")")
            return tuple(names)
        return (self.ident(),)

    def program(self):
        e = self.expr()
        if self.tok.kind != "eof":
            self.error(f"unexpected '{self.tok.text}'")
        return e

    def expr(self):
        loc = self.tok.loc
        if self.at("let"):
            self.i += 1
            decls = []
            while self.at("val") or self.at("fun"):
                decls.append(self.decl())
            if not decls:
                self.error("expected 'val' or 'fun'")
            self.expect("in")
            body = self.expr()
            self.expect("end")
            return SLet(tuple(decls), body, loc)
        if self.at("if"):
            self.i += 1
            c = self.expr()
            self.expect("then")
            t = self.expr()
            self.expect("else")
            return SIf(c, t, self.expr(), loc)
        if self.at("fn"):
            self.i += 1
            ps = self.params()
            self.expect("=>")
            return SFn(ps, self.expr(), loc)
        return self.compare()

    def decl(self):
        loc = self.tok.loc
        if self.at("val"):
            self.i += 1
            name = self.ident()
            self.expect("=")
            return SVal(name, self.expr(), loc)
        self.expect("fun")
        defs = [self.fundef()]
        while self.at("and"):
            self.i += 1
            defs.append(self.fundef())
        return SFunGroup(tuple(defs), loc)

    def fundef(self):
        loc = self.tok.loc
        name = self.ident()
        ps = self.params()
        self.expect("=")
        return SFunDef(name, ps, self.expr(), loc)

    def compare(self):
        left = self.additive()
        if self.tok.kind == "op" and self.tok.text in ("<", "<=", "="):
            tok = self.tok
            self.i += 1
            return SBinop(tok.text, left, self.additive(), tok.loc)
        return left

    def additive(self):
        left = self.multiplicative()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            tok = self.tok
            self.i += 1
            left = SBinop(tok.text, left, self.multiplicative(), tok.loc)
        return left

    def multiplicative(self):
        left = self.application()
        while self.at("*"):
            tok = self.tok
            self.i += 1
            left = SBinop("*", left, self.application(), tok.loc)
        return left

    def starts_atom(self):
        t = self.tok
        return t.kind in ("int", "ident", "proj") or (t.kind == "kw" and t.text in ("true", "false")) or self.at("(")

    def application(self):
        fn = self.atom()
        while self.starts_atom():
            loc = self.tok.loc
            arg = self.atom()
            args = arg.elems if isinstance(arg, STuple) else (arg,)
            fn = SApp(fn, args, loc)
        return fn

    def atom(self):
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return SInt(-int(t.text[1:]) if t.text.startswith("~") else int(t.text), t.loc)
        if t.kind == "kw" and t.text in ("true", "false"):
            self.i += 1
            return SBool(t.text == "true", t.loc)
        if t.kind == "ident":
            self.i += 1
            return SVar(t.text, t.loc)
        if t.kind == "proj":
            self.i += 1
            index = int(t.text[1:])
            if index < 1:
                self.error("projections start at #1", t)
            return SProj(index, self.atom(), t.loc)
        if self.at("("):
            self.i += 1
            if self.at(")"):
                self.i += 1
                return STuple((), t.loc)
            elems = [self.expr()]
            while self.at(","):
                self.i += 1
                elems.append(self.expr())
            self.expect(")")
            return elems[0] if len(elems) == 1 else STuple(tuple(elems), t.loc)
        self.error(f"unexpected '{t.text or 'end of input'}'")


def check_scope(e, bound=frozenset()):
    """Raise ScopeError for the first unbound identifier."""
    if isinstance(e, SVar):
        if e.name not in bound:
            raise ScopeError(f"unbound identifier {e.name}", e.loc.line, e.loc.col)
    elif isinstance(e, SFn):
        check_scope(e.body, bound | set(e.params))
    elif isinstance(e, SApp):
        check_scope(e.fn, bound)
        for a in e.args:
            check_scope(a, bound)
    elif isinstance(e, SLet):
        for d in e.decls:
            if isinstance(d, SVal):
                check_scope(d.rhs, bound)
                bound = bound | {d.name}
            else:
                bound = bound | {f.name for f in d.defs}
                for f in d.defs:
                    check_scope(f.body, bound | set(f.params))
        check_scope(e.body, bound)
    elif isinstance(e, SIf):
        for sub in (e.cond, e.then, e.else_):
            check_scope(sub, bound)
    elif isinstance(e, STuple):
        for sub in e.elems:
            check_scope(sub, bound)
    elif isinstance(e, SProj):
        check_scope(e.expr, bound)
    elif isinstance(e, SBinop):
        check_scope(e.left, bound)
        check_scope(e.right, bound)


def parse_surface(source: str) -> SurfaceExpr:
    e = _Parser(tokenize(source)).program()
    check_scope(e)
    return e


# -- CPS conversion -----------------------------------------------------------

# A context is either a continuation variable or a meta-level function that
# builds the rest of the program from the variable holding a value.
Context = Union[VarId, Callable[[VarId], Expr]]


def _x(term) -> Expr:
    return Expr(0, term)


def _ret(k: Context, v: VarId) -> Expr:
    if isinstance(k, VarId):
        return _x(ir.Throw(k, (v,)))
    return k(v)


def _reify(k: Context, hint):
    """Turn a meta context into a named continuation."""
    if isinstance(k, VarId):
        return k, lambda inner: inner
    j = VarId.fresh("j")
    r = VarId.fresh(hint or "r")
    lam = Lambda(j, (r,), (), k(r))
    return j, lambda inner: _x(Cont(lam, inner))


class _Converter:
    def expr(self, e, env, k: Context, hint=None) -> Expr:
        if isinstance(e, SInt):
            x = VarId.fresh(hint or "n")
            return _x(Let((x,), ConstInt(e.n), _ret(k, x)))
        if isinstance(e, SBool):
            x = VarId.fresh(hint or "b")
            return _x(Let((x,), ConstBool(e.b), _ret(k, x)))
        if isinstance(e, SVar):
            return _ret(k, env[e.name])
        if isinstance(e, STuple):
            def alloc(vs):
                t = VarId.fresh(hint or "tup")
                return _x(Let((t,), Alloc(tuple(vs)), _ret(k, t)))
            return self.exprs(e.elems, env, alloc)
        if isinstance(e, SProj):
            def select(v):
                t = VarId.fresh(hint or "sel")
                return _x(Let((t,), Select(e.index - 1, v), _ret(k, t)))
            return self.expr(e.expr, env, select)
        if isinstance(e, SBinop):
            def prim(vs):
                t = VarId.fresh(hint or "t")
                return _x(Let((t,), Prim(BINOPS[e.op], tuple(vs)), _ret(k, t)))
            return self.exprs((e.left, e.right), env, prim)
        if isinstance(e, SFn):
            f = VarId.fresh(hint or "fn")
            return _x(Fun((self.lam(f, e.params, e.body, env),), _ret(k, f)))
        if isinstance(e, SApp):
            def call(vs):
                j, wrap = _reify(k, hint)
                return wrap(_x(Apply(vs[0], tuple(vs[1:]), (j,))))
            return self.exprs((e.fn,) + e.args, env, call)
        if isinstance(e, SIf):
            def branch(c):
                j, wrap = _reify(k, hint)
                arms = ((0, self.expr(e.else_, env, j)), (1, self.expr(e.then, env, j)))
                return wrap(_x(Switch(c, arms, None)))
            return self.expr(e.cond, env, branch)
        if isinstance(e, SLet):
            return self.decls(e.decls, 0, env, e.body, k, hint)
        raise TypeError(f"not a surface expression: {e!r}")

    def exprs(self, es, env, finish, acc=()):
        if len(acc) == len(es):
            return finish(list(acc))
        return self.expr(es[len(acc)], env, lambda v: self.exprs(es, env, finish, acc + (v,)))

    def decls(self, decls, i, env, body, k, hint):
        if i == len(decls):
            return self.expr(body, env, k, hint)
        d = decls[i]
        if isinstance(d, SVal):
            return self.expr(d.rhs, env,
                             lambda v: self.decls(decls, i + 1, {**env, d.name: v}, body, k, hint),
                             hint=d.name)
        names = {f.name: VarId.fresh(f.name) for f in d.defs}
        env2 = {**env, **names}
        lams = tuple(self.lam(names[f.name], f.params, f.body, env2) for f in d.defs)
        return _x(Fun(lams, self.decls(decls, i + 1, env2, body, k, hint)))

    def lam(self, f, params, body, env):
        ps = tuple(VarId.fresh(p) for p in params)
        kv = VarId.fresh("k")
        env2 = {**env, **dict(zip(params, ps))}
        return Lambda(f, ps, (kv,), self.expr(body, env2, kv))


def cps_convert(e: SurfaceExpr) -> Program:
    """Convert to CPS; every function gets one extra return-continuation parameter.

    ``if`` becomes a switch over the boolean with arms 0 (false) and 1 (true).
    """
    body = _Converter().expr(e, {}, HALT)
    return ir.renumber(Program(Lambda(VarId.fresh("main"), (), (HALT,), body)))


def compile_surface(source: str) -> Program:
    return cps_convert(parse_surface(source))
