"""S-expression syntax for the CPS IR.

    (let ((x RHS)) E)  (fun ((f (p...) (k...) E) ...) E)  (cont (k (p...) E) E)
    (if COND E E)      (switch x ((tag E) ...) [E])
    (apply f (a...) (k...))  (throw k (a...))

RHS is one of ``(int n) (bool b) (alloc x...) (select i x) (prim op x...)
(var x)``; COND is ``(var x)`` or ``(prim op x y)`` with a comparison op.
``halt`` is bound by the implicit entry function.  ``;`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ir
from .ir import (HALT, Alloc, Apply, CondPrim, CondVar, ConstBool, ConstInt, Cont,
                 Expr, Fun, If, Lambda, Let, ParseError, Prim, Program, ScopeError,
                 Select, Switch, Throw, Var, VarId)

_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


@dataclass
class Atom:
    text: str
    line: int
    col: int


class SList(list):
    line = 0
    col = 0


def read_sexp(source: str):
    stack = [SList()]
    line, line_start = 1, 0
    for m in _TOKEN.finditer(source):
        tok = m.group()
        col = m.start() - line_start + 1
        if tok == "(":
            node = SList()
            node.line, node.col = line, col
            stack[-1].append(node)
            stack.append(node)
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col)
            stack.pop()
        elif not tok[0].isspace() and tok[0] != ";":
            stack[-1].append(Atom(tok, line, col))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = m.start() + tok.rindex("\n") + 1
    if len(stack) != 1:
        opened = stack[-1]
        raise ParseError("unclosed '('", opened.line, opened.col)
    return stack[0]


def _where(node):
    return getattr(node, "line", None), getattr(node, "col", None)


def _fail(msg, node, cls=ParseError):
    raise cls(msg, *_where(node))


class _Reader:
    def __init__(self):
        self.scope = {"halt": HALT}

    def head(self, node):
        if not isinstance(node, SList) or not node or not isinstance(node[0], Atom):
            _fail("expected a parenthesized form", node)
        return node[0].text

    def name(self, node):
        if not isinstance(node, Atom) or not re.match(r"[A-Za-z_][\w'.]*$", node.text):
            _fail("expected an identifier", node)
        return node.text

    def use(self, node):
        name = self.name(node)
        try:
            return self.scope[name]
        except KeyError:
            _fail(f"unbound variable {name}", node, ScopeError)

    def uses(self, node):
        if not isinstance(node, SList):
            _fail("expected a variable list", node)
        return tuple(self.use(n) for n in node)

    def int(self, node):
        if not isinstance(node, Atom) or not re.match(r"-?\d+$", node.text):
            _fail("expected an integer", node)
        return int(node.text)

    def arity(self, node, n):
        if len(node) != n:
            _fail(f"'{node[0].text}' expects {n - 1} operands", node)

    def bind(self, node):
        v = VarId.fresh(self.name(node))
        self.scope[v.name] = v
        return v

    def scoped(self, fn):
        saved = dict(self.scope)
        try:
            return fn()
        finally:
            self.scope = saved

    def rhs(self, node):
        op = self.head(node)
        if op == "int":
            self.arity(node, 2)
            return ConstInt(self.int(node[1]))
        if op == "bool":
            self.arity(node, 2)
            if not isinstance(node[1], Atom) or node[1].text not in ("true", "false"):
                _fail("expected true or false", node[1])
            return ConstBool(node[1].text == "true")
        if op == "alloc":
            return Alloc(tuple(self.use(n) for n in node[1:]))
        if op == "select":
            self.arity(node, 3)
            return Select(self.int(node[1]), self.use(node[2]))
        if op == "prim":
            if len(node) < 2 or self.name(node[1]) not in ir.PRIM_ARITY:
                _fail("unknown primitive", node)
            p = Prim(node[1].text, tuple(self.use(n) for n in node[2:]))
            if len(p.operands) != ir.PRIM_ARITY[p.op]:
                _fail(f"{p.op} expects {ir.PRIM_ARITY[p.op]} operands", node)
            return p
        if op == "var":
            self.arity(node, 2)
            return Var(self.use(node[1]))
        _fail(f"unknown right-hand side '{op}'", node)

    def cond(self, node):
        op = self.head(node)
        if op == "var":
            self.arity(node, 2)
            return CondVar(self.use(node[1]))
        if op == "prim":
            self.arity(node, 4)
            if self.name(node[1]) not in ir.COMPARE_OPS:
                _fail("conditions use lt, leq or eq", node[1])
            return CondPrim(node[1].text, (self.use(node[2]), self.use(node[3])))
        _fail(f"unknown condition '{op}'", node)

    def lam_header(self, node):
        if not isinstance(node, SList) or len(node) not in (3, 4):
            _fail("expected (name (params...) [(rets...)] body)", node)
        return self.bind(node[0])

    def lam(self, node, f):
        def go():
            params = tuple(self.bind(n) for n in node[1])
            rets = tuple(self.bind(n) for n in node[2]) if len(node) == 4 else ()
            return Lambda(f, params, rets, self.expr(node[-1]))
        return self.scoped(go)

    def expr(self, node) -> Expr:
        op = self.head(node)
        if op == "let":
            self.arity(node, 3)
            bindings = node[1]
            if not isinstance(bindings, SList) or not bindings:
                _fail("expected ((x RHS) ...)", node)

            def chain(i):
                b = bindings[i]
                if not isinstance(b, SList) or len(b) != 2:
                    _fail("expected (x RHS)", b)
                rhs = self.rhs(b[1])
                x = self.bind(b[0])
                body = chain(i + 1) if i + 1 < len(bindings) else self.expr(node[2])
                return Expr(0, Let((x,), rhs, body))
            return self.scoped(lambda: chain(0))
        if op == "fun":
            self.arity(node, 3)

            def go():
                specs = list(node[1])
                names = [self.lam_header(s) for s in specs]
                funs = tuple(self.lam(s, f) for s, f in zip(specs, names))
                return Expr(0, Fun(funs, self.expr(node[2])))
            return self.scoped(go)
        if op == "cont":
            self.arity(node, 3)

            def go():
                decl = node[1]
                if not isinstance(decl, SList) or len(decl) != 3:
                    _fail("expected (k (params...) body)", decl)
                k = self.lam_header(decl)
                return Expr(0, Cont(self.lam(decl, k), self.expr(node[2])))
            return self.scoped(go)
        if op == "if":
            self.arity(node, 4)
            return Expr(0, If(self.cond(node[1]), self.expr(node[2]), self.expr(node[3])))
        if op == "switch":
            if len(node) not in (3, 4):
                _fail("expected (switch x ((tag E)...) [E])", node)
            x = self.use(node[1])
            arms = []
            for arm in node[2]:
                if not isinstance(arm, SList) or len(arm) != 2:
                    _fail("expected (tag E)", arm)
                arms.append((self.int(arm[0]), self.expr(arm[1])))
            default = self.expr(node[3]) if len(node) == 4 else None
            return Expr(0, Switch(x, tuple(arms), default))
        if op == "apply":
            self.arity(node, 4)
            return Expr(0, Apply(self.use(node[1]), self.uses(node[2]), self.uses(node[3])))
        if op == "throw":
            self.arity(node, 3)
            return Expr(0, Throw(self.use(node[1]), self.uses(node[2])))
        _fail(f"unknown expression '{op}'", node)


def parse_text(source: str) -> Program:
    """Parse a program; points are assigned in preorder."""
    forms = read_sexp(source)
    if len(forms) != 1:
        raise ParseError(f"expected one expression, found {len(forms)}")
    body = _Reader().expr(forms[0])
    return ir.renumber(Program(Lambda(VarId.fresh("main"), (), (HALT,), body)))


# -- printing -----------------------------------------------------------------

def display_names(program: Program) -> dict:
    """Deterministic, unambiguous print names for every binder."""
    binders = []
    for e in ir.walk(program.body):
        t = e.term
        if isinstance(t, Let):
            binders.extend(t.binders)
        for lam in ir.term_lambdas(t):
            binders.append(lam.f)
        for lam in ir.term_lambdas(t):
            binders.extend(lam.params + lam.rets)
    counts = {}
    for v in binders:
        counts[v.name] = counts.get(v.name, 0) + 1
    taken = {"halt"} | {n for n, c in counts.items() if c == 1 and n != "halt"}
    names = {HALT: "halt", program.entry.f: program.entry.f.name}
    for v in binders:
        if v in names:
            continue
        base = v.name
        if counts[base] == 1 and base != "halt":
            names[v] = base
            continue
        i = 1
        while f"{base}_{i}" in taken:
            i += 1
        names[v] = f"{base}_{i}"
        taken.add(names[v])
    return names


class _Printer:
    def __init__(self, names):
        self.names = names
        self.out = []

    def n(self, v):
        return self.names.get(v, v.name)

    def ns(self, vs):
        return "(" + " ".join(self.n(v) for v in vs) + ")"

    def rhs(self, r):
        if isinstance(r, ConstInt):
            return f"(int {r.n})"
        if isinstance(r, ConstBool):
            return f"(bool {'true' if r.b else 'false'})"
        if isinstance(r, Alloc):
            return "(alloc" + "".join(" " + self.n(v) for v in r.fields) + ")"
        if isinstance(r, Select):
            return f"(select {r.index} {self.n(r.tuple)})"
        if isinstance(r, Prim):
            return f"(prim {r.op}" + "".join(" " + self.n(v) for v in r.operands) + ")"
        return f"(var {self.n(r.src)})"

    def cond(self, c):
        if isinstance(c, CondVar):
            return f"(var {self.n(c.var)})"
        return f"(prim {c.op} {self.n(c.operands[0])} {self.n(c.operands[1])})"

    def lam(self, lam, ind, with_rets=True):
        head = f"({self.n(lam.f)} {self.ns(lam.params)}"
        if with_rets:
            head += " " + self.ns(lam.rets)
        return head + "\n" + self.expr(lam.body, ind + 2) + ")"

    def expr(self, e, ind):
        pad = " " * ind
        t = e.term
        if isinstance(t, Let):
            return f"{pad}(let (({self.n(t.binders[0])} {self.rhs(t.rhs)}))\n{self.expr(t.body, ind + 2)})"
        if isinstance(t, Fun):
            lams = "\n".join(" " * (ind + 6) + self.lam(l, ind + 6) for l in t.funs)
            return f"{pad}(fun (\n{lams})\n{self.expr(t.body, ind + 2)})"
        if isinstance(t, Cont):
            return f"{pad}(cont {self.lam(t.k, ind + 6, with_rets=False)}\n{self.expr(t.body, ind + 2)})"
        if isinstance(t, If):
            return f"{pad}(if {self.cond(t.cond)}\n{self.expr(t.then, ind + 2)}\n{self.expr(t.else_, ind + 2)})"
        if isinstance(t, Switch):
            arms = "\n".join(f"{pad}   ({tag}\n{self.expr(arm, ind + 5)})" for tag, arm in t.arms)
            text = f"{pad}(switch {self.n(t.scrutinee)} (\n{arms})"
            if t.default is not None:
                text += "\n" + self.expr(t.default, ind + 2)
            return text + ")"
        if isinstance(t, Apply):
            return f"{pad}(apply {self.n(t.target)} {self.ns(t.args)} {self.ns(t.rets)})"
        return f"{pad}(throw {self.n(t.target)} {self.ns(t.args)})"


def print_text(program: Program) -> str:
    """Canonical text; points are not printed."""
    return _Printer(display_names(program)).expr(program.body, 0) + "\n"


def print_lambda(program: Program, lam: Lambda) -> str:
    return _Printer(display_names(program)).lam(lam, 0)
