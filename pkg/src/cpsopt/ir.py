"""CPS intermediate representation.

Every expression carries an integer program point.  Calls (``Apply`` and
``Throw``) are leaves, so a program is a tree of binding forms ending in calls.
Datatypes are tagged tuples: an ``Alloc`` whose first field holds the tag.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Union

_uids = itertools.count(1)


class VarId(NamedTuple):
    """A variable: a unique id plus the name it was written with.

    The id alone identifies the variable; fresh ids never reuse a name for a
    different uid, so tuple equality and hashing (done in C) agree with
    comparing ids.
    """
    uid: int
    name: str

    @staticmethod
    def fresh(name: str) -> "VarId":
        return VarId(next(_uids), name)

    def __repr__(self):
        return f"{self.name}#{self.uid}"


# The continuation the runtime passes to the entry function.
HALT = VarId(0, "halt")

ARITH_OPS = ("add", "sub", "mul", "div")
COMPARE_OPS = ("lt", "leq", "eq")
PRIM_ARITY = {op: 2 for op in ARITH_OPS + COMPARE_OPS}


# -- right-hand sides ---------------------------------------------------------

@dataclass(frozen=True)
class ConstInt:
    n: int


@dataclass(frozen=True)
class ConstBool:
    b: bool


@dataclass(frozen=True)
class Alloc:
    fields: tuple


@dataclass(frozen=True)
class Select:
    index: int
    tuple: VarId


@dataclass(frozen=True)
class Prim:
    op: str
    operands: tuple


@dataclass(frozen=True)
class Var:
    """Copy of another variable."""
    src: VarId


Rhs = Union[ConstInt, ConstBool, Alloc, Select, Prim, Var]


# -- conditions ---------------------------------------------------------------

@dataclass(frozen=True)
class CondVar:
    var: VarId


@dataclass(frozen=True)
class CondPrim:
    op: str
    operands: tuple


Cond = Union[CondVar, CondPrim]


# -- terms ----------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    point: int
    term: "Term"


@dataclass(frozen=True)
class Lambda:
    f: VarId
    params: tuple
    rets: tuple
    body: Expr


@dataclass(frozen=True)
class Let:
    binders: tuple
    rhs: Rhs
    body: Expr


@dataclass(frozen=True)
class Fun:
    funs: tuple
    body: Expr


@dataclass(frozen=True)
class Cont:
    k: Lambda
    body: Expr


@dataclass(frozen=True)
class If:
    cond: Cond
    then: Expr
    else_: Expr


@dataclass(frozen=True)
class Switch:
    scrutinee: VarId
    arms: tuple  # of (tag, Expr)
    default: Optional[Expr] = None


@dataclass(frozen=True)
class Apply:
    target: VarId
    args: tuple
    rets: tuple


@dataclass(frozen=True)
class Throw:
    target: VarId
    args: tuple


Term = Union[Let, Fun, Cont, If, Switch, Apply, Throw]
CALLS = (Apply, Throw)


@dataclass(frozen=True)
class Program:
    entry: Lambda

    @property
    def body(self) -> Expr:
        return self.entry.body

    def points(self) -> dict:
        """Map from program point to expression."""
        return {e.point: e for e in walk(self.body)}

    def lambdas(self) -> dict:
        """Every lambda in the program (entry, functions and continuations)."""
        out = {self.entry.f: self.entry}
        for e in walk(self.body):
            for lam in term_lambdas(e.term):
                out[lam.f] = lam
        return out


class ParseError(Exception):
    def __init__(self, message, line=None, col=None):
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.col = col


class ScopeError(ParseError):
    pass


# -- traversal ----------------------------------------------------------------

def term_lambdas(term) -> tuple:
    if isinstance(term, Fun):
        return term.funs
    if isinstance(term, Cont):
        return (term.k,)
    return ()


def children(term) -> list:
    """Child expressions in textual order (lambda bodies before the scope body)."""
    if isinstance(term, Let):
        return [term.body]
    if isinstance(term, Fun):
        return [lam.body for lam in term.funs] + [term.body]
    if isinstance(term, Cont):
        return [term.k.body, term.body]
    if isinstance(term, If):
        return [term.then, term.else_]
    if isinstance(term, Switch):
        out = [arm for _, arm in term.arms]
        if term.default is not None:
            out.append(term.default)
        return out
    return []


def walk(expr: Expr) -> Iterator[Expr]:
    """Preorder traversal over every expression, including lambda bodies."""
    stack = [expr]
    while stack:
        e = stack.pop()
        yield e
        stack.extend(reversed(children(e.term)))


def rhs_uses(rhs) -> tuple:
    if isinstance(rhs, Alloc):
        return rhs.fields
    if isinstance(rhs, Select):
        return (rhs.tuple,)
    if isinstance(rhs, Prim):
        return rhs.operands
    if isinstance(rhs, Var):
        return (rhs.src,)
    return ()


def cond_uses(cond) -> tuple:
    if isinstance(cond, CondVar):
        return (cond.var,)
    return cond.operands


def term_uses(term) -> tuple:
    """Variables read directly by a term (not its sub-expressions)."""
    if isinstance(term, Let):
        return rhs_uses(term.rhs)
    if isinstance(term, If):
        return cond_uses(term.cond)
    if isinstance(term, Switch):
        return (term.scrutinee,)
    if isinstance(term, Apply):
        return (term.target,) + term.args + term.rets
    if isinstance(term, Throw):
        return (term.target,) + term.args
    return ()


def lambda_binders(lam: Lambda) -> tuple:
    return (lam.f,) + lam.params + lam.rets


def size(expr: Expr) -> int:
    """Number of expressions, counting nested lambda bodies."""
    return sum(1 for _ in walk(expr))


def max_point(program: Program) -> int:
    return max(e.point for e in walk(program.body))


def calls(program: Program) -> Iterator[Expr]:
    return (e for e in walk(program.body) if isinstance(e.term, CALLS))


def use_counts(expr: Expr) -> Counter:
    counts = Counter()
    for e in walk(expr):
        counts.update(term_uses(e.term))
    return counts


# -- free variables -------------------------------------------------------------

def _fv_expr(expr: Expr, memo: dict) -> frozenset:
    term = expr.term
    out = set(term_uses(term))
    if isinstance(term, Let):
        out |= _fv_expr(term.body, memo) - set(term.binders)
    elif isinstance(term, Fun):
        names = {lam.f for lam in term.funs}
        for lam in term.funs:
            out |= _fv_lambda(lam, memo)
        out |= _fv_expr(term.body, memo)
        out -= names
    elif isinstance(term, Cont):
        out |= _fv_lambda(term.k, memo)
        out |= _fv_expr(term.body, memo) - {term.k.f}
    else:
        for child in children(term):
            out |= _fv_expr(child, memo)
    return frozenset(out)


def _fv_lambda(lam: Lambda, memo: dict) -> frozenset:
    if lam.f not in memo:
        memo[lam.f] = _fv_expr(lam.body, memo) - set(lambda_binders(lam))
    return memo[lam.f]


def free_vars(lam: Lambda) -> frozenset:
    """Variables used in ``lam`` but bound outside it.

    Primitive operators are ``Prim`` constructors, not variables, so they
    never show up here.
    """
    return _fv_lambda(lam, {})


def all_free_vars(program: Program) -> dict:
    """Free variables of every lambda in ``program``, keyed by lambda name."""
    memo = {}
    for lam in program.lambdas().values():
        _fv_lambda(lam, memo)
    return memo


# -- renaming -----------------------------------------------------------------

class Renamer:
    """Copies expressions with fresh binders.

    ``subst`` maps variables to their replacements; uses of variables missing
    from it are kept.  When ``points`` is given, copied expressions get fresh
    program points drawn from it.
    """

    def __init__(self, subst=None, points=None):
        self.subst = dict(subst or {})
        self.points = points

    def var(self, v):
        return self.subst.get(v, v)

    def vars(self, vs):
        return tuple(self.subst.get(v, v) for v in vs)

    def bind(self, v):
        if v == HALT:
            return v
        nv = VarId.fresh(v.name)
        self.subst[v] = nv
        return nv

    def point(self, p):
        return next(self.points) if self.points is not None else p

    def rhs(self, rhs):
        if isinstance(rhs, Alloc):
            return Alloc(self.vars(rhs.fields))
        if isinstance(rhs, Select):
            return Select(rhs.index, self.var(rhs.tuple))
        if isinstance(rhs, Prim):
            return Prim(rhs.op, self.vars(rhs.operands))
        if isinstance(rhs, Var):
            return Var(self.var(rhs.src))
        return rhs

    def cond(self, cond):
        if isinstance(cond, CondVar):
            return CondVar(self.var(cond.var))
        return CondPrim(cond.op, self.vars(cond.operands))

    def lam_body(self, lam, f):
        params = tuple(self.bind(p) for p in lam.params)
        rets = tuple(self.bind(r) for r in lam.rets)
        return Lambda(f, params, rets, self.expr(lam.body))

    def expr(self, e: Expr) -> Expr:
        t = e.term
        p = self.point(e.point)
        if isinstance(t, Let):
            rhs = self.rhs(t.rhs)
            binders = tuple(self.bind(b) for b in t.binders)
            return Expr(p, Let(binders, rhs, self.expr(t.body)))
        if isinstance(t, Fun):
            names = [self.bind(lam.f) for lam in t.funs]
            funs = tuple(self.lam_body(lam, f) for lam, f in zip(t.funs, names))
            return Expr(p, Fun(funs, self.expr(t.body)))
        if isinstance(t, Cont):
            k = self.lam_body(t.k, self.bind(t.k.f))
            return Expr(p, Cont(k, self.expr(t.body)))
        if isinstance(t, If):
            return Expr(p, If(self.cond(t.cond), self.expr(t.then), self.expr(t.else_)))
        if isinstance(t, Switch):
            arms = tuple((tag, self.expr(arm)) for tag, arm in t.arms)
            default = self.expr(t.default) if t.default is not None else None
            return Expr(p, Switch(self.var(t.scrutinee), arms, default))
        if isinstance(t, Apply):
            return Expr(p, Apply(self.var(t.target), self.vars(t.args), self.vars(t.rets)))
        if isinstance(t, Throw):
            return Expr(p, Throw(self.var(t.target), self.vars(t.args)))
        raise TypeError(f"not a term: {t!r}")


def alpha_rename(program: Program) -> Program:
    """Give every binder a fresh id; display names and points are kept."""
    r = Renamer()
    entry = program.entry
    return Program(r.lam_body(entry, r.bind(entry.f)))


def renumber(program: Program) -> Program:
    """Reassign program points in preorder, starting at 1."""
    r = Renamer(subst={}, points=itertools.count(1))
    # keep identities: map every binder to itself
    r.bind = lambda v: v
    return Program(r.lam_body(program.entry, program.entry.f))


# -- well-formedness ------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # scope | duplicate-binder | duplicate-point | prim-arity | non-leaf-call | malformed
    message: str
    point: Optional[int] = None


def check_well_formed(program: Program) -> list:
    """Return the list of violations; an empty list means well-formed."""
    out = []
    seen_binders = set()
    seen_points = set()

    def bind(v, point):
        if v in seen_binders:
            out.append(Violation("duplicate-binder", f"{v!r} bound twice", point))
        seen_binders.add(v)

    def use(v, scope, point):
        if v not in scope:
            out.append(Violation("scope", f"{v!r} is not in scope", point))

    entry = program.entry
    for v in lambda_binders(entry):
        bind(v, None)
    stack = [(entry.body, frozenset(lambda_binders(entry)))]
    while stack:
        e, scope = stack.pop()
        if not isinstance(e, Expr):
            out.append(Violation("malformed", f"expected an expression, got {e!r}"))
            continue
        t = e.term
        if e.point in seen_points:
            out.append(Violation("duplicate-point", f"point {e.point} reused", e.point))
        seen_points.add(e.point)
        if isinstance(t, Let) and isinstance(t.rhs, CALLS):
            out.append(Violation("non-leaf-call", "call used as a binding with a continuation", e.point))
            for v in term_uses(t.rhs):
                use(v, scope, e.point)
            stack.append((t.body, scope | set(t.binders)))
            continue
        if not isinstance(t, (Let, Fun, Cont, If, Switch, Apply, Throw)):
            out.append(Violation("malformed", f"unknown term {t!r}", e.point))
            continue
        for v in term_uses(t):
            use(v, scope, e.point)
        if isinstance(t, Let):
            if not isinstance(t.rhs, (ConstInt, ConstBool, Alloc, Select, Prim, Var)):
                out.append(Violation("malformed", f"unknown rhs {t.rhs!r}", e.point))
            if isinstance(t.rhs, Prim) and PRIM_ARITY.get(t.rhs.op) != len(t.rhs.operands):
                out.append(Violation("prim-arity", f"{t.rhs.op} with {len(t.rhs.operands)} operands", e.point))
            if isinstance(t.rhs, Select) and t.rhs.index < 0:
                out.append(Violation("malformed", "negative select index", e.point))
            for b in t.binders:
                bind(b, e.point)
            stack.append((t.body, scope | set(t.binders)))
        elif isinstance(t, (Fun, Cont)):
            lams = term_lambdas(t)
            names = {lam.f for lam in lams}
            for lam in lams:
                bind(lam.f, e.point)
            for lam in lams:
                for v in lam.params + lam.rets:
                    bind(v, e.point)
                stack.append((lam.body, scope | names | set(lambda_binders(lam))))
            stack.append((t.body, scope | names))
        elif isinstance(t, If):
            if isinstance(t.cond, CondPrim) and (t.cond.op not in COMPARE_OPS or len(t.cond.operands) != 2):
                out.append(Violation("prim-arity", f"bad condition {t.cond.op}", e.point))
            stack.extend([(t.then, scope), (t.else_, scope)])
        elif isinstance(t, Switch):
            stack.extend((c, scope) for c in children(t))
    return out


def is_alpha_unique(program: Program) -> bool:
    return not any(v.kind == "duplicate-binder" for v in check_well_formed(program))


# -- structural equality ----------------------------------------------------------

def alpha_equivalent(a: Program, b: Program) -> bool:
    """Structural equality up to binder identity and program points."""
    env = {HALT: HALT}

    def same_vars(xs, ys):
        return len(xs) == len(ys) and all(env.get(x, x) == y for x, y in zip(xs, ys))

    def bind(xs, ys):
        if len(xs) != len(ys):
            return False
        env.update(zip(xs, ys))
        return True

    def lam(la, lb):
        return bind(lambda_binders(la), lambda_binders(lb)) and expr(la.body, lb.body)

    def rhs(ra, rb):
        if type(ra) is not type(rb):
            return False
        if isinstance(ra, (ConstInt, ConstBool)):
            return ra == rb
        if isinstance(ra, Select) and ra.index != rb.index:
            return False
        if isinstance(ra, Prim) and ra.op != rb.op:
            return False
        return same_vars(rhs_uses(ra), rhs_uses(rb))

    def expr(ea, eb):
        ta, tb = ea.term, eb.term
        if type(ta) is not type(tb):
            return False
        if isinstance(ta, Let):
            return rhs(ta.rhs, tb.rhs) and bind(ta.binders, tb.binders) and expr(ta.body, tb.body)
        if isinstance(ta, (Fun, Cont)):
            la, lb = term_lambdas(ta), term_lambdas(tb)
            if not bind([l.f for l in la], [l.f for l in lb]):
                return False
            return all(lam(x, y) for x, y in zip(la, lb)) and expr(ta.body, tb.body)
        if isinstance(ta, If):
            if type(ta.cond) is not type(tb.cond) or getattr(ta.cond, "op", None) != getattr(tb.cond, "op", None):
                return False
            return (same_vars(cond_uses(ta.cond), cond_uses(tb.cond))
                    and expr(ta.then, tb.then) and expr(ta.else_, tb.else_))
        if isinstance(ta, Switch):
            if [t for t, _ in ta.arms] != [t for t, _ in tb.arms]:
                return False
            if (ta.default is None) != (tb.default is None):
                return False
            return same_vars((ta.scrutinee,), (tb.scrutinee,)) and all(
                expr(x, y) for x, y in zip(children(ta), children(tb)))
        if isinstance(ta, Apply):
            return (same_vars((ta.target,), (tb.target,)) and same_vars(ta.args, tb.args)
                    and same_vars(ta.rets, tb.rets))
        return same_vars((ta.target,), (tb.target,)) and same_vars(ta.args, tb.args)

    return lam(a.entry, b.entry)
