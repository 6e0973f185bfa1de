"""Shared test utilities and independent oracles."""

from pathlib import Path

from cpsopt import ir
from cpsopt.cli import load
from cpsopt.frontend import (SApp, SBinop, SBool, SFn, SFunGroup, SIf, SInt, SLet,
                             SProj, STuple, SVal, SVar)
from cpsopt.ir import Apply, Throw

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def corpus(name):
    path = CORPUS / name
    return load(path)


def owner_of(program):
    """Map from call-site point to the name of the innermost enclosing lambda."""
    out = {}
    for lam in program.lambdas().values():
        stack = [lam.body]
        while stack:
            e = stack.pop()
            if isinstance(e.term, (Apply, Throw)):
                out[e.point] = lam.f
            # do not descend into nested lambdas; they are visited on their own
            t = e.term
            if isinstance(t, (ir.Fun, ir.Cont)):
                stack.append(t.body)
            else:
                stack.extend(ir.children(t))
    return out


def call_sites(program, target_name, owner_name=None):
    """Points of calls through a variable named ``target_name``."""
    owners = owner_of(program)
    out = []
    for e in ir.calls(program):
        if e.term.target.name == target_name:
            if owner_name is None or owners[e.point].name == owner_name:
                out.append(e.point)
    return sorted(out)


def lambdas_named(program, name):
    return [f for f in program.lambdas() if f.name == name]


def lambda_by_body(program, predicate):
    return [lam.f for lam in program.lambdas().values() if predicate(lam)]


# -- direct-style oracle ------------------------------------------------------------

class Closure:
    def __init__(self, params, body, env):
        self.params, self.body, self.env = params, body, env


def direct_eval(e, env=None):
    """Big-step evaluator over the surface syntax, written independently of the CPS path."""
    env = env or {}
    if isinstance(e, SInt):
        return e.n
    if isinstance(e, SBool):
        return e.b
    if isinstance(e, SVar):
        return env[e.name]
    if isinstance(e, SFn):
        return Closure(e.params, e.body, env)
    if isinstance(e, STuple):
        return tuple(direct_eval(x, env) for x in e.elems)
    if isinstance(e, SProj):
        return direct_eval(e.expr, env)[e.index - 1]
    if isinstance(e, SBinop):
        a, b = direct_eval(e.left, env), direct_eval(e.right, env)
        return {"+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                "<": lambda: a < b, "<=": lambda: a <= b, "=": lambda: a == b}[e.op]()
    if isinstance(e, SIf):
        return direct_eval(e.then if direct_eval(e.cond, env) else e.else_, env)
    if isinstance(e, SApp):
        f = direct_eval(e.fn, env)
        args = [direct_eval(a, env) for a in e.args]
        inner = dict(f.env)
        inner.update(zip(f.params, args))
        return direct_eval(f.body, inner)
    if isinstance(e, SLet):
        env = dict(env)
        for d in e.decls:
            if isinstance(d, SVal):
                env[d.name] = direct_eval(d.rhs, env)
            else:
                assert isinstance(d, SFunGroup)
                shared = dict(env)
                for fd in d.defs:
                    shared[fd.name] = Closure(fd.params, fd.body, shared)
                env = dict(shared)  # later declarations must not leak into the closures
        return direct_eval(e.body, env)
    raise TypeError(e)


def to_python(v):
    """Runtime value of the CPS interpreter as a Python value (closures as '<fn>')."""
    from cpsopt.interp import BoolV, IntV, TupleV
    if isinstance(v, IntV):
        return v.n
    if isinstance(v, BoolV):
        return v.b
    if isinstance(v, TupleV):
        return tuple(to_python(x) for x in v.items)
    return "<fn>"


def oracle_python(v):
    if isinstance(v, Closure):
        return "<fn>"
    if isinstance(v, tuple):
        return tuple(oracle_python(x) for x in v)
    return v


# -- reachability oracle ----------------------------------------------------------

def warshall(n, edges):
    """Nonempty-path reachability by Warshall's algorithm, rows as bitsets.

    Returns ``reach`` with bit j of reach[i] set iff a nonempty path i -> j exists.
    """
    reach = [0] * n
    for u, v in edges:
        reach[u] |= 1 << v
    for k in range(n):
        bit, rk = 1 << k, reach[k]
        for i in range(n):
            if reach[i] & bit:
                reach[i] |= rk
    return reach
