"""Reference evaluator for the CPS IR.

Integers are Python integers (arbitrary precision); ``div`` floors.  Fuel
counts executed calls, so every divergent program runs out of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from . import ir
from .ir import (HALT, Alloc, Apply, CondVar, ConstBool, ConstInt, Cont, Fun, If,
                 Let, Prim, Program, Select, Switch, Throw, Var, VarId)


class DynamicTypeError(Exception):
    pass


@dataclass(frozen=True)
class IntV:
    n: int


@dataclass(frozen=True)
class BoolV:
    b: bool


@dataclass(frozen=True)
class TupleV:
    items: tuple


@dataclass(frozen=True, eq=False)
class ClosV:
    lam: VarId
    env: dict = field(repr=False)


RuntimeValue = Union[IntV, BoolV, TupleV, ClosV]

HALT_CLOSURE = ClosV(HALT, {})


@dataclass(frozen=True)
class Halted:
    value: RuntimeValue


class _OutOfFuel:
    def __repr__(self):
        return "OutOfFuel"


OutOfFuel = _OutOfFuel()


@dataclass
class Trace:
    calls: list = field(default_factory=list)  # (site, callee)
    arms: list = field(default_factory=list)   # (site, tag)


def values_equal(a, b) -> bool:
    """Structural equality; closures compare by code identity only."""
    if isinstance(a, ClosV) and isinstance(b, ClosV):
        return a.lam == b.lam
    if isinstance(a, TupleV) and isinstance(b, TupleV):
        return len(a.items) == len(b.items) and all(map(values_equal, a.items, b.items))
    return type(a) is type(b) and not isinstance(a, ClosV) and a == b


def outcomes_equal(a, b) -> bool:
    if isinstance(a, Halted) and isinstance(b, Halted):
        return values_equal(a.value, b.value)
    return a is OutOfFuel and b is OutOfFuel


def _int(v):
    if not isinstance(v, IntV):
        raise DynamicTypeError(f"expected an integer, got {v!r}")
    return v.n


def _prim(op, vals):
    if op == "eq":
        a, b = vals
        if type(a) is not type(b) or isinstance(a, (TupleV, ClosV)):
            raise DynamicTypeError(f"eq on {a!r} and {b!r}")
        return BoolV(a == b)
    x, y = (_int(v) for v in vals)
    if op == "add":
        return IntV(x + y)
    if op == "sub":
        return IntV(x - y)
    if op == "mul":
        return IntV(x * y)
    if op == "div":
        if y == 0:
            raise DynamicTypeError("division by zero")
        return IntV(x // y)
    if op == "lt":
        return BoolV(x < y)
    if op == "leq":
        return BoolV(x <= y)
    raise DynamicTypeError(f"unknown primitive {op}")


def _rhs(rhs, env):
    if isinstance(rhs, ConstInt):
        return IntV(rhs.n)
    if isinstance(rhs, ConstBool):
        return BoolV(rhs.b)
    if isinstance(rhs, Alloc):
        return TupleV(tuple(env[v] for v in rhs.fields))
    if isinstance(rhs, Select):
        t = env[rhs.tuple]
        if not isinstance(t, TupleV) or rhs.index >= len(t.items):
            raise DynamicTypeError(f"select {rhs.index} from {t!r}")
        return t.items[rhs.index]
    if isinstance(rhs, Prim):
        return _prim(rhs.op, [env[v] for v in rhs.operands])
    if isinstance(rhs, Var):
        return env[rhs.src]
    raise DynamicTypeError(f"unknown rhs {rhs!r}")


def _tag(v):
    if isinstance(v, BoolV):
        return int(v.b)
    if isinstance(v, IntV):
        return v.n
    raise DynamicTypeError(f"switch on {v!r}")


def _close(lams, env, fvs):
    """Closures for a (possibly mutually recursive) group of lambdas."""
    envs = [dict() for _ in lams]
    closures = [ClosV(lam.f, e) for lam, e in zip(lams, envs)]
    scope = {**env, **{lam.f: c for lam, c in zip(lams, closures)}}
    for lam, e in zip(lams, envs):
        e.update((v, scope[v]) for v in fvs[lam.f])
    return scope


def evaluate(program: Program, fuel: int = 1_000_000):
    """Run ``program``; returns ``(Halted(value) | OutOfFuel, Trace)``."""
    lams = program.lambdas()
    fvs = ir.all_free_vars(program)
    trace = Trace()
    env = {HALT: HALT_CLOSURE}
    expr = program.body
    used = 0
    while True:
        t = expr.term
        if isinstance(t, Let):
            val = _rhs(t.rhs, env)
            env = {**env, t.binders[0]: val}
            expr = t.body
        elif isinstance(t, Fun):
            env = _close(t.funs, env, fvs)
            expr = t.body
        elif isinstance(t, Cont):
            env = _close((t.k,), env, fvs)
            expr = t.body
        elif isinstance(t, If):
            if isinstance(t.cond, CondVar):
                c = env[t.cond.var]
                if not isinstance(c, BoolV):
                    raise DynamicTypeError(f"if on {c!r}")
            else:
                c = _prim(t.cond.op, [env[v] for v in t.cond.operands])
            trace.arms.append((expr.point, int(c.b)))
            expr = t.then if c.b else t.else_
        elif isinstance(t, Switch):
            tag = _tag(env[t.scrutinee])
            arm = dict(t.arms).get(tag, t.default)
            if arm is None:
                raise DynamicTypeError(f"no arm for tag {tag}")
            trace.arms.append((expr.point, tag))
            expr = arm
        elif isinstance(t, (Apply, Throw)):
            if used >= fuel:
                return OutOfFuel, trace
            used += 1
            clos = env[t.target]
            if not isinstance(clos, ClosV):
                raise DynamicTypeError(f"call of non-function {clos!r}")
            args = [env[v] for v in t.args]
            rets = [env[v] for v in t.rets] if isinstance(t, Apply) else []
            trace.calls.append((expr.point, clos.lam))
            if clos.lam == HALT:
                if len(args) != 1 or rets:
                    raise DynamicTypeError("halt takes exactly one value")
                return Halted(args[0]), trace
            lam = lams[clos.lam]
            if len(args) != len(lam.params) or len(rets) != len(lam.rets):
                raise DynamicTypeError(f"arity mismatch calling {lam.f!r}")
            env = dict(clos.env)
            env[lam.f] = clos
            env.update(zip(lam.params, args))
            env.update(zip(lam.rets, rets))
            expr = lam.body
        else:
            raise DynamicTypeError(f"unknown term {t!r}")


def format_value(v) -> str:
    if isinstance(v, IntV):
        return str(v.n)
    if isinstance(v, BoolV):
        return "true" if v.b else "false"
    if isinstance(v, TupleV):
        return "(" + ", ".join(format_value(x) for x in v.items) + ")"
    return f"<fn {v.lam.name}>"


def value_to_json(v):
    if isinstance(v, IntV):
        return v.n
    if isinstance(v, BoolV):
        return v.b
    if isinstance(v, TupleV):
        return [value_to_json(x) for x in v.items]
    return {"closure": v.lam.name}
