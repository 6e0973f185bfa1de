"""Zeroth-order control-flow analysis.

Starting from an empty map, repeatedly walk the whole program merging the
abstract value of every binding into the map until nothing changes.  Known
boolean scrutinees restrict the walk to the arm that can actually run.

Functions whose callers are not all known (the entry point, anything that
flows to an unknown call or is lost inside TOP) are *escaping*; their
parameters are assumed to receive TOP.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ir
from .ir import (HALT, Alloc, Apply, CondVar, ConstBool, ConstInt, Cont, Fun, If,
                 Let, Prim, Program, Select, Switch, Throw, Var)
from .lattice import (BOT, DEPTH_LIMIT, TOP, BoolVal, Lambdas, TupleVal, join,
                      lambdas_in, widen)


class UnknownSite(KeyError):
    pass


@dataclass(frozen=True)
class Known:
    fns: frozenset


class _Targets:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


BOT_TARGETS = _Targets("Bot")
TOP_TARGETS = _Targets("Top")


@dataclass(frozen=True)
class CfaResult:
    flow: dict
    targets: dict       # call-site point -> BOT_TARGETS | TOP_TARGETS | Known
    escaping: frozenset
    iterations: int
    depth_limit: int = DEPTH_LIMIT

    def value(self, v):
        return self.flow.get(v, BOT)


def call_targets(result: CfaResult, site: int):
    try:
        return result.targets[site]
    except KeyError:
        raise UnknownSite(site) from None


def targets_of(value):
    if value == BOT:
        return BOT_TARGETS
    if isinstance(value, Lambdas):
        return Known(value.fns)
    return TOP_TARGETS


class _Analysis:
    def __init__(self, program: Program, limit: int):
        self.program = program
        self.limit = limit
        self.lams = program.lambdas()
        self.flow = {HALT: Lambdas(frozenset([HALT]))}
        self.escaping = {program.entry.f}
        self.changed = False

    def get(self, v):
        return self.flow.get(v, BOT)

    def escape(self, fns):
        for f in fns:
            if f != HALT and f not in self.escaping:
                self.escaping.add(f)
                self.changed = True

    def update(self, var, val):
        old = self.get(var)
        new = join(old, val, 0, self.limit)
        if new != old:
            lost = (lambdas_in(old) | lambdas_in(val)) - lambdas_in(new)
            if lost:
                self.escape(lost)
            self.flow[var] = new
            self.changed = True

    def rhs_value(self, rhs):
        if isinstance(rhs, ConstInt):
            return TOP
        if isinstance(rhs, ConstBool):
            return BoolVal(rhs.b)
        if isinstance(rhs, Alloc):
            raw = TupleVal(tuple(self.get(v) for v in rhs.fields))
            val = widen(raw, 0, self.limit)
            self.escape(lambdas_in(raw) - lambdas_in(val))
            return val
        if isinstance(rhs, Select):
            t = self.get(rhs.tuple)
            if isinstance(t, TupleVal):
                return t.elems[rhs.index] if rhs.index < len(t.elems) else BOT
            return BOT if t == BOT else TOP
        if isinstance(rhs, Prim):
            return TOP
        if isinstance(rhs, Var):
            return self.get(rhs.src)
        raise TypeError(rhs)

    def call(self, target, args, rets):
        tv = self.get(target)
        if tv == BOT:
            return
        arg_vals = [self.get(v) for v in args]
        ret_vals = [self.get(v) for v in rets]
        if not isinstance(tv, Lambdas):
            for v in arg_vals + ret_vals:
                self.escape(lambdas_in(v))
            return
        for f in tv.fns:
            if f == HALT:
                for v in arg_vals:
                    self.escape(lambdas_in(v))
                continue
            lam = self.lams[f]
            for p, v in zip(lam.params, arg_vals):
                self.update(p, v)
            for r, v in zip(lam.rets, ret_vals):
                self.update(r, v)

    def live_arms(self, e):
        t = e.term
        if isinstance(t, If):
            if isinstance(t.cond, CondVar):
                c = self.get(t.cond.var)
                if isinstance(c, BoolVal):
                    return [t.then if c.value else t.else_]
                if c == BOT:
                    return []
            return [t.then, t.else_]
        c = self.get(t.scrutinee)
        if isinstance(c, BoolVal):
            arm = dict(t.arms).get(int(c.value), t.default)
            return [arm] if arm is not None else []
        if c == BOT:
            return []
        return ir.children(t)

    def round(self):
        entry = self.program.entry
        for f in sorted(self.escaping):
            lam = self.lams[f]
            for p in lam.params:
                self.update(p, TOP)
            if f != entry.f:
                for r in lam.rets:
                    self.update(r, TOP)
        stack = [entry.body]
        while stack:
            e = stack.pop()
            t = e.term
            if isinstance(t, Let):
                val = self.rhs_value(t.rhs)
                if len(t.binders) == 1:
                    self.update(t.binders[0], val)
                else:
                    for b in t.binders:
                        self.update(b, TOP)
                stack.append(t.body)
            elif isinstance(t, (Fun, Cont)):
                for lam in ir.term_lambdas(t):
                    self.update(lam.f, Lambdas(frozenset([lam.f])))
                stack.append(t.body)
                stack.extend(reversed([lam.body for lam in ir.term_lambdas(t)]))
            elif isinstance(t, (If, Switch)):
                stack.extend(reversed(self.live_arms(e)))
            elif isinstance(t, Apply):
                self.call(t.target, t.args, t.rets)
            elif isinstance(t, Throw):
                self.call(t.target, t.args, ())


def analyze(program: Program, depth_limit: int = DEPTH_LIMIT) -> CfaResult:
    a = _Analysis(program, depth_limit)
    iterations = 0
    while True:
        iterations += 1
        a.changed = False
        a.round()
        if not a.changed:
            break
    targets = {e.point: targets_of(a.get(e.term.target)) for e in ir.calls(program)}
    return CfaResult(dict(a.flow), targets, frozenset(a.escaping), iterations, depth_limit)
