"""Optimizations enabled by the flow analysis.

* branch elimination: a switch over a variable known to hold one boolean keeps
  only the matching arm;
* copy propagation: a call through a variable that can only hold ``f`` calls
  ``f`` directly;
* inlining: such a call is replaced by a renamed copy of ``f``'s body, even
  when ``f`` has free variables, provided they are consonant at the site;
* useless-variable elimination: dead lets, dead functions and parameters no
  caller's value can reach through a use.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

from . import ir
from .cfa import CfaResult, Known, analyze
from .ir import (HALT, Apply, CondVar, Cont, Expr, Fun, If, Lambda, Let, Program,
                 Switch, Throw)
from .lattice import DEPTH_LIMIT, BoolVal
from .reflow import FlowGraph, ReachMap, build_graph, consonant, reach_map

PASSES = ("branch-elim", "copy-prop", "inline", "uve")
INLINE_SIZE_LIMIT = 40


@dataclass
class PassStats:
    branches_eliminated: int = 0
    copies_propagated: int = 0
    functions_inlined: int = 0
    params_removed: int = 0
    log: list = field(default_factory=list)

    def merge(self, other: "PassStats") -> "PassStats":
        return PassStats(self.branches_eliminated + other.branches_eliminated,
                         self.copies_propagated + other.copies_propagated,
                         self.functions_inlined + other.functions_inlined,
                         self.params_removed + other.params_removed,
                         self.log + other.log)

    def to_dict(self) -> dict:
        return {
            "branches-eliminated": self.branches_eliminated,
            "copies-propagated": self.copies_propagated,
            "functions-inlined": self.functions_inlined,
            "params-removed": self.params_removed,
        }


class _Rewriter:
    """Rebuilds a program top-down while tracking lexical scope.

    Subclasses override ``rewrite``, which may return a replacement for an
    expression (already rewritten) or None to recurse structurally.
    """

    def __init__(self):
        self.scope = set()
        self.inside = []   # names of the lambdas enclosing the current point

    def run(self, p: Program) -> Program:
        self.scope = set(ir.lambda_binders(p.entry)) | {HALT}
        return Program(self.lam(p.entry))

    def rewrite(self, e: Expr):
        return None

    def lam(self, lam: Lambda) -> Lambda:
        bound = lam.params + lam.rets
        self.scope.update(bound)
        self.inside.append(lam.f)
        body = self.expr(lam.body)
        self.inside.pop()
        self.scope.difference_update(bound)
        return Lambda(lam.f, lam.params, lam.rets, body)

    def expr(self, e: Expr) -> Expr:
        new = self.rewrite(e)
        if new is not None:
            return new
        t = e.term
        if isinstance(t, Let):
            self.scope.update(t.binders)
            body = self.expr(t.body)
            self.scope.difference_update(t.binders)
            return Expr(e.point, Let(t.binders, t.rhs, body))
        if isinstance(t, (Fun, Cont)):
            lams = ir.term_lambdas(t)
            names = [lam.f for lam in lams]
            self.scope.update(names)
            lams = tuple(self.lam(lam) for lam in lams)
            body = self.expr(t.body)
            self.scope.difference_update(names)
            term = Fun(lams, body) if isinstance(t, Fun) else Cont(lams[0], body)
            return Expr(e.point, term)
        if isinstance(t, If):
            return Expr(e.point, If(t.cond, self.expr(t.then), self.expr(t.else_)))
        if isinstance(t, Switch):
            arms = tuple((tag, self.expr(arm)) for tag, arm in t.arms)
            default = self.expr(t.default) if t.default is not None else None
            return Expr(e.point, Switch(t.scrutinee, arms, default))
        return e


# -- branch elimination ---------------------------------------------------------

class _BranchElim(_Rewriter):
    def __init__(self, r: CfaResult, stats: PassStats):
        super().__init__()
        self.r = r
        self.stats = stats

    def rewrite(self, e):
        t = e.term
        arm = tag = None
        if isinstance(t, Switch):
            v = self.r.value(t.scrutinee)
            if isinstance(v, BoolVal):
                tag = int(v.value)
                arm = dict(t.arms).get(tag, t.default)
        elif isinstance(t, If) and isinstance(t.cond, CondVar):
            v = self.r.value(t.cond.var)
            if isinstance(v, BoolVal):
                tag = int(v.value)
                arm = t.then if v.value else t.else_
        if arm is None:
            return None
        self.stats.branches_eliminated += 1
        self.stats.log.append(("branch", e.point, tag))
        return self.expr(arm)


def branch_eliminate(p: Program, r: CfaResult):
    stats = PassStats()
    return _BranchElim(r, stats).run(p), stats


# -- copy propagation -------------------------------------------------------------

def _single_target(r: CfaResult, e: Expr):
    targets = r.targets.get(e.point)
    if isinstance(targets, Known) and len(targets.fns) == 1:
        return next(iter(targets.fns))
    return None


class _CopyProp(_Rewriter):
    def __init__(self, r, m, g, stats):
        super().__init__()
        self.r, self.m, self.g, self.stats = r, m, g, stats

    def rewrite(self, e):
        t = e.term
        if not isinstance(t, (Apply, Throw)):
            return None
        f = _single_target(self.r, e)
        if f is None or f == t.target or f not in self.scope:
            return e
        if e.point not in self.g.site_node or not consonant(self.m, self.g, f, e.point):
            return e
        self.stats.copies_propagated += 1
        self.stats.log.append(("copy", e.point, f))
        if isinstance(t, Apply):
            return Expr(e.point, Apply(f, t.args, t.rets))
        return Expr(e.point, Throw(f, t.args))


def copy_propagate(p: Program, r: CfaResult, m: ReachMap, g: FlowGraph):
    stats = PassStats()
    return _CopyProp(r, m, g, stats).run(p), stats


# -- inlining -----------------------------------------------------------------------

class _Inline(_Rewriter):
    def __init__(self, p, r, m, g, size_limit, stats):
        super().__init__()
        self.r, self.m, self.g, self.stats = r, m, g, stats
        self.size_limit = size_limit
        self.lams = p.lambdas()
        self.groups = {}
        for e in ir.walk(p.body):
            lams = ir.term_lambdas(e.term)
            names = frozenset(lam.f for lam in lams)
            for lam in lams:
                self.groups[lam.f] = names
        self.fvs = g.free_vars
        self.points = itertools.count(ir.max_point(p) + 1)

    def candidate(self, e, f):
        t = e.term
        lam = self.lams.get(f)
        if lam is None or f == HALT:
            return None
        if self.groups.get(f, frozenset([f])) & set(self.inside):
            return None  # recursive through this site
        rets = t.rets if isinstance(t, Apply) else ()
        if len(t.args) != len(lam.params) or len(rets) != len(lam.rets):
            return None
        if ir.size(lam.body) > self.size_limit:
            return None
        if not self.fvs[f] <= self.scope:
            return None
        if not consonant(self.m, self.g, f, e.point):
            return None
        return lam

    def rewrite(self, e):
        t = e.term
        if not isinstance(t, (Apply, Throw)):
            return None
        f = _single_target(self.r, e)
        lam = self.candidate(e, f) if f is not None else None
        if lam is None:
            return e
        rets = t.rets if isinstance(t, Apply) else ()
        subst = dict(zip(lam.params, t.args))
        subst.update(zip(lam.rets, rets))
        body = ir.Renamer(subst, self.points).expr(lam.body)
        self.stats.functions_inlined += 1
        self.stats.log.append(("inline", e.point, f))
        return body


def inline(p: Program, r: CfaResult, m: ReachMap, g: FlowGraph, size_limit: int = INLINE_SIZE_LIMIT):
    stats = PassStats()
    if size_limit <= 0:
        return p, stats
    return _Inline(p, r, m, g, size_limit, stats).run(p), stats


# -- useless-variable elimination ---------------------------------------------------

def _useless_params(p: Program, escaping) -> dict:
    """Map from function to the parameter indices no use can observe.

    Only functions that appear solely as the target of direct calls with the
    right arity are candidates.  A parameter is useful if it is used other
    than by being passed to a candidate's parameter, or if it is passed to a
    useful one; everything else is useless (greatest fixpoint).
    """
    lams = p.lambdas()
    other_use = Counter()
    direct_calls = {}
    passed = []   # (var, callee, index)
    for e in ir.walk(p.body):
        t = e.term
        if isinstance(t, (Apply, Throw)):
            direct_calls.setdefault(t.target, []).append(t)
            for j, a in enumerate(t.args):
                passed.append((a, t.target, j))
            if isinstance(t, Apply):
                other_use.update(t.rets)
        else:
            other_use.update(ir.term_uses(t))

    as_arg = Counter(a for a, _, _ in passed)

    def is_candidate(f):
        lam = lams.get(f)
        if lam is None or f == p.entry.f or f in escaping or other_use[f] or as_arg[f]:
            return False
        for t in direct_calls.get(f, ()):
            if len(t.args) != len(lam.params):
                return False
            if len(t.rets if isinstance(t, Apply) else ()) != len(lam.rets):
                return False
        return True

    candidates = {f for f in lams if is_candidate(f)}
    # a use as the target of a call is a real use of a non-candidate variable
    for f, ts in direct_calls.items():
        if f not in candidates:
            other_use[f] += len(ts)
    position = {}
    for f in candidates:
        for i, x in enumerate(lams[f].params):
            position[x] = (f, i)
    feeds = {}    # callee position -> parameter positions passed into it
    for a, callee, j in passed:
        if callee in candidates:
            if a in position:
                feeds.setdefault((callee, j), []).append(position[a])
        else:
            other_use[a] += 1
    useful = {pos for x, pos in position.items() if other_use[x]}
    work = list(useful)
    while work:
        pos = work.pop()
        for src in feeds.get(pos, ()):
            if src not in useful:
                useful.add(src)
                work.append(src)
    out = {}
    for x, (f, i) in position.items():
        if (f, i) not in useful:
            out.setdefault(f, set()).add(i)
    return out


class _DropParams(_Rewriter):
    def __init__(self, useless):
        super().__init__()
        self.useless = useless

    def lam(self, lam):
        new = super().lam(lam)
        drop = self.useless.get(lam.f)
        if not drop:
            return new
        params = tuple(x for i, x in enumerate(new.params) if i not in drop)
        return Lambda(new.f, params, new.rets, new.body)

    def rewrite(self, e):
        t = e.term
        if not isinstance(t, (Apply, Throw)) or t.target not in self.useless:
            return None
        drop = self.useless[t.target]
        args = tuple(a for i, a in enumerate(t.args) if i not in drop)
        if isinstance(t, Apply):
            return Expr(e.point, Apply(t.target, args, t.rets))
        return Expr(e.point, Throw(t.target, args))


class _DropDead(_Rewriter):
    """Removes lets and functions whose names are never used from outside."""

    def __init__(self, uses: Counter, stats: PassStats):
        super().__init__()
        self.uses = uses
        self.stats = stats
        self.changed = False

    def rewrite(self, e):
        t = e.term
        if isinstance(t, Let) and not any(self.uses[b] for b in t.binders):
            self.changed = True
            self.stats.log.append(("drop-let", e.point, t.binders))
            return self.expr(t.body)
        if isinstance(t, (Fun, Cont)):
            lams = ir.term_lambdas(t)
            inner = Counter()
            for lam in lams:
                inner.update(ir.use_counts(lam.body))
            live = {lam.f for lam in lams if self.uses[lam.f] > inner[lam.f]}
            work = list(live)
            by_name = {lam.f: lam for lam in lams}
            while work:
                f = work.pop()
                for v in ir.use_counts(by_name[f].body):
                    if v in by_name and v not in live:
                        live.add(v)
                        work.append(v)
            if len(live) == len(lams):
                return None
            self.changed = True
            for lam in lams:
                if lam.f not in live:
                    self.stats.log.append(("drop-fun", e.point, lam.f))
            if not live:
                return self.expr(t.body)
            kept = tuple(lam for lam in lams if lam.f in live)
            return self.expr(Expr(e.point, Fun(kept, t.body)))
        return None


def _drop_dead(p: Program, stats: PassStats) -> Program:
    while True:
        d = _DropDead(ir.use_counts(p.body), stats)
        p = d.run(p)
        if not d.changed:
            return p


def useless_var_elim(p: Program, depth_limit: int = DEPTH_LIMIT):
    stats = PassStats()
    p = _drop_dead(p, stats)
    while True:
        useless = _useless_params(p, analyze(p, depth_limit).escaping)
        if not useless:
            return p, stats
        lams = p.lambdas()
        for f in sorted(useless):
            for i in sorted(useless[f]):
                stats.params_removed += 1
                stats.log.append(("param", f, lams[f].params[i]))
        p = _drop_dead(_DropParams(useless).run(p), stats)


# -- pipeline ---------------------------------------------------------------------------

def run_pipeline(p: Program, passes=PASSES, size_limit: int = INLINE_SIZE_LIMIT,
                 depth_limit: int = DEPTH_LIMIT):
    """Run ``passes`` in order, recomputing analyses only when a pass invalidates them.

    Copy propagation keeps the flow map, targets and graph valid (it only
    redirects calls to the function they already reach), so an inline pass
    right after it reuses them.
    """
    unknown = [x for x in passes if x not in PASSES]
    if unknown:
        raise ValueError(f"unknown pass {unknown[0]!r}")
    total = PassStats()
    r = g = m = None
    for name in passes:
        if r is None:
            r = analyze(p, depth_limit)
        if name == "branch-elim":
            p, s = branch_eliminate(p, r)
            if s.branches_eliminated:
                r = g = m = None
        elif name == "uve":
            p, s = useless_var_elim(p, depth_limit)
            r = g = m = None
        else:
            if g is None:
                g = build_graph(p, r)
                m = reach_map(g)
            if name == "copy-prop":
                p, s = copy_propagate(p, r, m, g)
            else:
                p, s = inline(p, r, m, g, size_limit)
                if s.functions_inlined:
                    r = g = m = None
        total = total.merge(s)
    return p, total
