"""Environmental consonance as graph reachability.

The flow graph has one node per expression plus, for every lambda, a node
that rebinds its free variables and a node that binds its parameters.  Call
sites get edges to the entries of the functions the CFA says they may call;
unknown call sites go to a single escape hub that leads to every escaping
function.  Inlining ``f`` at a site is safe when no path runs from the point
where ``f``'s closure is captured, through a rebinding of one of ``f``'s free
variables, to the site.

Reachability is answered from the SCC condensation: each component keeps the
set of components reachable from it by a nonempty path, stored as an integer
bitset.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from . import ir
from .cfa import TOP_TARGETS, CfaResult, Known
from .ir import HALT, Apply, Cont, Fun, If, Let, Program, Switch, Throw


class NodeKind(enum.Enum):
    FREE_VAR_BIND = "FreeVarBind"
    PARAM_BIND = "ParamBind"
    LET_BIND = "LetBind"
    CALL_SITE = "CallSite"
    BRANCH = "Branch"
    PLAIN = "Plain"
    ESCAPE_HUB = "EscapeHub"


class NotACallSite(KeyError):
    pass


class UnknownFunction(KeyError):
    pass


@dataclass(frozen=True)
class FlowNode:
    id: int
    kind: NodeKind
    point: Optional[int] = None
    binds: frozenset = frozenset()
    owner: Optional[ir.VarId] = None  # lambda for bind nodes of a function entry


@dataclass
class FlowGraph:
    nodes: list
    edges: list                      # (from, to)
    call_edges: set                  # subset of edges added from CFA results
    fun_entry: dict                  # lambda -> its FreeVarBind node
    param_node: dict                 # lambda -> its ParamBind node
    site_node: dict                  # call-site point -> node
    capture_node: dict               # lambda -> node where its closure is built
    point_node: dict                 # point -> node
    free_vars: dict                  # lambda -> free variables
    hub: int = 0
    _succ: list = field(default=None, repr=False)
    _binders: dict = field(default=None, repr=False)

    def __len__(self):
        return len(self.nodes)

    @property
    def succ(self) -> list:
        if self._succ is None:
            self._succ = adjacency(len(self.nodes), self.edges)
        return self._succ

    def binding_nodes(self, v) -> list:
        if self._binders is None:
            self._binders = {}
            for n in self.nodes:
                for b in n.binds:
                    self._binders.setdefault(b, []).append(n.id)
        return self._binders.get(v, [])

    def with_edges(self, extra) -> "FlowGraph":
        """Copy of the graph with additional edges."""
        return FlowGraph(self.nodes, self.edges + list(extra), set(self.call_edges),
                         self.fun_entry, self.param_node, self.site_node,
                         self.capture_node, self.point_node, self.free_vars, self.hub)


def adjacency(n, edges) -> list:
    succ = [[] for _ in range(n)]
    for u, v in edges:
        succ[u].append(v)
    return succ


def build_graph(program: Program, result: CfaResult) -> FlowGraph:
    """Flow graph of ``program`` augmented with the CFA's call edges."""
    nodes, edges = [], []
    fun_entry, param_node, site_node, capture_node, point_node = {}, {}, {}, {}, {}
    fvs = ir.all_free_vars(program)

    def node(kind, point=None, binds=(), owner=None):
        n = FlowNode(len(nodes), kind, point, frozenset(binds), owner)
        nodes.append(n)
        return n.id

    hub = node(NodeKind.ESCAPE_HUB)
    # work items: ("lam", Lambda, capture) or ("expr", Expr, predecessor)
    work = [("lam", program.entry, None)]
    while work:
        tag, item, pred = work.pop()
        if tag == "lam":
            lam = item
            entry = node(NodeKind.FREE_VAR_BIND, binds=fvs[lam.f], owner=lam.f)
            params = node(NodeKind.PARAM_BIND, binds=lam.params + lam.rets, owner=lam.f)
            edges.append((entry, params))
            fun_entry[lam.f] = entry
            param_node[lam.f] = params
            if pred is not None:
                capture_node[lam.f] = pred
            work.append(("expr", lam.body, params))
            continue
        e, t = item, item.term
        if isinstance(t, Let):
            n = node(NodeKind.LET_BIND, e.point, t.binders)
        elif isinstance(t, (Fun, Cont)):
            # a letrec: the function names are (re)bound here
            n = node(NodeKind.LET_BIND, e.point, [lam.f for lam in ir.term_lambdas(t)])
        elif isinstance(t, (If, Switch)):
            n = node(NodeKind.BRANCH, e.point)
        elif isinstance(t, (Apply, Throw)):
            n = node(NodeKind.CALL_SITE, e.point)
            site_node[e.point] = n
        else:
            n = node(NodeKind.PLAIN, e.point)
        point_node[e.point] = n
        edges.append((pred, n))
        for child in reversed(ir.children(t) if not isinstance(t, (Fun, Cont)) else [t.body]):
            work.append(("expr", child, n))
        for lam in reversed(ir.term_lambdas(t)):
            work.append(("lam", lam, n))

    call_edges = set()
    for point, n in site_node.items():
        targets = result.targets.get(point)
        if isinstance(targets, Known):
            for f in sorted(targets.fns):
                if f in fun_entry:
                    call_edges.add((n, fun_entry[f]))
        elif targets is TOP_TARGETS:
            call_edges.add((n, hub))
    for f in sorted(result.escaping):
        if f in fun_entry:
            call_edges.add((hub, fun_entry[f]))
    edges.extend(sorted(call_edges))
    return FlowGraph(nodes, edges, call_edges, fun_entry, param_node, site_node,
                     capture_node, point_node, fvs, hub)


# -- strongly connected components ----------------------------------------------

@dataclass(frozen=True)
class Condensation:
    component_of: list   # node -> component
    members: list        # component -> nodes
    dag: list            # component -> sorted successor components
    cyclic: list         # component -> more than one node or a self-loop


def tarjan_scc(n: int, succ: list) -> Condensation:
    """Iterative Tarjan.  Components come out in reverse topological order."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack, members = [], []
    comp = [-1] * n
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        path = [root]
        iters = [iter(succ[root])]
        while iters:
            v = path[-1]
            for w in iters[-1]:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    path.append(w)
                    iters.append(iter(succ[w]))
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                path.pop()
                iters.pop()
                if path:
                    u = path[-1]
                    if low[v] < low[u]:
                        low[u] = low[v]
                if low[v] == index[v]:
                    c = len(members)
                    group = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp[w] = c
                        group.append(w)
                        if w == v:
                            break
                    members.append(group)
    dag = [set() for _ in members]
    self_loop = [False] * len(members)
    for u in range(n):
        cu = comp[u]
        for w in succ[u]:
            cw = comp[w]
            if cu != cw:
                dag[cu].add(cw)
            elif u == w:
                self_loop[cu] = True
    cyclic = [len(m) > 1 or s for m, s in zip(members, self_loop)]
    return Condensation(comp, members, [sorted(d) for d in dag], cyclic)


def graph_scc(graph: FlowGraph) -> Condensation:
    return tarjan_scc(len(graph.nodes), graph.succ)


# -- DAG reachability -----------------------------------------------------------------

@dataclass(frozen=True)
class ReachMap:
    component_of: list
    closure: list        # component -> bitset of R(c) plus c itself
    cyclic: list

    def R(self, c) -> frozenset:
        """Components reachable from ``c`` by a nonempty path."""
        bits = self.closure[c]
        if not self.cyclic[c]:
            bits &= ~(1 << c)
        out, i = [], 0
        while bits:
            if bits & 1:
                out.append(i)
            bits >>= 1
            i += 1
        return frozenset(out)


def dag_reachability(dag: list, cyclic: list, component_of: Optional[list] = None) -> ReachMap:
    """Bottom-up reachability over an acyclic component graph.

    A component reaches itself only if it is cyclic.  Leaves are processed
    first; each one folds its set, plus itself, into every parent, and a parent
    becomes a leaf once all its children are done.  Each component stores
    R(c) together with c, which is exactly what a leaf hands to its parents.
    """
    n = len(dag)
    closure = [1 << c for c in range(n)]
    parents = [[] for _ in range(n)]
    pending = [len(children) for children in dag]
    for c, children in enumerate(dag):
        for child in children:
            parents[child].append(c)
    done = 0
    leaves = [c for c in range(n) if pending[c] == 0]
    while leaves:
        leaf = leaves.pop()
        done += 1
        carried = closure[leaf]
        for p in parents[leaf]:
            closure[p] |= carried
            pending[p] -= 1
            if pending[p] == 0:
                leaves.append(p)
    if done != n:
        raise ValueError("component graph has a cycle")
    if component_of is None:
        component_of = list(range(n))
    return ReachMap(component_of, closure, cyclic)


def reach_map(graph: FlowGraph) -> ReachMap:
    cond = graph_scc(graph)
    return dag_reachability(cond.dag, cond.cyclic, cond.component_of)


def reaches(m: ReachMap, src: int, dst: int) -> bool:
    """Is there a nonempty path from ``src`` to ``dst``?"""
    cs, cd = m.component_of[src], m.component_of[dst]
    if cs == cd:
        return m.cyclic[cs]
    return (m.closure[cs] >> cd) & 1 == 1


# -- the consonance query ------------------------------------------------------------------

def _interfering(m, g, fn, site):
    if site not in g.site_node:
        raise NotACallSite(site)
    if fn == HALT:
        return
    if fn not in g.fun_entry:
        raise UnknownFunction(fn)
    c = g.capture_node[fn]
    s = g.site_node[site]
    own = {g.fun_entry[fn], g.param_node[fn]}
    for v in sorted(g.free_vars[fn]):
        for b in g.binding_nodes(v):
            if b not in own and reaches(m, c, b) and reaches(m, b, s):
                yield b


def consonant(m: ReachMap, g: FlowGraph, fn, site: int) -> bool:
    """True when ``fn``'s free variables cannot be rebound between its capture and ``site``."""
    return next(_interfering(m, g, fn, site), None) is None


def _path(g, src, dst):
    """Shortest nonempty path from src to dst (BFS), as a node list."""
    prev = {}
    queue = deque()
    for w in g.succ[src]:
        if w not in prev:
            prev[w] = src
            queue.append(w)
    while queue:
        v = queue.popleft()
        if v == dst:
            path = [v]
            while path[-1] != src or len(path) == 1:
                path.append(prev[path[-1]])
            return path[::-1]
        for w in g.succ[v]:
            if w not in prev:
                prev[w] = v
                queue.append(w)
    return None


def interference_witness(m: ReachMap, g: FlowGraph, fn, site: int):
    """A path capture -> rebinding node -> site, or None when consonant."""
    b = next(_interfering(m, g, fn, site), None)
    if b is None:
        return None
    first = _path(g, g.capture_node[fn], b)
    second = _path(g, b, g.site_node[site])
    return first + second[1:]


# -- output -----------------------------------------------------------------------

def to_dot(g: FlowGraph, names=None, cond: Optional[Condensation] = None) -> str:
    names = names or {}

    def nm(v):
        return names.get(v, v.name)

    lines = ["digraph reflow {", "  node [shape=box, fontname=monospace];"]
    for n in g.nodes:
        label = n.kind.value
        if n.point is not None:
            label += f" @{n.point}"
        if n.owner is not None:
            label += f" [{nm(n.owner)}]"
        if n.binds:
            label += "\\n{" + ", ".join(sorted(nm(v) for v in n.binds)) + "}"
        if cond is not None:
            label += f"\\nscc {cond.component_of[n.id]}"
        attrs = f'label="{label}"'
        if n.kind is NodeKind.ESCAPE_HUB:
            attrs += ", shape=diamond"
        lines.append(f"  n{n.id} [{attrs}];")
    for u, v in g.edges:
        style = " [style=dashed]" if (u, v) in g.call_edges else ""
        lines.append(f"  n{u} -> n{v}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"
