"""Command-line driver.

    cpsopt analyze PROG            flow map, call targets, escaping set (JSON)
    cpsopt graph PROG --emit=dot   flow graph (or --emit=scc for components)
    cpsopt opt PROG                optimize, print stats and optionally the IR
    cpsopt run PROG                evaluate and print the halt value

``.mml`` files are surface programs, ``.cps`` files textual IR.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import ir
from .cfa import TOP_TARGETS, Known, analyze
from .frontend import compile_surface
from .interp import DynamicTypeError, Halted, evaluate, format_value, value_to_json
from .ir import ParseError
from .lattice import DEPTH_LIMIT, BoolVal, Lambdas, TupleVal
from .opt import INLINE_SIZE_LIMIT, PASSES, run_pipeline
from .reflow import build_graph, graph_scc, to_dot
from .text import display_names, parse_text, print_text


@dataclass
class RunConfig:
    command: str
    input_path: str
    input_kind: str | None = None    # None: infer from the extension
    passes: tuple = PASSES
    depth_limit: int = DEPTH_LIMIT
    inline_size_limit: int = INLINE_SIZE_LIMIT
    fuel: int = 1_000_000
    emit: str = ""
    stats: str = "text"
    trace: str = ""
    out: str = ""


def load(path, kind=None) -> ir.Program:
    source = Path(path).read_text()
    if kind is None:
        kind = "ir" if str(path).endswith(".cps") else "surface"
    return parse_text(source) if kind == "ir" else compile_surface(source)


def abstract_to_json(v, names):
    if isinstance(v, BoolVal):
        return {"bool": v.value}
    if isinstance(v, Lambdas):
        return {"lambdas": sorted(names.get(f, f.name) for f in v.fns)}
    if isinstance(v, TupleVal):
        return {"tuple": [abstract_to_json(e, names) for e in v.elems]}
    return repr(v)


def analysis_report(p: ir.Program, depth_limit=DEPTH_LIMIT) -> dict:
    r = analyze(p, depth_limit)
    names = display_names(p)

    def nm(v):
        return names.get(v, v.name)

    def targets(t):
        if isinstance(t, Known):
            return sorted(nm(f) for f in t.fns)
        return "Top" if t is TOP_TARGETS else "Bot"

    return {
        "flow": {nm(v): abstract_to_json(val, names)
                 for v, val in sorted(r.flow.items())},
        "call-targets": {str(pt): targets(t) for pt, t in sorted(r.targets.items())},
        "escaping": sorted(nm(f) for f in r.escaping),
        "iterations": r.iterations,
        "depth-limit": depth_limit,
    }


def scc_report(p: ir.Program, depth_limit=DEPTH_LIMIT) -> dict:
    g = build_graph(p, analyze(p, depth_limit))
    cond = graph_scc(g)
    return {
        "nodes": [{"id": n.id, "kind": n.kind.value, "point": n.point,
                   "component": cond.component_of[n.id]} for n in g.nodes],
        "components": [{"id": c, "members": sorted(ms), "cyclic": cond.cyclic[c],
                        "successors": cond.dag[c]} for c, ms in enumerate(cond.members)],
    }


def _parser():
    ap = argparse.ArgumentParser(prog="cpsopt", description="CPS flow analysis and optimizer")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("input")
        p.add_argument("--input-kind", choices=["surface", "ir"])
        p.add_argument("--cfa-depth-limit", type=int, default=DEPTH_LIMIT)
        p.add_argument("--out", default="")

    common(sub.add_parser("analyze", help="print the flow analysis as JSON"))
    g = sub.add_parser("graph", help="print the flow graph")
    common(g)
    g.add_argument("--emit", choices=["dot", "scc"], default="dot")
    o = sub.add_parser("opt", help="optimize")
    common(o)
    o.add_argument("--passes", default=",".join(PASSES))
    o.add_argument("--inline-size-limit", type=int, default=INLINE_SIZE_LIMIT)
    o.add_argument("--stats", choices=["json", "text"], default="text")
    o.add_argument("--emit", choices=["ir", "none"], default="none")
    r = sub.add_parser("run", help="evaluate")
    common(r)
    r.add_argument("--fuel", type=int, default=1_000_000)
    r.add_argument("--trace", choices=["json"], default=None)
    return ap


def _write(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def parse_config(argv=None) -> RunConfig:
    args = _parser().parse_args(argv)
    cfg = RunConfig(args.command, args.input, args.input_kind,
                    depth_limit=args.cfa_depth_limit, out=args.out)
    if args.command == "opt":
        cfg.passes = tuple(x for x in args.passes.split(",") if x)
        cfg.inline_size_limit = args.inline_size_limit
        cfg.stats = args.stats
    if args.command in ("graph", "opt"):
        cfg.emit = args.emit
    if args.command == "run":
        cfg.fuel = args.fuel
        cfg.trace = args.trace or ""
    return cfg


def execute(cfg: RunConfig) -> int:
    try:
        p = load(cfg.input_path, cfg.input_kind)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    limit = cfg.depth_limit

    if cfg.command == "analyze":
        _write(json.dumps(analysis_report(p, limit), indent=2) + "\n", cfg.out)
    elif cfg.command == "graph":
        if cfg.emit == "scc":
            _write(json.dumps(scc_report(p, limit), indent=2) + "\n", cfg.out)
        else:
            g = build_graph(p, analyze(p, limit))
            _write(to_dot(g, display_names(p), graph_scc(g)), cfg.out)
    elif cfg.command == "opt":
        bad = [x for x in cfg.passes if x not in PASSES]
        if bad:
            print(f"error: unknown pass {bad[0]!r}", file=sys.stderr)
            return 1
        q, stats = run_pipeline(p, cfg.passes, cfg.inline_size_limit, limit)
        problems = ir.check_well_formed(q)
        if problems:
            for v in problems:
                print(f"internal error: {v.kind} at {v.point}: {v.message}", file=sys.stderr)
            return 2
        if cfg.stats == "json":
            text = json.dumps(stats.to_dict(), indent=2) + "\n"
        else:
            text = "".join(f"{k}: {v}\n" for k, v in stats.to_dict().items())
        if cfg.emit == "ir":
            # IR goes to --out when given, stats stay on stdout
            if cfg.out:
                Path(cfg.out).write_text(print_text(q))
            else:
                text += print_text(q)
            sys.stdout.write(text)
        else:
            _write(text, cfg.out)
    else:
        try:
            outcome, trace = evaluate(p, cfg.fuel)
        except DynamicTypeError as exc:
            print(f"runtime error: {exc}", file=sys.stderr)
            return 1
        if isinstance(outcome, Halted):
            text = format_value(outcome.value) + "\n"
        else:
            text = "out of fuel\n"
        if cfg.trace == "json":
            names = display_names(p)
            text += json.dumps({
                "result": value_to_json(outcome.value) if isinstance(outcome, Halted) else None,
                "calls": [[pt, names.get(f, f.name)] for pt, f in trace.calls],
                "arms": [list(a) for a in trace.arms],
            }) + "\n"
        _write(text, cfg.out)
    return 0


def main(argv=None) -> int:
    return execute(parse_config(argv))


if __name__ == "__main__":
    sys.exit(main())
