"""Flow-analysis-driven optimizer for a small CPS language."""

import sys

from .cfa import analyze, call_targets
from .frontend import compile_surface
from .interp import evaluate
from .ir import Program, check_well_formed
from .opt import PASSES, run_pipeline
from .reflow import build_graph, consonant, reach_map, reaches
from .text import parse_text, print_text

# Passes and printers recurse over expression nesting.
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

__all__ = [
    "PASSES", "Program", "analyze", "build_graph", "call_targets", "check_well_formed",
    "compile_surface", "consonant", "evaluate", "parse_text", "print_text",
    "reach_map", "reaches", "run_pipeline",
]
