"""Synthetic programs for scaling runs and randomized tests."""

from __future__ import annotations

import random

from . import ir
from .ir import (HALT, Apply, CondPrim, ConstInt, Cont, Expr, Fun, If, Lambda, Let,
                 Prim, Program, Throw, VarId)


def _calls(callees, arg, k):
    """Call each callee in turn, feeding each result to the next, then return to k."""
    j, r = VarId.fresh("j"), VarId.fresh("r")
    rest = Expr(0, Throw(k, (r,))) if len(callees) == 1 else _calls(callees[1:], r, k)
    return Expr(0, Cont(Lambda(j, (r,), (), rest), Expr(0, Apply(callees[0], (arg,), (j,)))))


def chain_program(n_funs: int, seed: int = 0, fanout: int = 2) -> Program:
    """One mutually recursive group of ``n_funs`` functions calling each other.

    Each function counts its argument down and makes ``fanout`` non-tail
    calls to random siblings, so the flow graph has about 16 nodes per
    function and recursion cycles through the call and return edges.
    """
    rng = random.Random(seed)
    names = [VarId.fresh(f"f{i}") for i in range(n_funs)]
    funs = []
    for f in names:
        x, k = VarId.fresh("x"), VarId.fresh("k")
        one, a, zero = VarId.fresh("one"), VarId.fresh("a"), VarId.fresh("zero")
        callees = [names[rng.randrange(n_funs)] for _ in range(max(1, fanout))]
        test = Expr(0, Let((zero,), ConstInt(0),
                           Expr(0, If(CondPrim("leq", (a, zero)),
                                      Expr(0, Throw(k, (x,))), _calls(callees, a, k)))))
        body = Expr(0, Let((one,), ConstInt(1),
                           Expr(0, Let((a,), Prim("sub", (x, one)), test))))
        funs.append(Lambda(f, (x,), (k,), body))
    n = VarId.fresh("n")
    start = Expr(0, Let((n,), ConstInt(3), Expr(0, Apply(names[0], (n,), (HALT,)))))
    main_body = Expr(0, Fun(tuple(funs), start))
    return ir.renumber(Program(Lambda(VarId.fresh("main"), (), (HALT,), main_body)))
