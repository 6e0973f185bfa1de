import itertools

import pytest

from cpsopt import ir
from cpsopt.interp import evaluate, outcomes_equal
from cpsopt.ir import (HALT, Apply, ConstInt, Expr, Let, ParseError, Prim, Program,
                       Renamer, ScopeError, Throw, VarId)
from cpsopt.text import parse_text, print_text

from helpers import corpus, lambdas_named

SMALLEST = "(let ((x (int 1))) (throw halt (x)))"


def test_parse_smallest_program():
    p = parse_text(SMALLEST)
    assert isinstance(p.body.term, Let)
    assert isinstance(p.body.term.body.term, Throw)
    assert p.body.term.body.term.target == HALT
    assert sorted(p.points()) == [1, 2]


def test_unbound_variable_is_scope_error():
    with pytest.raises(ScopeError):
        parse_text("(throw k (x))")


@pytest.mark.parametrize("src", [
    "(let ((x (int 1)) (throw halt (x)))",
    "(let ((x (int 1))) (frobnicate halt (x)))",
    "(let ((x (int one))) (throw halt (x)))",
    ")",
])
def test_malformed_input_reports_position(src):
    with pytest.raises(ParseError) as info:
        parse_text(src)
    assert info.value.line is not None


def test_parse_error_line_and_column():
    with pytest.raises(ParseError) as info:
        parse_text("(let ((x (int 1)))\n   (bogus halt (x)))")
    assert info.value.line == 2
    assert info.value.col == 4


def test_canonical_text():
    assert print_text(parse_text(SMALLEST)) == "(let ((x (int 1)))\n  (throw halt (x)))\n"


def test_round_trip(corpus_path):
    p = corpus(corpus_path.name)
    text = print_text(p)
    q = parse_text(text)
    assert ir.alpha_equivalent(p, q)
    assert print_text(q) == text


def test_points_are_not_printed():
    p = corpus("example2.mml")
    shifted = Renamer(points=itertools.count(1000))
    shifted.bind = lambda v: v
    q = Program(shifted.lam_body(p.entry, p.entry.f))
    assert q.points().keys() != p.points().keys()
    assert print_text(q) == print_text(p)


def test_print_is_deterministic():
    src = (corpus("counter.mml"))
    assert print_text(src) == print_text(src)
    again = corpus("counter.mml")  # fresh ids, same structure
    assert print_text(again) == print_text(src)


def test_parser_output_is_well_formed(corpus_path):
    p = corpus(corpus_path.name)
    assert ir.check_well_formed(p) == []
    assert ir.is_alpha_unique(p)


def test_points_unique_and_preorder():
    p = corpus("fold_sum.mml")
    points = [e.point for e in ir.walk(p.body)]
    assert points == list(range(1, len(points) + 1))


def _kinds(p):
    return {v.kind for v in ir.check_well_formed(p)}


def test_violation_non_leaf_call():
    k = VarId.fresh("k")
    x = VarId.fresh("x")
    bad = Expr(1, Let((x,), Apply(HALT, (), ()), Expr(2, Throw(HALT, (x,)))))
    p = Program(ir.Lambda(VarId.fresh("main"), (), (HALT,), bad))
    assert "non-leaf-call" in _kinds(p)
    assert k not in ir.free_vars(p.entry)


def test_violation_duplicate_binder():
    # substitute a body into two places without renaming
    x = VarId.fresh("x")
    inner = Expr(2, Let((x,), ConstInt(1), Expr(3, Throw(HALT, (x,)))))
    outer = Expr(1, Let((x,), ConstInt(2), inner))
    p = Program(ir.Lambda(VarId.fresh("main"), (), (HALT,), outer))
    assert "duplicate-binder" in _kinds(p)
    assert not ir.is_alpha_unique(p)


def test_violation_prim_arity_scope_and_points():
    x, y = VarId.fresh("x"), VarId.fresh("y")
    body = Expr(1, Let((y,), Prim("add", (x,)), Expr(1, Throw(HALT, (y,)))))
    p = Program(ir.Lambda(VarId.fresh("main"), (), (HALT,), body))
    assert {"prim-arity", "scope", "duplicate-point"} <= _kinds(p)


def test_free_vars_of_map_argument():
    # fn y => y + x: the operator is a primitive, only x is free
    p = corpus("inline_simple.mml")
    (g,) = lambdas_named(p, "g")
    assert {v.name for v in ir.free_vars(p.lambdas()[g])} == {"x"}


def test_free_vars_closed_function():
    p = corpus("compose.mml")
    (inc,) = lambdas_named(p, "inc")
    assert ir.free_vars(p.lambdas()[inc]) == frozenset()


def test_free_vars_captured_parameter():
    p = corpus("example3.mml")
    lams = p.lambdas()
    returns_b = [f for f in lambdas_named(p, "fn")
                 if isinstance(lams[f].body.term, Throw) and lams[f].body.term.args[0].name == "b"]
    assert len(returns_b) == 1
    assert {v.name for v in ir.free_vars(lams[returns_b[0]])} == {"b"}


def test_free_vars_within_enclosing_scope(corpus_path):
    p = corpus(corpus_path.name)
    fvs = ir.all_free_vars(p)
    scope_stack = [(p.entry.body, frozenset(ir.lambda_binders(p.entry)))]
    while scope_stack:
        e, scope = scope_stack.pop()
        t = e.term
        if isinstance(t, Let):
            scope_stack.append((t.body, scope | set(t.binders)))
        elif isinstance(t, (ir.Fun, ir.Cont)):
            lams = ir.term_lambdas(t)
            inner = scope | {lam.f for lam in lams}
            for lam in lams:
                assert fvs[lam.f] <= inner - set(lam.params + lam.rets)
                scope_stack.append((lam.body, inner | set(lam.params + lam.rets)))
            scope_stack.append((t.body, inner))
        else:
            scope_stack.extend((c, scope) for c in ir.children(t))


def test_alpha_rename_gives_distinct_ids():
    p = corpus("shadowing.mml")
    q = ir.alpha_rename(p)
    old = {v for lam in p.lambdas().values() for v in ir.lambda_binders(lam)}
    new = {v for lam in q.lambdas().values() for v in ir.lambda_binders(lam)}
    assert not (old - {HALT}) & new
    xs = [v for e in ir.walk(q.body) if isinstance(e.term, Let) for v in e.term.binders if v.name == "x"]
    assert len(xs) == 2 and xs[0] != xs[1]
    assert ir.is_alpha_unique(q)


def test_alpha_rename_preserves_structure_and_meaning(corpus_path):
    p = corpus(corpus_path.name)
    q = ir.alpha_rename(p)
    assert ir.alpha_equivalent(p, q)
    assert print_text(p) == print_text(q)
    assert outcomes_equal(evaluate(p)[0], evaluate(q)[0])


def test_alpha_equivalent_detects_difference():
    a = parse_text("(let ((x (int 1))) (throw halt (x)))")
    b = parse_text("(let ((x (int 2))) (throw halt (x)))")
    assert not ir.alpha_equivalent(a, b)
