import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpsopt.interp import (BoolV, ClosV, DynamicTypeError, Halted, IntV, OutOfFuel, TupleV,
                           evaluate, format_value, outcomes_equal, values_equal)
from cpsopt.ir import VarId
from cpsopt.text import parse_text

from helpers import corpus


def test_unsafe_example_yields_false():
    out, _ = evaluate(corpus("example3.mml"))
    assert out == Halted(BoolV(False))


def test_hand_inlined_variant_yields_true():
    out, _ = evaluate(corpus("example3_bad.mml"))
    assert out == Halted(BoolV(True))


def test_smallest_program():
    out, trace = evaluate(parse_text("(let ((x (int 1))) (throw halt (x)))"))
    assert out == Halted(IntV(1))
    assert len(trace.calls) == 1


def test_values_equal():
    f = VarId(1, "f")
    assert values_equal(IntV(3), IntV(3))
    assert not values_equal(TupleV((IntV(1), BoolV(False))), TupleV((IntV(1), BoolV(True))))
    assert values_equal(ClosV(f, {}), ClosV(f, {VarId(2, "x"): IntV(0)}))
    assert not values_equal(ClosV(f, {}), ClosV(VarId(3, "g"), {}))
    assert not values_equal(IntV(1), BoolV(True))
    assert not values_equal(TupleV((IntV(1),)), TupleV((IntV(1), IntV(1))))


def test_outcomes_equal():
    assert outcomes_equal(OutOfFuel, OutOfFuel)
    assert not outcomes_equal(OutOfFuel, Halted(IntV(0)))


def test_deterministic(corpus_path):
    p = corpus(corpus_path.name)
    a, ta = evaluate(p)
    b, tb = evaluate(p)
    assert outcomes_equal(a, b)
    assert ta == tb


def test_runs_out_of_fuel():
    p = parse_text("(fun ((loop (x) (k) (apply loop (x) (k)))) (let ((n (int 0))) (apply loop (n) (halt))))")
    out, trace = evaluate(p, fuel=50)
    assert out is OutOfFuel
    assert len(trace.calls) == 50


@given(st.integers(1, 3000))
def test_fuel_monotone(extra):
    p = corpus("fib.mml")
    _, trace = evaluate(p)
    needed = len(trace.calls)
    assert evaluate(p, fuel=needed - 1)[0] is OutOfFuel
    out, _ = evaluate(p, fuel=needed + extra)
    assert out == Halted(IntV(610))


def test_trace_records_arms():
    p = corpus("branch.mml")
    _, trace = evaluate(p)
    assert [tag for _, tag in trace.arms] == [1, 1]


@pytest.mark.parametrize("src", [
    "(let ((x (int 1))) (apply x () (halt)))",
    "(let ((x (int 1))) (let ((z (int 0))) (let ((y (prim div x z))) (throw halt (y)))))",
    "(let ((x (int 1))) (let ((y (select 0 x))) (throw halt (y))))",
    "(fun ((f (x) (k) (throw k (x)))) (apply f () (halt)))",
])
def test_dynamic_type_errors(src):
    with pytest.raises(DynamicTypeError):
        evaluate(parse_text(src))


def test_format_value():
    assert format_value(TupleV((IntV(-1), BoolV(True)))) == "(-1, true)"


def test_big_integers():
    out, _ = evaluate(corpus("factorial.mml"))
    assert out.value.n == 2432902008176640000
