"""Abstract values for the control-flow analysis.

TOP and BOT bracket three incomparable families: booleans, sets of function
identifiers and tuples.  Tuples are tracked to a fixed nesting depth; anything
deeper collapses to TOP, which is what makes the analysis terminate on
recursive datatypes.
"""

from __future__ import annotations

from dataclasses import dataclass

DEPTH_LIMIT = 5


class AbstractValue:
    __slots__ = ()


@dataclass(frozen=True)
class Top(AbstractValue):
    def __repr__(self):
        return "TOP"


@dataclass(frozen=True)
class Bot(AbstractValue):
    def __repr__(self):
        return "BOT"


@dataclass(frozen=True)
class BoolVal(AbstractValue):
    value: bool

    def __repr__(self):
        return f"BOOL({str(self.value).lower()})"


@dataclass(frozen=True)
class Lambdas(AbstractValue):
    fns: frozenset

    def __repr__(self):
        return "LAMBDAS{" + ",".join(sorted(repr(f) for f in self.fns)) + "}"


@dataclass(frozen=True)
class TupleVal(AbstractValue):
    elems: tuple

    def __repr__(self):
        return "TUPLE[" + ", ".join(map(repr, self.elems)) + "]"


TOP = Top()
BOT = Bot()


def lambdas(*fns) -> AbstractValue:
    return Lambdas(frozenset(fns)) if fns else BOT


def widen(v: AbstractValue, depth: int = 0, limit: int = DEPTH_LIMIT) -> AbstractValue:
    """Collapse tuples that sit at nesting ``limit`` or deeper to TOP."""
    if isinstance(v, TupleVal):
        if depth >= limit:
            return TOP
        return TupleVal(tuple(widen(e, depth + 1, limit) for e in v.elems))
    return v


def join(a: AbstractValue, b: AbstractValue, depth: int = 0, limit: int = DEPTH_LIMIT) -> AbstractValue:
    """Least upper bound of ``a`` and ``b`` seen at nesting ``depth``."""
    if a is BOT or a == BOT:
        return widen(b, depth, limit)
    if b is BOT or b == BOT:
        return widen(a, depth, limit)
    if isinstance(a, Top) or isinstance(b, Top):
        return TOP
    if isinstance(a, BoolVal) and isinstance(b, BoolVal):
        return a if a.value == b.value else TOP
    if isinstance(a, Lambdas) and isinstance(b, Lambdas):
        return a if b.fns <= a.fns else Lambdas(a.fns | b.fns)
    if isinstance(a, TupleVal) and isinstance(b, TupleVal):
        if depth >= limit or len(a.elems) != len(b.elems):
            return TOP
        return TupleVal(tuple(join(x, y, depth + 1, limit) for x, y in zip(a.elems, b.elems)))
    return TOP


def leq(a: AbstractValue, b: AbstractValue) -> bool:
    """Lattice order."""
    if isinstance(a, Bot) or isinstance(b, Top):
        return True
    if isinstance(a, Top) or isinstance(b, Bot):
        return False
    if isinstance(a, BoolVal) and isinstance(b, BoolVal):
        return a.value == b.value
    if isinstance(a, Lambdas) and isinstance(b, Lambdas):
        return a.fns <= b.fns
    if isinstance(a, TupleVal) and isinstance(b, TupleVal):
        return len(a.elems) == len(b.elems) and all(map(leq, a.elems, b.elems))
    return False


def lambdas_in(v: AbstractValue) -> frozenset:
    """Every function identifier still tracked somewhere inside ``v``."""
    if isinstance(v, Lambdas):
        return v.fns
    if isinstance(v, TupleVal):
        out = frozenset()
        for e in v.elems:
            out |= lambdas_in(e)
        return out
    return frozenset()


def depth(v: AbstractValue) -> int:
    """Tuple nesting depth (0 for non-tuples)."""
    if isinstance(v, TupleVal):
        return 1 + max((depth(e) for e in v.elems), default=0)
    return 0
