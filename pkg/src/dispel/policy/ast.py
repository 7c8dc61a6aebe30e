"""Expression trees for the predicate, timing and action parts of a policy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Union

REL_OPS = ("==", "!=", "<", "<=", ">", ">=")

# -- expression nodes ----------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: int
    # Spelling hints for emission only; two literals with equal value are equal.
    hex: bool = field(default=False, compare=False)
    digits: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Signal:
    name: str
    msb: int | None = None
    lsb: int | None = None   # None with msb set means a single index: sig[msb]

    @property
    def qualifier(self) -> str | None:
        return self.name.split(".", 1)[0] if "." in self.name else None

    @property
    def base(self) -> str:
        return self.name.rsplit(".", 1)[-1]

    @property
    def is_slice(self) -> bool:
        return self.msb is not None and self.lsb is not None

    def renamed(self, name: str) -> "Signal":
        return Signal(name, self.msb, self.lsb)


@dataclass(frozen=True)
class Xor:
    operands: tuple


@dataclass(frozen=True)
class Popcount:
    arg: object


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    operand: object


@dataclass(frozen=True)
class And:
    operands: tuple


@dataclass(frozen=True)
class Or:
    operands: tuple


@dataclass(frozen=True)
class Selector:
    kind: str                # "slave_no", "master_no" or "clock_cycles"
    op: str
    values: tuple[int, ...]


@dataclass(frozen=True)
class Temporal:
    op: str                  # "eventually", "always" or "until"
    operands: tuple


@dataclass(frozen=True)
class Sequence:
    stages: tuple
    gaps: tuple[int, ...]    # gaps[i] = cycles from stage i to stage i+1


Term = Union[Const, Signal, Popcount, Xor]
Expr = Union[BoolConst, Compare, Not, And, Or, Selector, Temporal, Sequence]

# -- timing and action ---------------------------------------------------------


@dataclass(frozen=True)
class Always:
    pass


@dataclass(frozen=True)
class ModeEquals:
    mode: int


@dataclass(frozen=True)
class CycleBound:
    relation: str
    count: int

    @property
    def threshold(self) -> int:
        """Number of completed active cycles after which the bound is exceeded."""
        return self.count if self.relation == ">" else self.count - 1


Timing = Union[Always, ModeEquals, CycleBound]


@dataclass(frozen=True)
class Reject:
    pass


@dataclass(frozen=True)
class Assignments:
    items: tuple[tuple[Signal, Const], ...]


Action = Union[Reject, Assignments]

# -- traversal -----------------------------------------------------------------


def children(node) -> tuple:
    if isinstance(node, (And, Or, Xor, Temporal)):
        return node.operands
    if isinstance(node, Sequence):
        return node.stages
    if isinstance(node, Compare):
        return (node.left, node.right)
    if isinstance(node, Not):
        return (node.operand,)
    if isinstance(node, Popcount):
        return (node.arg,)
    return ()


def walk(node) -> Iterator:
    yield node
    for child in children(node):
        yield from walk(child)


def signals(node) -> list[Signal]:
    return [n for n in walk(node) if isinstance(n, Signal)]


def transform(node, fn: Callable):
    """Rebuild ``node`` bottom-up, applying ``fn`` to every rebuilt node."""
    if isinstance(node, And):
        node = And(tuple(transform(c, fn) for c in node.operands))
    elif isinstance(node, Or):
        node = Or(tuple(transform(c, fn) for c in node.operands))
    elif isinstance(node, Xor):
        node = Xor(tuple(transform(c, fn) for c in node.operands))
    elif isinstance(node, Temporal):
        node = Temporal(node.op, tuple(transform(c, fn) for c in node.operands))
    elif isinstance(node, Sequence):
        node = Sequence(tuple(transform(c, fn) for c in node.stages), node.gaps)
    elif isinstance(node, Compare):
        node = Compare(node.op, transform(node.left, fn), transform(node.right, fn))
    elif isinstance(node, Not):
        node = Not(transform(node.operand, fn))
    elif isinstance(node, Popcount):
        node = Popcount(transform(node.arg, fn))
    return fn(node)


def conjuncts(node) -> list:
    """Top-level conjuncts, flattening nested conjunctions."""
    if isinstance(node, And):
        out = []
        for child in node.operands:
            out.extend(conjuncts(child))
        return out
    return [node]


def conjoin(items: list):
    items = [i for i in items if not (isinstance(i, BoolConst) and i.value)]
    if not items:
        return BoolConst(True)
    if len(items) == 1:
        return items[0]
    return And(tuple(items))


# -- source printer ------------------------------------------------------------


def _literal(c: Const) -> str:
    if c.hex:
        return f"0x{c.value:0{max(c.digits, 1)}x}"
    return str(c.value)


def _term(node) -> str:
    if isinstance(node, Const):
        return _literal(node)
    if isinstance(node, Signal):
        if node.msb is None:
            return node.name
        if node.lsb is None:
            return f"{node.name}[{node.msb}]"
        return f"{node.name}[{node.msb}:{node.lsb}]"
    if isinstance(node, Popcount):
        return f"countones({_term(node.arg)})"
    if isinstance(node, Xor):
        return " ^ ".join(_term(op) for op in node.operands)
    raise TypeError(f"not a term: {node!r}")


def to_source(node) -> str:
    """Print an expression back in policy syntax; parses to an equal tree."""
    if isinstance(node, Sequence):
        out = to_source(node.stages[0])
        for gap, stage in zip(node.gaps, node.stages[1:]):
            out += f" then {to_source(stage)} after {gap} cycles"
        return out
    if isinstance(node, BoolConst):
        return "1" if node.value else "0"
    if isinstance(node, Compare):
        op = "=" if node.op == "==" else node.op
        return f"{_term(node.left)} {op} {_term(node.right)}"
    if isinstance(node, Selector):
        return f"{node.kind} {'=' if node.op == '==' else node.op} " + \
            " or ".join(str(v) for v in node.values)
    if isinstance(node, Not):
        return f"not ({to_source(node.operand)})"
    if isinstance(node, And):
        return " and ".join(f"({to_source(c)})" for c in node.operands)
    if isinstance(node, Or):
        return " or ".join(f"({to_source(c)})" for c in node.operands)
    if isinstance(node, Temporal):
        if node.op == "until":
            left, right = node.operands
            return f"({to_source(left)}) until ({to_source(right)})"
        return f"{node.op} ({to_source(node.operands[0])})"
    raise TypeError(f"not an expression: {node!r}")


def timing_source(t: Timing) -> str | None:
    if isinstance(t, ModeEquals):
        return f"mode = {t.mode}"
    if isinstance(t, CycleBound):
        return f"clock_cycles {t.relation} {t.count}"
    return None


def action_source(a: Action) -> str:
    if isinstance(a, Reject):
        return "reject"
    return ", ".join(f"{_term(sig)} = {_literal(val)}" for sig, val in a.items)
