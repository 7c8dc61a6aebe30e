"""SystemVerilog rendering of predicate trees.

Signal naming is delegated to a callback so the same renderer serves the
central module (``aes_aw_addr_in``), wrappers (``S_AXI_AWADDR``) and
assertion modules.
"""

from __future__ import annotations

import math
from typing import Callable

from ..policy.ast import (And, BoolConst, Compare, Const, Not, Or, Popcount, Selector,
                          Sequence, Signal, Temporal, Xor, walk)

POPCOUNT_WIDTH = 32

SignalNamer = Callable[[Signal], str]
WidthOf = Callable[[Signal], int]


def sv_literal(value: int, width: int = 1, digits: int = 0) -> str:
    """Sized hex literal wide enough for both the context and the value."""
    w = max(width, value.bit_length(), 1)
    nd = max(digits, 1)
    return f"{w}'h{value:0{nd}x}"


def term_width(node, width_of: WidthOf) -> int:
    if isinstance(node, Const):
        return max(node.value.bit_length(), 1)
    if isinstance(node, Signal):
        if node.msb is None:
            return width_of(node)
        if node.lsb is None:
            return 1
        return node.msb - node.lsb + 1
    if isinstance(node, Popcount):
        return POPCOUNT_WIDTH
    if isinstance(node, Xor):
        return max(term_width(op, width_of) for op in node.operands)
    raise TypeError(f"not a term: {node!r}")


def _signal(node: Signal, namer: SignalNamer) -> str:
    base = namer(node)
    if node.msb is None:
        return base
    if node.lsb is None:
        return f"{base}[{node.msb}]"
    return f"{base}[{node.msb}:{node.lsb}]"


def render_term(node, namer: SignalNamer, width_of: WidthOf, ctx: int = 1) -> str:
    if isinstance(node, Const):
        return sv_literal(node.value, ctx, node.digits if node.hex else 0)
    if isinstance(node, Signal):
        return _signal(node, namer)
    if isinstance(node, Popcount):
        return f"$countones({render_term(node.arg, namer, width_of, ctx)})"
    if isinstance(node, Xor):
        w = term_width(node, width_of)
        parts = [render_term(op, namer, width_of, w) for op in node.operands]
        return "(" + " ^ ".join(parts) + ")"
    raise TypeError(f"not a term: {node!r}")


def _is_temporal(node) -> bool:
    return any(isinstance(n, (Temporal, Sequence)) for n in walk(node))


def render_expr(node, namer: SignalNamer, width_of: WidthOf) -> str:
    """Render a boolean tree as a self-delimiting SystemVerilog expression.

    Subtrees containing temporal operators or sequences are rendered with
    property connectives (``and``/``or``/``not``), everything else with the
    boolean ones.
    """
    prop = _is_temporal(node)
    if isinstance(node, BoolConst):
        return "1'b1" if node.value else "1'b0"
    if isinstance(node, Compare):
        w = max(term_width(node.left, width_of), term_width(node.right, width_of))
        left = render_term(node.left, namer, width_of, w)
        right = render_term(node.right, namer, width_of, w)
        return f"({left} {node.op} {right})"
    if isinstance(node, Not):
        inner = render_expr(node.operand, namer, width_of)
        return f"(not {inner})" if prop else f"!{inner}"
    if isinstance(node, (And, Or)):
        if prop:
            op = " and " if isinstance(node, And) else " or "
        else:
            op = " && " if isinstance(node, And) else " || "
        return "(" + op.join(render_expr(c, namer, width_of) for c in node.operands) + ")"
    if isinstance(node, Temporal):
        if node.op == "until":
            left, right = (render_expr(c, namer, width_of) for c in node.operands)
            return f"({left} until {right})"
        inner = render_expr(node.operands[0], namer, width_of)
        return f"({'s_eventually' if node.op == 'eventually' else 'always'} {inner})"
    if isinstance(node, Sequence):
        out = render_expr(node.stages[0], namer, width_of)
        for gap, stage in zip(node.gaps, node.stages[1:]):
            out += f" ##{gap} " + render_expr(stage, namer, width_of)
        return f"({out})"
    if isinstance(node, Selector):
        raise TypeError("selectors are resolved before rendering")
    raise TypeError(f"not an expression: {node!r}")


def render_conjunction(parts: list[str]) -> str:
    """Join already-rendered conjuncts; an empty list means constant true."""
    return " && ".join(parts) if parts else "1'b1"


def bool_depth(node) -> int:
    """Logic depth: a comparison is 1 and a k-input and/or adds ceil(log2 k)."""
    if isinstance(node, Compare):
        return 1
    if isinstance(node, Not):
        return bool_depth(node.operand)
    if isinstance(node, (And, Or)):
        k = len(node.operands)
        return max(bool_depth(c) for c in node.operands) + math.ceil(math.log2(k))
    if isinstance(node, Sequence):
        return max(bool_depth(s) for s in node.stages)
    return 0


def comparison_count(node) -> int:
    return sum(isinstance(n, Compare) for n in walk(node))
