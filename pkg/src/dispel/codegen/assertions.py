"""Concurrent SystemVerilog assertions for policies that are not synthesized."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from ..policy.ast import BoolConst, ModeEquals, Sequence, Temporal, conjuncts, signals, walk
from ..signals import CHANNELS, MODE_SIGNAL, channel_of
from ..soc import SocConfig
from .central import MODULE_NAME, central_namer, logic_type, mode_check, signal_width
from .expr import render_expr

log = logging.getLogger(__name__)

BUS_SCOPE = "bus"


@dataclass(frozen=True)
class Assertion:
    name: str
    scope: str                      # BUS_SCOPE or an IP name
    ip_id: int | None
    text: str
    ports: tuple[tuple[str, int], ...]   # (signal, width) the assertion reads


def infer_internal_widths(nodes) -> dict[str, int]:
    """Width of each IP-internal signal: one past the highest bit used, else 32."""
    widths: dict[str, int] = {}
    for node in nodes:
        for sig in signals(node):
            if channel_of(sig.name) is not None and sig.qualifier is None:
                continue
            if sig.name == MODE_SIGNAL:
                continue
            w = sig.msb + 1 if sig.msb is not None else 32
            widths[sig.base] = max(widths.get(sig.base, 0), w)
    return widths


def wrapper_namer(sig) -> str:
    """Inside a wrapper, bus signals keep their protocol names and internal ones their base name."""
    if sig.qualifier is not None:
        return sig.base
    return sig.name


def wrapper_width(internal: dict[str, int]):
    def width(sig) -> int:
        if sig.qualifier is None and channel_of(sig.name) is not None:
            return CHANNELS[channel_of(sig.name)].width
        if sig.name == MODE_SIGNAL:
            return 32
        return internal.get(sig.base, 32)
    return width


def _is_property(node) -> bool:
    return any(isinstance(n, (Temporal, Sequence)) for n in walk(node))


def property_expr(rho, tau, namer, width_of) -> str:
    """Conjunction of predicate and timing, in property syntax when needed."""
    parts = [render_expr(c, namer, width_of) for c in conjuncts(rho)
             if not (isinstance(c, BoolConst) and c.value)]
    if isinstance(tau, ModeEquals):
        parts.append(mode_check(tau.mode))
    if not parts:
        return "1'b1"
    return (" and " if _is_property(rho) else " && ").join(parts)


def _assert_line(name: str, expr: str, cfg: SocConfig) -> str:
    if expr == "1'b1":
        log.warning("%s: predicate is constant true; the assertion passes trivially", name)
    rst = f"!{cfg.reset_name}" if cfg.reset_active_low else cfg.reset_name
    return (f"{name}: assert property (@(posedge {cfg.clock_name}) disable iff ({rst}) "
            f"{expr});")


def create_assertion(rho, tau, cfg: SocConfig, name: str = "policy", namer=None,
                     width_of=None) -> str:
    """``name: assert property (@(posedge clk) disable iff (rst) <rho && tau>);``"""
    namer = namer or wrapper_namer
    width_of = width_of or wrapper_width(infer_internal_widths([rho]))
    return _assert_line(name, property_expr(rho, tau, namer, width_of), cfg)


def _ports(rho, tau, namer, width_of) -> tuple:
    seen = {}
    for sig in signals(rho):
        seen[namer(sig)] = width_of(sig)
    if isinstance(tau, ModeEquals):
        seen[MODE_SIGNAL] = 32
    return tuple(sorted(seen.items()))


def bus_assertion(rp, cfg: SocConfig) -> Assertion:
    """Assertion over the central module's input ports, one conjunct per bound IP."""
    rho = rp.residual
    exprs, ports = [], {}
    for ip_id in rp.binding.ids:
        ip = cfg.ip_by_id(ip_id)
        namer = central_namer(ip)
        exprs.append(property_expr(rho, rp.timing, namer, signal_width))
        ports.update(_ports(rho, rp.timing, namer, signal_width))
    joiner = " and " if _is_property(rho) else " && "
    expr = exprs[0] if len(exprs) == 1 else joiner.join(f"({e})" for e in exprs)
    text = _assert_line(rp.ident, expr, cfg)
    return Assertion(rp.ident, BUS_SCOPE, None, text, tuple(sorted(ports.items())))


def ip_assertion(rp, cfg: SocConfig, ip_id: int, internal: dict[str, int]) -> Assertion:
    """Assertion placed inside one IP's wrapper, over the wrapper's own signals."""
    width_of = wrapper_width(internal)
    text = create_assertion(rp.residual, rp.timing, cfg, rp.ident, wrapper_namer, width_of)
    ports = _ports(rp.residual, rp.timing, wrapper_namer, width_of)
    return Assertion(rp.ident, cfg.ip_by_id(ip_id).name, ip_id, text, ports)


def render_assertions_file(bus: list[Assertion], ip_scoped: list[Assertion],
                           cfg: SocConfig, header: str) -> str:
    """Bus-scoped assertions in a module bound into the central module.

    IP-scoped assertions live in their wrappers; they are listed here as
    comments so this file indexes every assertion.
    """
    out = [header]
    if bus:
        ports = {cfg.clock_name: 1, cfg.reset_name: 1}
        for a in bus:
            ports.update(dict(a.ports))
        names = list(ports)
        out.append("module dispel_sva_bus (")
        for i, name in enumerate(names):
            sep = "," if i < len(names) - 1 else ""
            out.append(f"    input {logic_type(ports[name]):<13} {name}{sep}")
        out.append(");")
        out += [f"    {a.text}" for a in bus]
        out.append("endmodule")
        out.append("")
        out.append(f"bind {MODULE_NAME} dispel_sva_bus u_dispel_sva_bus (.*);")
    if ip_scoped:
        if bus:
            out.append("")
        out.append("// IP-scoped assertions (inside the patched wrappers):")
        out += [f"//   {a.name} in {a.scope}_spw" for a in ip_scoped]
    return "\n".join(out) + "\n"
