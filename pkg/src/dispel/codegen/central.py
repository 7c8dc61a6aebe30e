"""The centralized policy module placed between every IP and the interconnect.

Every IP gets one port bundle: ``<ip>_<chan>_in`` is what the module sees,
``<ip>_<chan>_out`` what it passes on, and ``<ip>_sel`` marks the IP as a
party to the current transfer.  With no policies every output equals its
input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ThresholdOverflow
from ..policy.ast import Assignments, BoolConst, Reject, Sequence, conjuncts, signals
from ..signals import CHANNELS, MODE_SIGNAL, PROTOCOL_CHANNELS, channel_of
from ..soc import BusProtocol, IpConfig, SocConfig
from .expr import render_conjunction, render_expr, sv_literal

MODULE_NAME = "dispel_central"
MAX_COUNTER_WIDTH = 32
INDENT = "    "


def in_port(ip: IpConfig, channel: str) -> str:
    return f"{ip.name}_{channel}_in"


def out_port(ip: IpConfig, channel: str) -> str:
    return f"{ip.name}_{channel}_out"


def sel_port(ip: IpConfig) -> str:
    return f"{ip.name}_sel"


def logic_type(width: int) -> str:
    return "logic" if width == 1 else f"logic [{width - 1}:0]"


def signal_width(sig) -> int:
    if sig.name == MODE_SIGNAL:
        return 32
    ch = channel_of(sig.name)
    return CHANNELS[ch].width if ch else 32


def central_namer(ip: IpConfig):
    def name(sig):
        if sig.name == MODE_SIGNAL:
            return MODE_SIGNAL
        return in_port(ip, channel_of(sig.name))
    return name


def mode_check(mode: int) -> str:
    return f"({MODE_SIGNAL} == {sv_literal(mode, 32)})"


def reset_condition(cfg: SocConfig) -> str:
    return f"!{cfg.reset_name}" if cfg.reset_active_low else cfg.reset_name


def clocked_sensitivity(cfg: SocConfig) -> str:
    edge = "negedge" if cfg.reset_active_low else "posedge"
    return f"@(posedge {cfg.clock_name} or {edge} {cfg.reset_name})"


class CentralScope:
    """Naming inside the central module: per-IP bundles gated by ``<ip>_sel``."""

    def namer(self, ip: IpConfig):
        return central_namer(ip)

    def width(self, sig) -> int:
        return signal_width(sig)

    def out(self, ip: IpConfig, channel: str) -> str:
        return out_port(ip, channel)

    def sel(self, ip: IpConfig) -> str | None:
        return sel_port(ip)

    def reg_prefix(self, rp, ip: IpConfig) -> str:
        return rp.ident if len(rp.binding.ids) == 1 else f"{rp.ident}_{ip.name}"


CENTRAL = CentralScope()


@dataclass
class Port:
    direction: str
    width: int
    name: str


@dataclass
class ModuleDef:
    name: str
    ports: list[Port]
    groups: list[tuple[str, int]]   # (comment, index of first port) for readability
    decls: list[str] = field(default_factory=list)
    fsm_blocks: list[str] = field(default_factory=list)


def create_security_policy_module(cfg: SocConfig):
    """Module header plus pass-through master and slave blocks."""
    channels = PROTOCOL_CHANNELS[cfg.bus_protocol]
    ports = [Port("input", 1, cfg.clock_name), Port("input", 1, cfg.reset_name),
             Port("input", 32, MODE_SIGNAL)]
    groups = []
    master_block, slave_block = [], []
    for ip in cfg.ips:
        groups.append((f"{ip.name} ({ip.kind.value.lower()}, id {ip.id})", len(ports)))
        ports.append(Port("input", 1, sel_port(ip)))
        block = master_block if ip.is_master else slave_block
        for ch in channels:
            width = CHANNELS[ch].width
            ports.append(Port("input", width, in_port(ip, ch)))
            ports.append(Port("output", width, out_port(ip, ch)))
            block.append(f"{out_port(ip, ch)} = {in_port(ip, ch)};")
    return ModuleDef(MODULE_NAME, ports, groups), master_block, slave_block


# -- actions -------------------------------------------------------------------


def reject_channels(predicate, protocol: BusProtocol) -> list[str]:
    """Channels zeroed by ``reject``, chosen from the channels the predicate reads."""
    paths = set()
    for sig in signals(predicate):
        ch = channel_of(sig.name) if sig.qualifier is None else None
        if ch is not None:
            paths.add("read" if CHANNELS[ch].path == "read" else "write")
    if len(paths) != 1:
        paths = {"write", "read"}
    if protocol is BusProtocol.WISHBONE:
        table = {"write": ["w_data"], "read": ["r_data"]}
    else:
        table = {"write": ["w_data", "w_valid"], "read": ["r_data", "r_valid"]}
    out = []
    for path in ("write", "read"):
        if path in paths:
            out.extend(table[path])
    return out


def action_assignments(action, predicate, protocol: BusProtocol) -> list[tuple[str, int]]:
    """``(channel, value)`` pairs an action drives, in source order."""
    if isinstance(action, Reject):
        return [(ch, 0) for ch in reject_channels(predicate, protocol)]
    assert isinstance(action, Assignments)
    return [(channel_of(sig.name), val.value) for sig, val in action.items]


def _assign_lines(scope, ip: IpConfig, pairs) -> list[str]:
    return [f"{scope.out(ip, ch)} = {sv_literal(v, CHANNELS[ch].width)};" for ch, v in pairs]


# -- combinational policies ----------------------------------------------------


def condition_parts(predicate, mode, namer, width_of) -> list[str]:
    """Rendered top-level conjuncts of ``predicate`` plus the mode check."""
    parts = []
    for c in conjuncts(predicate):
        if isinstance(c, BoolConst) and c.value:
            continue
        parts.append(render_expr(c, namer, width_of))
    if mode is not None:
        parts.append(mode_check(mode))
    return parts


def _if_block(parts: list[str], body: list[str], indent: str) -> list[str]:
    if not parts:
        return [indent + line for line in body]
    lines = [f"{indent}if ({render_conjunction(parts)}) begin"]
    lines += [indent + INDENT + line for line in body]
    lines.append(f"{indent}end")
    return lines


def create_cond(rp, cfg: SocConfig, flags: dict | None = None, scope=CENTRAL,
                ids=None) -> list[str]:
    """Named block with one guarded assignment group per bound IP.

    For FSM policies ``flags`` maps IP id to the flag register, which then
    replaces the predicate in the guard.
    """
    pairs = action_assignments(rp.action, rp.residual, cfg.bus_protocol)
    lines = [f"begin : pol_{rp.ident}"]
    for ip_id in ids or rp.binding.ids:
        ip = cfg.ip_by_id(ip_id)
        if flags is not None:
            parts = [flags[ip_id]]
            if rp.mode is not None:
                parts.append(mode_check(rp.mode))
        else:
            parts = condition_parts(rp.residual, rp.mode, scope.namer(ip), scope.width)
        lines += _if_block(parts, _assign_lines(scope, ip, pairs), INDENT)
    lines.append("end")
    return lines


# -- FSM policies --------------------------------------------------------------


@dataclass(frozen=True)
class FsmPlan:
    flag_register_name: str
    counter_width: int
    states: tuple[str, ...]
    transitions: tuple          # (from_state, to_state, condition tree)
    threshold: int
    kind: str                   # "counter" or "sequence"
    registers: tuple = ()       # (name, width) of every state register


def _gate(scope, ip: IpConfig, cond) -> str:
    sel = scope.sel(ip)
    parts = [sel] if sel else []
    if not (isinstance(cond, BoolConst) and cond.value):
        parts.append(render_expr(cond, scope.namer(ip), scope.width))
    return " && ".join(parts) or "1'b1"


def _counter(rp, ip: IpConfig, cfg: SocConfig, scope):
    prefix = scope.reg_prefix(rp, ip)
    flag, count = f"{prefix}_flag", f"{prefix}_count"
    threshold = rp.bound.threshold
    width = max(1, threshold.bit_length())
    if width > MAX_COUNTER_WIDTH:
        raise ThresholdOverflow(f"cycle threshold {threshold} needs a {width}-bit counter"
                                f" (limit {MAX_COUNTER_WIDTH})", rp.name)
    gate = _gate(scope, ip, rp.residual)
    plan = FsmPlan(flag, width, ("counting", "flagged"),
                   (("counting", "flagged", rp.residual),), threshold, "counter",
                   ((flag, 1), (count, width)))
    text = [
        f"always_ff {clocked_sensitivity(cfg)} begin : fsm_{prefix}",
        f"    if ({reset_condition(cfg)}) begin",
        f"        {flag} <= 1'b0;",
        f"        {count} <= '0;",
        f"    end else if ({gate}) begin",
        f"        if ({count} >= {sv_literal(threshold, width)}) begin",
        f"            {flag} <= 1'b1;",
        "        end else begin",
        f"            {count} <= {count} + 1'b1;",
        "        end",
        "    end",
        "end",
    ]
    return plan, text


def _sequence(rp, ip: IpConfig, cfg: SocConfig, scope):
    seq: Sequence = rp.residual
    prefix = scope.reg_prefix(rp, ip)
    flag = f"{prefix}_flag"
    regs = [(f"{prefix}_s{i}", gap) for i, gap in enumerate(seq.gaps, start=1)]
    # match[i]: stage i holds now and every earlier stage held at its offset
    match = [_gate(scope, ip, seq.stages[0])]
    for i, (reg, gap) in enumerate(regs, start=1):
        tap = reg if gap == 1 else f"{reg}[{gap - 1}]"
        match.append(f"{tap} && " + _gate(scope, ip, seq.stages[i]))
    body = []
    for i, (reg, gap) in enumerate(regs):
        src = f"({match[i]})"
        shifted = src if gap == 1 else f"{{{reg}[{gap - 2}:0], {src}}}"
        body.append(f"        {reg} <= {shifted};")
    body += [f"        if ({match[-1]}) begin", f"            {flag} <= 1'b1;", "        end"]
    states = tuple(["idle"] + [f"stage{i}" for i in range(1, len(seq.stages))] + ["done"])
    transitions = tuple((states[i], states[i + 1], stage) for i, stage in enumerate(seq.stages))
    plan = FsmPlan(flag, max(1, sum(seq.gaps)), states, transitions, 0, "sequence",
                   ((flag, 1), *regs))
    text = [f"always_ff {clocked_sensitivity(cfg)} begin : fsm_{prefix}",
            f"    if ({reset_condition(cfg)}) begin",
            f"        {flag} <= 1'b0;"]
    text += [f"        {reg} <= '0;" for reg, _ in regs]
    text += ["    end else begin", *body, "    end", "end"]
    return plan, text


def create_fsm(rp, cfg: SocConfig, scope=CENTRAL, ids=None):
    """Clocked state for one FSM policy: ``(plans, text lines, flags by IP id)``."""
    plans, text, flags = [], [], {}
    build = _counter if rp.fsm_kind == "counter" else _sequence
    for ip_id in ids or rp.binding.ids:
        plan, lines = build(rp, cfg.ip_by_id(ip_id), cfg, scope)
        plans.append(plan)
        if text:
            text.append("")
        text += lines
        flags[ip_id] = plan.flag_register_name
    return plans, text, flags


# -- assembly ------------------------------------------------------------------


def _indent(lines, level=1) -> list[str]:
    return [(INDENT * level + line) if line else "" for line in lines]


def render_module(mod: ModuleDef, master_block: list[str], slave_block: list[str],
                  header: str) -> str:
    out = [header, f"module {mod.name} ("]
    starts = {idx: comment for comment, idx in mod.groups}
    for i, port in enumerate(mod.ports):
        if i in starts:
            out.append(f"    // {starts[i]}")
        sep = "," if i < len(mod.ports) - 1 else ""
        out.append(f"    {port.direction:<6} {logic_type(port.width):<13} {port.name}{sep}")
    out.append(");")
    if mod.decls:
        out.append("")
        out += _indent(mod.decls)
    for block in mod.fsm_blocks:
        out.append("")
        out += _indent(block)
    for label, body in (("master_block", master_block), ("slave_block", slave_block)):
        out.append("")
        out.append(f"{INDENT}always_comb begin : {label}")
        out += _indent(body, 2)
        out.append(f"{INDENT}end")
    out.append("")
    out.append("endmodule")
    return "\n".join(out) + "\n"


def build_central(resolved_in_order, cfg: SocConfig, header: str):
    """Central module text plus the FSM plans, for bus-level synthesizable policies.

    ``resolved_in_order`` must already be in emission order.
    """
    mod, master_block, slave_block = create_security_policy_module(cfg)
    plans = {}
    for rp in resolved_in_order:
        flags = None
        if rp.cls.needs_fsm:
            fsm_plans, text, flags = create_fsm(rp, cfg)
            plans[rp.name] = fsm_plans
            for plan in fsm_plans:
                mod.decls += [f"{logic_type(w)} {name};" for name, w in plan.registers]
            mod.fsm_blocks.append(text)
        block = master_block if rp.binding.m_flag else slave_block
        block += create_cond(rp, cfg, flags)
    return render_module(mod, master_block, slave_block, header), plans

