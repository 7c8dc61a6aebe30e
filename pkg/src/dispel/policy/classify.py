"""Policy classification, keyword translation and target binding."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import AmbiguousTarget, NoEquivalentSignal, PolicyError, UnresolvableTarget
from ..signals import (ADDRESS_CHANNELS, CHANNELS, MODE_SIGNAL, channel_of, is_mode,
                       protocol_signal)
from ..soc import BusProtocol, SocConfig, lookup_ip_by_address
from .ast import (Assignments, Compare, Const, CycleBound, Selector, Sequence, Signal,
                  Temporal, conjoin, conjuncts, signals, transform, walk)
from .parser import parse_timing


class Level(str, Enum):
    BUS = "Bus"
    IP = "IP"


@dataclass(frozen=True)
class PolicyClass:
    level: Level
    synthesizable: bool
    needs_fsm: bool

    def __post_init__(self):
        if self.needs_fsm and not self.synthesizable:
            raise ValueError("needs_fsm implies synthesizable")


@dataclass(frozen=True)
class TargetBinding:
    """IPs a policy is enforced on.

    ``ids`` holds more than one entry for set selectors (``slave_no = 4 or 5``)
    and for the all-masters fallback; every id shares the same side.
    """
    ids: tuple[int, ...]
    m_flag: bool
    s_flag: bool

    def __post_init__(self):
        if not self.ids:
            raise ValueError("a binding needs at least one IP id")
        if self.m_flag == self.s_flag:
            raise ValueError("exactly one of m_flag and s_flag must be set")

    @property
    def id(self) -> int:
        return self.ids[0]

    @property
    def side(self) -> str:
        return "master" if self.m_flag else "slave"


# -- predicates over the AST ---------------------------------------------------


def is_syn(p) -> bool:
    """Syntactic synthesizability: no temporal operator anywhere in the tree."""
    return not any(isinstance(n, Temporal) for n in walk(p))


def is_sequential(p) -> bool:
    return isinstance(p, Sequence) and len(p.stages) >= 2


def is_clock_cycles(p, t=None) -> bool:
    if isinstance(t, CycleBound):
        return True
    return any(isinstance(n, Selector) and n.kind == "clock_cycles" for n in walk(p))


def is_internal(sig: Signal) -> bool:
    """True for IP-internal signals: qualified names or names off the bus."""
    if sig.qualifier is not None:
        return True
    return channel_of(sig.name) is None and not is_mode(sig.name)


def internal_signals(p) -> list[Signal]:
    return [s for s in signals(p) if is_internal(s)]


# -- selectors -----------------------------------------------------------------


def _stages(p) -> tuple:
    return p.stages if isinstance(p, Sequence) else (p,)


def split_selectors(p):
    """Separate top-level selector conjuncts from the rest of the predicate.

    Returns ``(selectors, residual)``.  Selectors may only appear as top-level
    conjuncts (of the predicate or of a sequence stage); anywhere else the
    set of targeted IPs would depend on signal values.
    """
    selectors = []
    residual_stages = []
    for stage in _stages(p):
        rest = []
        for c in conjuncts(stage):
            if isinstance(c, Selector):
                selectors.append(c)
            else:
                if any(isinstance(n, Selector) for n in walk(c)):
                    raise AmbiguousTarget(
                        "selectors must be top-level conjuncts, not nested under or/not")
                rest.append(c)
        residual_stages.append(conjoin(rest))
    if isinstance(p, Sequence):
        return selectors, Sequence(tuple(residual_stages), p.gaps)
    return selectors, residual_stages[0]


def cycle_bound(p, t) -> CycleBound | None:
    """The single cycle bound of a policy, from its predicate or its timing."""
    sels = [s for s in split_selectors(p)[0] if s.kind == "clock_cycles"]
    if len(sels) > 1:
        raise PolicyError("at most one clock_cycles selector is allowed")
    if sels and isinstance(t, CycleBound):
        raise PolicyError("clock_cycles given in both predicate and timing")
    if sels and isinstance(p, Sequence):
        raise PolicyError("clock_cycles cannot be combined with a sequence")
    if sels:
        return CycleBound(sels[0].op, sels[0].values[0])
    if isinstance(t, CycleBound):
        if isinstance(p, Sequence):
            raise PolicyError("a cycle bound cannot be combined with a sequence")
        return t
    return None


# -- keyword translation -------------------------------------------------------


def _translate(sig: Signal, protocol: BusProtocol) -> Signal:
    if sig.qualifier is not None:
        return sig
    if is_mode(sig.name):
        return sig.renamed(MODE_SIGNAL)
    if channel_of(sig.name) is None:
        return sig
    name = protocol_signal(sig.name, protocol)
    if name is None:
        raise NoEquivalentSignal(sig.name, protocol.value)
    return sig.renamed(name)


def replace_keywords(p, protocol: BusProtocol):
    """Rewrite every bus keyword or bus signal name to the protocol's spelling."""
    return transform(p, lambda n: _translate(n, protocol) if isinstance(n, Signal) else n)


def replace_action_keywords(a, protocol: BusProtocol):
    if not isinstance(a, Assignments):
        return a
    return Assignments(tuple((_translate(sig, protocol), val) for sig, val in a.items))


# -- classification ------------------------------------------------------------


def classify_policy(pol, ast, cfg: SocConfig, timing=None) -> PolicyClass:
    """Decide level, synthesizability and FSM need for one policy.

    ``pol`` supplies the optional explicit ``level`` and ``synthesizable``
    overrides; ``timing`` is the parsed timing (the policy's own when omitted).
    """
    if timing is None:
        timing = parse_timing(pol.timing_src)
    internal = internal_signals(ast)
    if pol.level == "bus" and internal:
        raise PolicyError(f"bus-level policy references IP-internal signal {internal[0].name!r}")
    level = Level.IP if pol.level == "ip" or internal else Level.BUS
    syn = is_syn(ast)
    if pol.synthesizable is True and not syn:
        raise PolicyError("policy uses temporal operators and cannot be synthesized")
    if pol.synthesizable is False:
        syn = False
    bound = cycle_bound(ast, timing)
    if not syn and bound is not None:
        raise PolicyError("cycle bounds are only supported on synthesizable policies")
    needs_fsm = syn and (is_sequential(ast) or bound is not None)
    if level is Level.IP:
        extract_id_flag(ast, cfg, level)
    return PolicyClass(level, syn, needs_fsm)


# -- target resolution ---------------------------------------------------------


def _address_literals(p) -> list[int]:
    out = []
    for n in walk(p):
        if not isinstance(n, Compare):
            continue
        for sig, lit in ((n.left, n.right), (n.right, n.left)):
            if (isinstance(sig, Signal) and sig.msb is None and sig.qualifier is None
                    and channel_of(sig.name) in ADDRESS_CHANNELS and isinstance(lit, Const)):
                out.append(lit.value)
    return out


def _touches_write_channel(p) -> bool:
    for sig in signals(p):
        ch = channel_of(sig.name) if sig.qualifier is None else None
        if ch is not None and CHANNELS[ch].path == "write":
            return True
    return False


def extract_id_flag(p, cfg: SocConfig, level: Level = Level.BUS) -> TargetBinding:
    """Resolve the IP(s) a policy is enforced on.

    Selectors win, then IP-name qualifiers (``aes.ct``), then address
    literals looked up in the slave map.  A bus-level predicate over the
    write channel that resolves to no slave binds to every master.
    """
    sels = [s for s in split_selectors(p)[0] if s.kind != "clock_cycles"]
    if sels:
        if len({s.kind for s in sels}) > 1:
            raise AmbiguousTarget("both slave_no and master_no selectors given")
        if len({frozenset(s.values) for s in sels}) > 1:
            raise AmbiguousTarget("conflicting " + sels[0].kind + " selectors: "
                                  + " vs ".join(str(sorted(s.values)) for s in sels))
        kind = sels[0].kind
        ids = sorted(set(sels[0].values))
        for i in ids:
            ip = cfg.ip_by_id(i)
            if ip is None or ip.is_master != (kind == "master_no"):
                side = "master" if kind == "master_no" else "slave"
                raise UnresolvableTarget(f"{kind} = {i} names no {side} in the SoC config")
        return TargetBinding(tuple(ids), kind == "master_no", kind == "slave_no")

    quals = sorted({s.qualifier for s in signals(p) if s.qualifier is not None})
    if quals:
        ips = []
        for q in quals:
            ip = cfg.ip_by_name(q)
            if ip is None:
                raise UnresolvableTarget(f"signal qualifier {q!r} names no IP in the SoC config")
            ips.append(ip)
        if len(ips) > 1:
            raise AmbiguousTarget("signals of several IPs referenced: " + ", ".join(quals))
        return TargetBinding((ips[0].id,), ips[0].is_master, ips[0].is_slave)

    hits = {}
    for addr in _address_literals(p):
        ip = lookup_ip_by_address(cfg, addr)
        if ip is not None:
            hits[ip.id] = ip
    if len(hits) > 1:
        raise AmbiguousTarget("address literals fall in several slaves: "
                              + ", ".join(ip.name for ip in hits.values()))
    if hits:
        (ip_id,) = hits
        return TargetBinding((ip_id,), False, True)
    if level is Level.BUS and _touches_write_channel(p):
        return TargetBinding(tuple(ip.id for ip in cfg.masters), True, False)
    what = "IP-level policy names no known IP" if level is Level.IP else \
        "no selector, IP qualifier or in-range address identifies a target IP"
    raise UnresolvableTarget(what)

