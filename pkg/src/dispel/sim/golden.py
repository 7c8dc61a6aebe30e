"""Reference semantics: policies applied straight to bus transactions.

Nothing here looks at generated SystemVerilog; the predicate trees are
evaluated directly.  The timing model matches the emitted hardware:

* every transaction is one clock cycle; combinational enforcement sees the
  FSM flags as they were at the start of that cycle, and FSMs advance at its
  end, so a flag set by a transaction is visible from the next one;
* cycle-number gaps between transactions are idle cycles in which no IP is
  selected, every bus input is zero and the mode register keeps its value;
* each side of the transfer is enforced separately and the two results are
  then composed: a master-to-slave signal takes the slave side's value if
  that side changed it, a slave-to-master signal the master side's value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import UnknownSignal
from ..policy.ast import (And, Assignments, BoolConst, Compare, Const, Not, Or, Popcount,
                          Reject, Sequence, Signal, Xor, signals)
from ..policy.classify import Level
from ..policy.resolve import emission_order
from ..signals import CHANNELS, channel_of, is_mode
from ..soc import BusProtocol, SocConfig
from .transaction import TX_CHANNELS, Transaction, check_order

_OPS = {
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class DiffEntry:
    signal: str
    original: int
    enforced: int
    policy: str


@dataclass
class TraceDiff:
    index: int
    entries: list[DiffEntry] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def to_dict(self) -> dict:
        return {"index": self.index,
                "entries": [{"signal": e.signal, "original": f"{e.original:#x}",
                             "enforced": f"{e.enforced:#x}", "policy": e.policy}
                            for e in self.entries]}


# -- expression evaluation -----------------------------------------------------


def _check_signals(rp, index: int):
    for sig in signals(rp.residual):
        if is_mode(sig.name) and sig.qualifier is None:
            continue
        if sig.qualifier is not None or channel_of(sig.name) not in TX_CHANNELS:
            raise UnknownSignal(sig.name, rp.name, index)


def _term(node, view: dict, mode: int) -> int:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Signal):
        value = mode if is_mode(node.name) else view[channel_of(node.name)]
        if node.msb is None:
            return value
        lsb = node.msb if node.lsb is None else node.lsb
        return (value >> lsb) & ((1 << (node.msb - lsb + 1)) - 1)
    if isinstance(node, Popcount):
        return bin(_term(node.arg, view, mode)).count("1")
    if isinstance(node, Xor):
        out = 0
        for op in node.operands:
            out ^= _term(op, view, mode)
        return out
    raise TypeError(f"not a term: {node!r}")


def evaluate(node, view: dict, mode: int) -> bool:
    """Truth of a selector-free, non-temporal predicate on one IP's signals."""
    if isinstance(node, BoolConst):
        return node.value
    if isinstance(node, Compare):
        return _OPS[node.op](_term(node.left, view, mode), _term(node.right, view, mode))
    if isinstance(node, Not):
        return not evaluate(node.operand, view, mode)
    if isinstance(node, And):
        return all(evaluate(c, view, mode) for c in node.operands)
    if isinstance(node, Or):
        return any(evaluate(c, view, mode) for c in node.operands)
    raise TypeError(f"cannot evaluate {node!r}")


# -- FSM state -----------------------------------------------------------------


@dataclass
class CounterState:
    threshold: int
    count: int = 0
    flag: bool = False

    def step(self, fire: bool):
        if fire:
            if self.count >= self.threshold:
                self.flag = True
            else:
                self.count += 1

    def skip(self, n: int, fire: bool):
        """``n`` cycles with the same input, in constant time."""
        if not fire or n <= 0:
            return
        if n > self.threshold - self.count:
            self.flag = True
        self.count = min(self.threshold, self.count + n)


@dataclass
class SequenceState:
    gaps: tuple
    regs: list = None        # regs[i][j]: stage i matched j+1 cycles ago
    flag: bool = False

    def __post_init__(self):
        if self.regs is None:
            self.regs = [[False] * g for g in self.gaps]

    def matches(self, truths: list[bool]) -> list[bool]:
        out = [truths[0]]
        for i, reg in enumerate(self.regs, start=1):
            out.append(reg[-1] and truths[i])
        return out

    def step(self, truths: list[bool]):
        m = self.matches(truths)
        self.regs = [[m[i]] + reg[:-1] for i, reg in enumerate(self.regs)]
        if m[-1]:
            self.flag = True

    def skip(self, n: int, truths: list[bool]):
        # identical inputs saturate every shift register within sum(gaps) cycles
        for _ in range(min(n, sum(self.gaps) + 1)):
            self.step(truths)


@dataclass
class SimState:
    fsms: dict = field(default_factory=dict)     # (policy name, ip id) -> state
    cycle: int | None = None
    mode: int = 0
    index: int = 0


def new_state() -> SimState:
    return SimState()


# -- enforcement ---------------------------------------------------------------


def simulated(policies) -> list:
    """Policies with hardware behaviour, in emission order."""
    return [rp for rp in emission_order(policies) if rp.cls.synthesizable]


def _reject_targets(rp, protocol: BusProtocol) -> list[str]:
    paths = {CHANNELS[channel_of(s.name)].path for s in signals(rp.residual)
             if s.qualifier is None and channel_of(s.name) is not None}
    paths = {"read" if p == "read" else "write" for p in paths}
    if len(paths) != 1:
        paths = {"write", "read"}
    out = []
    if "write" in paths:
        out += ["w_data"] if protocol is BusProtocol.WISHBONE else ["w_data", "w_valid"]
    if "read" in paths:
        out += ["r_data"] if protocol is BusProtocol.WISHBONE else ["r_data", "r_valid"]
    return out


def _assignments(rp, protocol: BusProtocol) -> list[tuple[str, int]]:
    if isinstance(rp.action, Reject):
        return [(ch, 0) for ch in _reject_targets(rp, protocol)]
    assert isinstance(rp.action, Assignments)
    return [(channel_of(sig.name), val.value) for sig, val in rp.action.items]


def _party(rp, ip_id: int, tx: Transaction | None) -> bool:
    if tx is None:
        return False
    return ip_id == (tx.master_id if rp.binding.m_flag else tx.slave_id)


def _view(rp, ip_id: int, tx: Transaction | None) -> dict:
    if _party(rp, ip_id, tx):
        return {ch: tx.get(ch) for ch in TX_CHANNELS}
    return dict.fromkeys(TX_CHANNELS, 0)


def _fsm(rp, ip_id: int, state: SimState):
    key = (rp.name, ip_id)
    if key not in state.fsms:
        if rp.fsm_kind == "counter":
            state.fsms[key] = CounterState(rp.bound.threshold)
        else:
            state.fsms[key] = SequenceState(tuple(rp.residual.gaps))
    return state.fsms[key]


def _stage_truths(rp, ip_id: int, tx, mode: int) -> list[bool]:
    # wrappers have no select line, so IP-level FSMs also run in idle cycles
    active = rp.cls.level is Level.IP or _party(rp, ip_id, tx)
    view = _view(rp, ip_id, tx)
    stages = rp.residual.stages if isinstance(rp.residual, Sequence) else (rp.residual,)
    return [active and evaluate(s, view, mode) for s in stages]


def _clock(policies, state: SimState, tx: Transaction | None, n: int = 1):
    """Advance every FSM by ``n`` cycles with ``tx`` on the bus (None when idle)."""
    for rp in policies:
        if not rp.cls.needs_fsm:
            continue
        for ip_id in rp.binding.ids:
            fsm = _fsm(rp, ip_id, state)
            truths = _stage_truths(rp, ip_id, tx, state.mode)
            fsm.skip(n, truths[0] if isinstance(fsm, CounterState) else truths)


def _fires(rp, ip_id: int, tx: Transaction, state: SimState) -> bool:
    if rp.mode is not None and tx.mode != rp.mode:
        return False
    if rp.cls.needs_fsm:
        return _fsm(rp, ip_id, state).flag
    return evaluate(rp.residual, _view(rp, ip_id, tx), tx.mode)


def apply_policies(tx: Transaction, policies, cfg: SocConfig, state: SimState,
                   index: int | None = None):
    """Enforce ``policies`` on one transaction: ``(enforced tx, TraceDiff)``."""
    index = state.index if index is None else index
    active = simulated(policies)
    for rp in active:
        _check_signals(rp, index)

    if state.cycle is not None:
        idle = tx.cycle - state.cycle - 1
        if idle > 0:
            _clock(active, state, None, idle)

    original = {ch: tx.get(ch) for ch in TX_CHANNELS}
    sides = {"master": dict(original), "slave": dict(original)}
    fired = []      # (policy name, channels assigned)
    for rp in active:
        ip_id = tx.master_id if rp.binding.m_flag else tx.slave_id
        if ip_id not in rp.binding.ids or not _fires(rp, ip_id, tx, state):
            continue
        side = sides[rp.binding.side]
        pairs = [(ch, v) for ch, v in _assignments(rp, cfg.bus_protocol) if ch in TX_CHANNELS]
        for ch, value in pairs:
            side[ch] = value & ((1 << TX_CHANNELS[ch]) - 1)
        fired.append((rp.name, [ch for ch, _ in pairs]))

    final = {}
    for ch in TX_CHANNELS:
        first, second = ("slave", "master") if CHANNELS[ch].forward else ("master", "slave")
        final[ch] = sides[first][ch] if sides[first][ch] != original[ch] else sides[second][ch]
    diff = TraceDiff(index, [DiffEntry(ch, original[ch], final[ch], name)
                             for name, chans in fired for ch in chans])

    state.mode = tx.mode
    _clock(active, state, tx)
    state.cycle = tx.cycle
    state.index = index + 1
    return tx.with_channels(final), diff


def run_trace(trace, policies, cfg: SocConfig):
    """Fold ``apply_policies`` over a trace with one persistent state."""
    check_order(trace)
    state = new_state()
    enforced, diffs = [], []
    for i, tx in enumerate(trace):
        out, diff = apply_policies(tx, policies, cfg, state, i)
        enforced.append(out)
        diffs.append(diff)
    return enforced, diffs
