"""Differential check: direct interpreter against the emitted central module."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..codegen.pipeline import generate
from ..errors import DivergenceFound
from ..policy.ast import Compare, Const, walk
from ..policy.classify import Level
from ..soc import ADDR_MASK, SocConfig
from .golden import apply_policies, new_state
from .reinterp import EmittedSim, parse_emitted
from .transaction import TX_CHANNELS, Transaction

CYCLE_STEPS = (0, 1, 1, 1, 1, 2, 3, 7)


@dataclass(frozen=True)
class DiffReport:
    trials: int
    policies: int
    seed: int


def checked_policies(resolved) -> list:
    """The policies both semantics model: synthesizable bus-level ones."""
    return [rp for rp in resolved if rp.cls.level is Level.BUS and rp.cls.synthesizable]


def interesting_values(resolved, cfg: SocConfig) -> list[int]:
    """Literals from the predicates and slave ranges, each with its neighbours."""
    seeds = {0, ADDR_MASK}
    for rp in resolved:
        for node in walk(rp.residual):
            if isinstance(node, Compare):
                for side in (node.left, node.right):
                    if isinstance(side, Const):
                        seeds.add(side.value)
    for ip in cfg.slaves:
        for addr in (ip.addr_start, ip.addr_end):
            if addr is not None:
                seeds.add(addr)
    out = set()
    for v in seeds:
        out.update({v - 1, v, v + 1})
    return sorted(v & ADDR_MASK for v in out if v >= 0)


class TransactionGen:
    """Seeded transactions, half of the numeric fields drawn from boundary values."""

    def __init__(self, rng: random.Random, cfg: SocConfig, boundary: list[int],
                 modes: list[int]):
        self.rng = rng
        self.masters = [ip.id for ip in cfg.masters]
        self.slaves = [ip.id for ip in cfg.slaves]
        self.boundary = boundary or [0]
        self.modes = sorted(set(modes) | {0, 1})
        self.cycle = 0

    def _word(self, bits: int) -> int:
        r = self.rng
        if r.random() < 0.5:
            return r.choice(self.boundary) & ((1 << bits) - 1)
        return r.getrandbits(bits)

    def __call__(self) -> Transaction:
        r = self.rng
        self.cycle += r.choice(CYCLE_STEPS)
        mode = r.choice(self.modes) if r.random() < 0.8 else r.getrandbits(32)
        return Transaction(
            cycle=self.cycle, master_id=r.choice(self.masters), slave_id=r.choice(self.slaves),
            aw_addr=self._word(32), ar_addr=self._word(32),
            aw_valid=r.random() < 0.5, ar_valid=r.random() < 0.5,
            w_valid=r.random() < 0.5, r_valid=r.random() < 0.5,
            w_data=self._word(32), r_data=self._word(32), w_strb=self._word(4), mode=mode)


def compare(golden: Transaction, emitted: Transaction, trial: int):
    for ch in TX_CHANNELS:
        g, e = golden.get(ch), emitted.get(ch)
        if g != e:
            raise DivergenceFound(golden, ch, g, e, trial)


def differential_check(resolved, cfg: SocConfig, trials: int, seed: int = 0,
                       mutate=None, wrapper_dir=None) -> DiffReport:
    """Run ``trials`` seeded transactions through both semantics as one trace.

    ``mutate`` may rewrite the emitted central module text before it is
    interpreted (used for mutation testing).  Raises ``DivergenceFound`` on
    the first disagreement.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    policies = checked_policies(resolved)
    text = generate(policies, cfg, wrapper_dir).central_module
    if mutate is not None:
        text = mutate(text)
    emitted = EmittedSim(parse_emitted(text), cfg)
    rng = random.Random(seed)
    modes = [rp.mode for rp in policies if rp.mode is not None]
    gen = TransactionGen(rng, cfg, interesting_values(policies, cfg), modes)
    state = new_state()
    for trial in range(trials):
        tx = gen()
        golden, _ = apply_policies(tx, policies, cfg, state, trial)
        compare(golden, emitted.step(tx), trial)
    return DiffReport(trials, len(policies), seed)
