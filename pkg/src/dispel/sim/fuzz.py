"""Random grammar-valid policy sets for differential fuzzing.

Policies are produced as source text and go through the real front end, so
the fuzzer exercises parsing, keyword translation and binding as well.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from ..errors import PolicyError
from ..policy.parser import policies_from_dict
from ..policy.resolve import resolve_all
from ..soc import BusProtocol, SocConfig
from .diffcheck import checked_policies, differential_check

# (spelling, width) of the signals a generated predicate may read
_AXI_READS = [("write_address", 32), ("read address", 32), ("aw_addr", 32), ("raddress", 32),
              ("wdata", 32), ("read_data", 32), ("strobe", 4), ("S_AXI_WVALID", 1),
              ("aw_valid", 1), ("ar_valid", 1), ("rvalid", 1)]
_WB_READS = [("write_address", 32), ("read_address", 32), ("wb_dat_o", 32), ("rdata", 32),
             ("wb_stb_i", 4)]
_AXI_WRITES = [("w_data", 32), ("write_valid", 1), ("rdata", 32), ("r_valid", 1),
               ("wstrb", 4), ("aw_addr", 32), ("ar_valid", 1)]
_WB_WRITES = [("wdata", 32), ("rdata", 32), ("strobe", 4), ("wb_adr_o", 32)]
_RELS = ["=", "!=", "<", "<=", ">", ">="]


@dataclass
class PolicyGen:
    rng: random.Random
    cfg: SocConfig

    def _reads(self):
        return _AXI_READS if self.cfg.bus_protocol is BusProtocol.AXI4 else _WB_READS

    def _literal(self, width: int, near: int | None = None) -> str:
        r = self.rng
        if near is not None and r.random() < 0.7:
            value = (near + r.randint(-4, 4)) % (1 << width)
        elif width == 1:
            value = r.randint(0, 1)
        else:
            value = r.getrandbits(width) if r.random() < 0.5 else r.randint(0, 16)
        return f"0x{value:x}" if r.random() < 0.6 else str(value)

    def _addr_near(self) -> int:
        slaves = [ip for ip in self.cfg.slaves if ip.addr_start is not None]
        if not slaves or self.rng.random() < 0.3:
            return self.rng.getrandbits(32)
        ip = self.rng.choice(slaves)
        return self.rng.choice([ip.addr_start, ip.addr_end, ip.addr_start + 0x10])

    def comparison(self) -> str:
        r = self.rng
        name, width = r.choice(self._reads())
        kind = r.random()
        if kind < 0.15 and width == 32:
            hi = r.randint(0, 31)
            lo = r.randint(0, hi)
            return f"{name}[{hi}:{lo}] {r.choice(_RELS)} {self._literal(hi - lo + 1)}"
        if kind < 0.25 and width == 32:
            return f"{name}[{r.randint(0, 31)}] = {r.randint(0, 1)}"
        if kind < 0.35 and width >= 4:
            mask = self._literal(width)
            return f"countones({name} ^ {mask}) {r.choice(_RELS)} {r.randint(0, width)}"
        near = self._addr_near() if "addr" in name.lower() else None
        return f"{name} {r.choice(_RELS)} {self._literal(width, near)}"

    def condition(self, depth: int = 0) -> str:
        r = self.rng
        roll = r.random()
        if depth >= 2 or roll < 0.5:
            return self.comparison()
        if roll < 0.75:
            return f"({self.condition(depth + 1)} and {self.condition(depth + 1)})"
        if roll < 0.92:
            return f"({self.condition(depth + 1)} or {self.condition(depth + 1)})"
        return f"not ({self.condition(depth + 1)})"

    def range_on_slave(self) -> str:
        slaves = [ip for ip in self.cfg.slaves if ip.addr_start is not None]
        ip = self.rng.choice(slaves)
        lo = ip.addr_start + self.rng.randint(0, 0x20)
        hi = lo + self.rng.randint(0, 0x40)
        sig = self.rng.choice(["write_address", "read_address"])
        return f"{sig} >= 0x{lo:08x} and {sig} <= 0x{hi:08x}"

    def selector(self) -> str:
        r = self.rng
        if r.random() < 0.25:
            return f"master_no = {r.choice(self.cfg.masters).id}"
        ids = sorted({ip.id for ip in r.sample(self.cfg.slaves, k=min(len(self.cfg.slaves),
                                                                      r.randint(1, 2)))})
        return "slave_no = " + " or ".join(str(i) for i in ids)

    def predicate(self) -> tuple[str, str | None]:
        """Predicate source and, for counter policies, the timing."""
        r = self.rng
        roll = r.random()
        if roll < 0.15:
            stages = [f"({self.selector()}), ({self.condition(1)})"]
            for _ in range(r.randint(1, 2)):
                gap = r.choice(["", f" after {r.randint(1, 3)} cycles"])
                stages.append(f"({self.condition(1)}){gap}")
            return " then ".join(stages), None
        if roll < 0.3:
            rel = r.choice([">", ">="])
            count = r.randint(1, 4)
            if r.random() < 0.5:
                return f"({self.selector()}), (clock_cycles {rel} {count})", None
            return f"({self.selector()}), ({self.condition(1)})", f"clock_cycles {rel} {count}"
        if roll < 0.45:
            return self.range_on_slave(), None
        parts = [self.condition()]
        if r.random() < 0.8:
            parts.insert(0, f"({self.selector()})")
        else:
            parts.append("w_data != 0x1" if self.cfg.bus_protocol is BusProtocol.AXI4
                         else "wdata != 0x1")
        return ", ".join(parts), None

    def action(self) -> str:
        r = self.rng
        if r.random() < 0.4:
            return "reject"
        writes = _AXI_WRITES if self.cfg.bus_protocol is BusProtocol.AXI4 else _WB_WRITES
        chosen = r.sample(writes, k=r.randint(1, 2))
        return ", ".join(f"{name} = {self._literal(w)}" for name, w in chosen)

    def policy(self) -> dict:
        pred, timing = self.predicate()
        if timing is None and self.rng.random() < 0.6:
            timing = f"mode = {self.rng.randint(0, 2)}"
        body = {"predicate": pred, "action": self.action(),
                "bits_protected": self.rng.choice([1, 8, 32, 128]),
                "attack_types": self.rng.sample(["C", "I", "A"], k=self.rng.randint(1, 3))}
        if timing is not None:
            body["timing"] = timing
        return body

    def policy_set(self, max_size: int = 5) -> dict:
        return {f"fz{i}": self.policy() for i in range(self.rng.randint(0, max_size))}


@dataclass(frozen=True)
class FuzzReport:
    sets: int
    trials: int
    policies: int
    rejected: int          # generated policies the front end refused
    seconds: float


def fuzz_differential(cfg: SocConfig, sets: int, per_set: int, seed: int = 0) -> FuzzReport:
    """``sets`` random policy sets, ``per_set`` transactions each, both semantics."""
    rng = random.Random(seed)
    gen = PolicyGen(rng, cfg)
    start = time.perf_counter()
    total = rejected = 0
    for _ in range(sets):
        doc = gen.policy_set()
        try:
            policies = policies_from_dict(doc)
        except PolicyError:
            rejected += len(doc)
            continue
        resolved, errors = resolve_all(policies, cfg)
        rejected += len(errors)
        total += len(checked_policies(resolved))
        differential_check(resolved, cfg, per_set, seed=rng.getrandbits(32))
    return FuzzReport(sets, sets * per_set, total, rejected, time.perf_counter() - start)
