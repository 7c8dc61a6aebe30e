"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``ACCEPTANCE <n> PASS|FAIL: ...`` line before
asserting; the lines are repeated in the terminal summary of every run.
"""

import json
import math
import random
import re
import time

import pytest

from dispel.cli import main
from dispel.codegen.pipeline import generate
from dispel.constraints import ConstraintSpec, MockEstimator, enforce_constraints
from dispel.errors import ConstraintsUnsatisfiable, DivergenceFound, NoEquivalentSignal
from dispel.policy.classify import Level, replace_keywords
from dispel.policy.parser import parse_predicate
from dispel.sim.diffcheck import TransactionGen, differential_check, interesting_values
from dispel.sim.fuzz import fuzz_differential
from dispel.sim.golden import apply_policies, new_state, run_trace
from dispel.sim.reinterp import EmittedSim, parse_emitted
from dispel.sim.transaction import Transaction
from dispel.soc import BusProtocol

from conftest import (ACCEPTANCE_LINES, DATA, SCENARIO_BOUNDS, SCENARIO_MOCK, load_cfg,
                      resolve_doc, resolve_file, scenario_doc)
from wellformed import balance_errors


def report(n, ok, detail):
    line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_1_scores(capsys):
    start = time.perf_counter()
    rc = main(["score", "--policies", str(DATA / "policies_scored.json"),
               "--soc", str(DATA / "soc_scored.json"), "--json"])
    elapsed = time.perf_counter() - start
    records = json.loads(capsys.readouterr().out)
    got = [r["score"] for r in records]
    expected = [19.2, 7.68, 0.96, 0.16]
    ok = (rc == 0 and len(got) == 4 and elapsed < 1.0
          and all(abs(g - e) <= 1e-9 for g, e in zip(got, expected)))
    report(1, ok, f"scores {got} in {elapsed:.3f}s")
    assert ok


def test_criterion_2_range_policy_codegen(cfg_2ip):
    text = generate(resolve_file("policy_range.json", cfg_2ip), cfg_2ip).central_module
    golden = (DATA / "golden" / "range_central.sv").read_text()
    cond = ("if ((mor1kx_aw_addr_in >= 32'h0001dfa4) && (mor1kx_aw_addr_in <= 32'h0001ffac)"
            " && (reg_mode == 32'h0)) begin")
    ok = text == golden and cond in text and "mor1kx_w_data_out = 32'h0;" in text
    report(2, ok, "central module matches golden conditional block")
    assert ok


# hand transcription of the keyword table; None marks a cell with no equivalent
KEYWORDS = [
    ("read_address", "S_AXI_ARADDR", "wb_adr_i"),
    ("write_address", "S_AXI_AWADDR", "wb_adr_o"),
    ("read_data", "S_AXI_RDATA", "wb_dat_i"),
    ("write_data", "S_AXI_WDATA", "wb_dat_o"),
    ("strobe", "S_AXI_WSTRB", "wb_stb_i"),
    ("write_ready", "S_AXI_WREADY", None),
    ("read_ready", "S_AXI_RREADY", None),
    ("address_ready", "S_AXI_AWREADY", None),
    ("address_valid", "S_AXI_AWVALID", None),
    ("write_valid", "S_AXI_WVALID", None),
    ("read_valid", "S_AXI_RVALID", None),
]


def _lookup(keyword, proto):
    try:
        return replace_keywords(parse_predicate(f"{keyword} = 1"), proto).left.name
    except NoEquivalentSignal:
        return None


def test_criterion_3_keyword_replacement():
    cases = [(kw, proto, cell) for kw, axi, wb in KEYWORDS
             for proto, cell in ((BusProtocol.AXI4, axi), (BusProtocol.WISHBONE, wb))]
    bad = [(kw, proto.value) for kw, proto, cell in cases if _lookup(kw, proto) != cell]
    ok = len(cases) == 22 and not bad
    report(3, ok, f"{len(cases) - len(bad)}/{len(cases)} keyword cases")
    assert ok


def test_criterion_4_range_enforcement(cfg_2ip):
    policies = resolve_file("policy_range.json", cfg_2ip)

    def write(addr):
        tx = Transaction(cycle=0, master_id=0, slave_id=1, aw_addr=addr, aw_valid=True,
                         w_data=0xDEADBEEF, w_valid=True, mode=0)
        return apply_policies(tx, policies, cfg_2ip, new_state())[0]

    inside = write(0x0001DFA8)
    below, above = write(0x0001DFA3), write(0x0001FFAD)
    ok = (inside.w_data == 0 and inside.w_valid is False
          and below.w_data == 0xDEADBEEF and below.w_valid
          and above.w_data == 0xDEADBEEF and above.w_valid)
    report(4, ok, "0x0001dfa8 rejected; 0x0001dfa3 and 0x0001ffad pass")
    assert ok


def test_criterion_5_cep_policy_set(cfg_cep, tmp_path):
    policies = resolve_file("policies_cep.json", cfg_cep)
    compiled = main(["compile", "--policies", str(DATA / "policies_cep.json"),
                     "--soc", str(DATA / "soc_cep.json"), "--out", str(tmp_path / "out")]) == 0
    cls = {rp.name: (rp.cls.level, rp.cls.needs_fsm) for rp in policies}
    cls_ok = cls == {"Policy#1": (Level.BUS, False), "Policy#2": (Level.BUS, False),
                     "Policy#3": (Level.BUS, False), "Policy#4": (Level.BUS, True)}

    writes = [Transaction(cycle=i, master_id=0, slave_id=ip.id, aw_addr=0x93000020,
                          aw_valid=True, w_data=0x1234, w_valid=True)
              for i, ip in enumerate(cfg_cep.slaves)]
    enforced, _ = run_trace(writes, policies, cfg_cep)
    blocked = {tx.slave_id for tx, out in zip(writes, enforced) if out.w_data != tx.w_data}

    reads = [Transaction(cycle=i, master_id=0, slave_id=2, r_data=0xFF, r_valid=True)
             for i in range(1100)]
    enforced, _ = run_trace(reads, policies, cfg_cep)
    zeroed = [i for i, tx in enumerate(enforced) if tx.r_data == 0]

    ok = compiled and cls_ok and blocked == {4, 5} and zeroed == list(range(1001, 1100))
    report(5, ok, f"compiled={compiled} classes={cls_ok} blocked={sorted(blocked)} "
                  f"first_zeroed={zeroed[:1]}")
    assert ok


def test_criterion_6_differential_fuzz(cfg_2ip):
    start = time.perf_counter()
    trials = 0
    for soc in ("soc_cep.json", "soc_wishbone_crypto.json", "soc_2ip.json"):
        trials += fuzz_differential(load_cfg(soc), sets=170, per_set=20, seed=2024).trials
    policies = resolve_file("policy_range.json", cfg_2ip)
    try:
        differential_check(policies, cfg_2ip, 10_000, seed=1,
                           mutate=lambda t: re.sub(r"(_addr_in) >= ", r"\1 > ", t, count=1))
        caught = False
    except DivergenceFound:
        caught = True
    elapsed = time.perf_counter() - start
    ok = trials >= 10_000 and caught and elapsed < 60
    report(6, ok, f"{trials} trials without divergence; mutation caught={caught}; "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_7_constraint_loop(cfg_2ip):
    resolved = resolve_doc(scenario_doc(), cfg_2ip)
    mock = MockEstimator(**SCENARIO_MOCK)
    retained, log = enforce_constraints(resolved, cfg_2ip, ConstraintSpec(**SCENARIO_BOUNDS),
                                        mock)
    counts = [e["retained"] for e in log]
    drops_ok = all(b - a == math.ceil(0.1 * b) for b, a in zip(counts, counts[1:]))
    worst = [max(e["area_pct"], e["delay_pct"], e["power_pct"]) for e in log]
    converges = worst[0] > 5.0 and worst[-1] <= 5.0 and worst == sorted(worst, reverse=True)
    kept = {rp.name for rp in retained}
    lowest_dropped = all(rp.score < min(r.score for r in retained)
                         for rp in resolved if rp.name not in kept)
    try:
        enforce_constraints(resolved[:1], cfg_2ip, ConstraintSpec(max_area_pct=0.0), mock)
        exhausted = False
    except ConstraintsUnsatisfiable:
        exhausted = True
    ok = (len(retained) == 16 and counts == [20, 18, 16] and drops_ok and converges
          and lowest_dropped and exhausted)
    report(7, ok, f"retained {len(retained)}/20 after {len(log)} iterations {counts}; "
                  f"exhaustion raises={exhausted}")
    assert ok


def test_criterion_8_empty_policy_set(cfg_cep):
    light = differential_check([], cfg_cep, 1000, seed=8).trials == 1000
    sim = EmittedSim(parse_emitted(generate([], cfg_cep).central_module), cfg_cep)
    gen = TransactionGen(random.Random(8), cfg_cep, interesting_values([], cfg_cep), [])
    state = new_state()
    identical = 0
    for _ in range(1000):
        tx = gen()
        identical += sim.step(tx) == tx and apply_policies(tx, [], cfg_cep, state)[0] == tx
    ok = light and identical == 1000
    report(8, ok, f"{identical}/1000 transactions unchanged with no policies")
    assert ok


@pytest.mark.parametrize("soc,policies", [("soc_2ip.json", "policy_range.json"),
                                          ("soc_cep.json", "policies_cep.json"),
                                          ("soc_scored.json", "policies_scored.json"),
                                          ("soc_wishbone_crypto.json", "policies_wb_assert.json")])
def test_criterion_9_wellformed_and_deterministic(soc, policies, tmp_path):
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["compile", "--policies", str(DATA / policies), "--soc", str(DATA / soc),
                     "--out", str(out)]) == 0
        outs.append({str(p.relative_to(out)): p.read_bytes()
                     for p in out.rglob("*") if p.is_file()})
    unbalanced = [rel for rel, data in outs[0].items()
                  if rel.endswith(".sv") and balance_errors(data.decode())]
    ok = not unbalanced and outs[0] == outs[1]
    report(9, ok, f"{policies}: {len(outs[0])} files balanced and byte-identical on rerun")
    assert ok


def test_criterion_10_assertions_and_formal_script(cfg_wb):
    art = generate(resolve_file("policies_wb_assert.json", cfg_wb), cfg_wb)
    names = [a.name for a in art.assertions]
    lines = art.formal_script.splitlines()
    asserts = [line for line in lines if line.startswith("assert ")]
    stanzas = [line for line in lines if line.startswith("[equivalence ")]
    wrappers = "".join(art.wrapper_files.values())
    in_wrappers = all(f"{n}: assert property" in wrappers for n in names)
    ok = len(names) == len(set(names)) == 5 and len(asserts) == 5 and len(stanzas) == 5 \
        and in_wrappers
    report(10, ok, f"assertions {names}; script has {len(asserts)} asserts and "
                   f"{len(stanzas)} equivalence stanzas")
    assert ok
