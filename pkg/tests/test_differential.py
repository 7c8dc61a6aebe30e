import random
import re

import pytest

from dispel.codegen.pipeline import generate
from dispel.errors import DivergenceFound, UnsupportedConstruct
from dispel.policy.parser import policies_from_dict
from dispel.policy.resolve import resolve_all
from dispel.sim.diffcheck import (TransactionGen, checked_policies, differential_check,
                                  interesting_values)
from dispel.sim.fuzz import PolicyGen, fuzz_differential
from dispel.sim.golden import apply_policies, new_state
from dispel.sim.reinterp import EmittedSim, parse_emitted, reinterpret_emitted
from dispel.sim.transaction import Transaction

from conftest import load_cfg, resolve_doc, resolve_file


@pytest.mark.parametrize("src", [
    "module m (input logic a); initial begin end endmodule",
    "module m (input logic a, output logic b); assign b = a; endmodule",
    "module m (input logic a, output logic b); always_comb begin b = a * 2; end endmodule",
])
def test_reinterp_rejects_constructs_outside_subset(src):
    with pytest.raises(UnsupportedConstruct):
        parse_emitted(src)


def test_reinterpret_single_transaction(cfg_2ip):
    art = generate(resolve_file("policy_range.json", cfg_2ip), cfg_2ip)
    tx = Transaction(cycle=0, master_id=0, slave_id=1, aw_addr=0x0001DFA8, w_data=5,
                     w_valid=True)
    out = reinterpret_emitted(art, tx, cfg=cfg_2ip)
    assert out.w_data == 0 and out.w_valid is False


@pytest.mark.parametrize("soc,policies", [("soc_2ip.json", "policy_range.json"),
                                          ("soc_cep.json", "policies_cep.json"),
                                          ("soc_scored.json", "policies_scored.json")])
def test_fixture_sets_agree(soc, policies):
    cfg = load_cfg(soc)
    report = differential_check(resolve_file(policies, cfg), cfg, 3000, seed=7)
    assert report.trials == 3000


def _flip_first_ge(text):
    new, n = re.subn(r"(_addr_in) >= ", r"\1 > ", text, count=1)
    assert n == 1
    return new


@pytest.mark.parametrize("soc,policies", [("soc_2ip.json", "policy_range.json"),
                                          ("soc_cep.json", "policies_cep.json")])
def test_flipped_operator_is_caught(soc, policies):
    cfg = load_cfg(soc)
    with pytest.raises(DivergenceFound) as info:
        differential_check(resolve_file(policies, cfg), cfg, 10_000, seed=1,
                           mutate=_flip_first_ge)
    assert info.value.golden != info.value.emitted


def test_flipped_counter_compare_is_caught(cfg_cep):
    policies = resolve_doc({"c": {"predicate": "(slave_no = 1), (clock_cycles > 3)",
                                  "action": "rdata = 0", "timing": "always"}}, cfg_cep)

    def mutate(text):
        return text.replace("c_count >= ", "c_count > ", 1)

    with pytest.raises(DivergenceFound):
        differential_check(policies, cfg_cep, 2000, seed=3, mutate=mutate)


def test_zero_policies_identity(cfg_cep):
    assert differential_check([], cfg_cep, 1000, seed=11).policies == 0
    sim = EmittedSim(parse_emitted(generate([], cfg_cep).central_module), cfg_cep)
    gen = TransactionGen(random.Random(11), cfg_cep, interesting_values([], cfg_cep), [])
    state = new_state()
    for _ in range(1000):
        tx = gen()
        assert sim.step(tx) == tx
        assert apply_policies(tx, [], cfg_cep, state)[0] == tx


def test_checked_policies_skip_ip_and_assertions(cfg_scored):
    resolved = resolve_file("policies_scored.json", cfg_scored)
    assert [rp.name for rp in checked_policies(resolved)] == ["P1", "P2"]


def test_interesting_values_include_neighbours(cfg_2ip):
    values = interesting_values(resolve_file("policy_range.json", cfg_2ip), cfg_2ip)
    for v in (0x0001DFA3, 0x0001DFA4, 0x0001DFA5, 0x0001FFAD, 0x93000000, 0x9300FFFF):
        assert v in values


def test_transactions_are_seeded(cfg_cep):
    def draw(seed):
        gen = TransactionGen(random.Random(seed), cfg_cep, [1, 2, 3], [0])
        return [gen() for _ in range(50)]
    assert draw(5) == draw(5) != draw(6)


def test_invalid_trial_count(cfg_cep):
    with pytest.raises(ValueError):
        differential_check([], cfg_cep, 0)


def test_generated_policies_are_mostly_accepted(cfg_cep):
    gen = PolicyGen(random.Random(0), cfg_cep)
    doc = {f"g{i}": gen.policy() for i in range(300)}
    resolved, _ = resolve_all(policies_from_dict(doc), cfg_cep)
    assert len(resolved) > 200
    kinds = {rp.fsm_kind for rp in resolved}
    assert {"counter", "sequence", None} <= kinds


@pytest.mark.parametrize("soc", ["soc_cep.json", "soc_wishbone_crypto.json", "soc_2ip.json"])
def test_fuzz_small(soc):
    report = fuzz_differential(load_cfg(soc), sets=60, per_set=25, seed=5)
    assert report.trials == 1500
    assert report.policies > 0
