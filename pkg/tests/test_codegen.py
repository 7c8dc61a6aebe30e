import re
from dataclasses import replace

import pytest

from dispel.codegen.pipeline import CENTRAL_FILE, generate, write_artifacts
from dispel.signals import PROTOCOL_CHANNELS
from dispel.soc import BusProtocol

from conftest import DATA, load_cfg, resolve_doc, resolve_file
from wellformed import balance_errors

FIXTURES = [("soc_2ip.json", "policy_range.json"), ("soc_cep.json", "policies_cep.json"),
            ("soc_scored.json", "policies_scored.json"),
            ("soc_wishbone_crypto.json", "policies_wb_assert.json")]


def _artifacts(soc, policies):
    cfg = load_cfg(soc)
    return generate(resolve_file(policies, cfg), cfg)


def test_range_policy_golden_file(cfg_2ip):
    art = generate(resolve_file("policy_range.json", cfg_2ip), cfg_2ip)
    assert art.central_module == (DATA / "golden" / "range_central.sv").read_text()


def test_range_policy_conditional_block(cfg_2ip):
    text = generate(resolve_file("policy_range.json", cfg_2ip), cfg_2ip).central_module
    block = text[text.index("begin : pol_Policy1"):]
    assert ("if ((mor1kx_aw_addr_in >= 32'h0001dfa4) && (mor1kx_aw_addr_in <= 32'h0001ffac)"
            " && (reg_mode == 32'h0)) begin") in block
    assert "mor1kx_w_data_out = 32'h0;" in block


@pytest.mark.parametrize("soc,policies", FIXTURES)
def test_every_file_is_balanced(soc, policies):
    for rel, text in _artifacts(soc, policies).files().items():
        if rel.endswith(".sv"):
            assert balance_errors(text) == [], rel


def test_scanner_catches_imbalance():
    assert balance_errors("module m; begin end endmodule") == []
    assert balance_errors("module m; begin endmodule")
    assert balance_errors("module m; assign a = (b; endmodule")
    assert balance_errors("// begin\nmodule m; endmodule") == []


@pytest.mark.parametrize("soc,policies", FIXTURES)
def test_deterministic(soc, policies, tmp_path):
    first = _artifacts(soc, policies).files()
    assert _artifacts(soc, policies).files() == first
    a, b = tmp_path / "a", tmp_path / "b"
    write_artifacts(first, a)
    write_artifacts(_artifacts(soc, policies).files(), b)
    for rel in first:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


@pytest.mark.parametrize("proto_cfg", ["soc_cep.json", "soc_wishbone_crypto.json"])
def test_empty_policy_set_is_pass_through(proto_cfg):
    cfg = load_cfg(proto_cfg)
    text = generate([], cfg).central_module
    assigns = re.findall(r"^\s*(\w+)_out = (\w+)_in;$", text, re.MULTILINE)
    expected = {f"{ip.name}_{ch}" for ip in cfg.ips for ch in PROTOCOL_CHANNELS[cfg.bus_protocol]}
    assert {lhs for lhs, rhs in assigns if lhs == rhs} == expected
    assert len(assigns) == len(expected)
    assert "always_ff" not in text and " if " not in text


def test_policy_count_conservation(cfg_cep):
    doc = {
        "comb": {"predicate": "(slave_no = 1), (rdata = 1)", "action": "reject",
                 "timing": "mode = 0"},
        "multi": {"predicate": "(slave_no = 2 or 3), (wdata = 1)", "action": "reject",
                  "timing": "mode = 0"},
        "count": {"predicate": "(slave_no = 1), (clock_cycles > 3)", "action": "rdata = 0",
                  "timing": "mode = 0"},
        "seq": {"predicate": "(slave_no = 1), (wvalid = 1) then (rvalid = 1)", "action": "reject",
                "timing": "mode = 0"},
        "prop": {"predicate": "(slave_no = 1), (eventually (rdata = 5))", "action": "reject",
                 "timing": "mode = 0"},
        "ip": {"predicate": "aes.busy = 1", "action": "rdata = 0", "timing": "mode = 0"},
        "ip_prop": {"predicate": "aes.busy = 1", "action": "rdata = 0", "timing": "mode = 0",
                    "synthesizable": False},
    }
    art = generate(resolve_doc(doc, cfg_cep), cfg_cep)
    central = art.central_module
    assert len(re.findall(r"begin : pol_", central)) == 4
    assert len(re.findall(r"always_ff", central)) == 2
    assert central.count("if ((uart") == 0
    assert "md5_wdata" not in central
    # a set selector emits one guarded branch per selected IP
    multi = central[central.index("begin : pol_multi"):]
    multi = multi[:multi.index("\n        end\n")]
    assert "md5_w_data_out" in multi and "sha256_w_data_out" in multi
    assert [a.name for a in art.assertions] == ["prop", "ip_prop"]
    wrapper = art.wrapper_files["wrappers/aes_spw.sv"]
    assert "begin : pol_ip" in wrapper and "ip_prop: assert property" in wrapper
    assert set(art.locations) == set(doc)
    assert all(art.locations[name] for name in doc)


def test_report_locations_point_at_blocks(cfg_cep):
    art = generate(resolve_file("policies_cep.json", cfg_cep), cfg_cep)
    lines = art.central_module.splitlines()
    for name, locs in art.locations.items():
        (loc,) = locs
        rel, line = loc.split(":")
        assert rel == CENTRAL_FILE
        assert "begin : pol_" in lines[int(line) - 1]


def test_counter_fsm_shape(cfg_cep):
    text = generate(resolve_file("policies_cep.json", cfg_cep), cfg_cep).central_module
    assert "logic [9:0] Policy_4_count;" in text
    assert "end else if (md5_sel) begin" in text
    assert "if (Policy_4_count >= 10'h3e8) begin" in text
    assert "if (Policy_4_flag && (reg_mode == 32'h0)) begin" in text


def test_active_low_reset_uses_negedge():
    cfg = load_cfg("soc_cep.json")
    cfg_n = replace(cfg, reset_name="rst_n")
    rp = resolve_file("policies_cep.json", cfg_n)
    text = generate(rp, cfg_n).central_module
    assert "always_ff @(posedge clk or negedge rst_n)" in text
    assert "if (!rst_n) begin" in text


def test_wishbone_reject_zeroes_data_only(cfg_wb):
    rp = resolve_doc({"p": {"predicate": "(slave_no = 1), (wdata = 1)", "action": "reject",
                            "timing": "mode = 0"}}, cfg_wb)
    text = generate(rp, cfg_wb).central_module
    block = text[text.index("begin : pol_p"):]
    assert "aes_w_data_out = 32'h0;" in block
    assert "valid" not in block
    assert cfg_wb.bus_protocol is BusProtocol.WISHBONE


def test_axi_reject_on_read_path(cfg_cep):
    rp = resolve_doc({"p": {"predicate": "(slave_no = 1), (rdata = 1)", "action": "reject",
                            "timing": "mode = 0"}}, cfg_cep)
    block = generate(rp, cfg_cep).central_module.split("begin : pol_p")[1]
    assert "aes_r_data_out = 32'h0;" in block and "aes_r_valid_out = 1'h0;" in block
    assert "w_data_out" not in block


def test_write_artifacts_replaces_directory(tmp_path):
    out = tmp_path / "out"
    write_artifacts({"a.txt": "1\n", "sub/b.txt": "2\n"}, out)
    write_artifacts({"c.txt": "3\n"}, out)
    assert sorted(p.name for p in out.rglob("*")) == ["c.txt"]
