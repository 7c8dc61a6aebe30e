import json

import pytest

from dispel.errors import ConfigInvariantViolation, InputFileError, MalformedJson
from dispel.soc import (BusProtocol, IpCategory, load_soc_config, lookup_ip_by_address,
                        parse_address, soc_from_dict)


def _doc(*ips, protocol="AXI4"):
    return {"clock": "clk", "reset": "rst", "bus_protocol": protocol, "ips": list(ips)}


MASTER = {"name": "cpu", "id": 0, "kind": "Master"}


def _slave(name, ident, lo, hi, **extra):
    return {"name": name, "id": ident, "kind": "Slave", "addr_start": lo, "addr_end": hi, **extra}


def test_loads_fixture(cfg_cep):
    assert cfg_cep.bus_protocol is BusProtocol.AXI4
    assert [ip.name for ip in cfg_cep.masters] == ["mor1kx"]
    assert len(cfg_cep.slaves) == 11
    assert cfg_cep.ip_by_name("AES").category is IpCategory.CRYPTO


def test_wishbone_fixture(cfg_wb):
    assert cfg_wb.bus_protocol is BusProtocol.WISHBONE
    assert cfg_wb.clock_name == "wb_clk_i"


def test_lookup_by_address_respects_inclusive_bounds(cfg_2ip):
    assert lookup_ip_by_address(cfg_2ip, 0x93000000).name == "aes"
    assert lookup_ip_by_address(cfg_2ip, 0x9300FFFF).name == "aes"
    assert lookup_ip_by_address(cfg_2ip, 0x93010000) is None
    assert lookup_ip_by_address(cfg_2ip, 0x92FFFFFF) is None


@pytest.mark.parametrize("raw,value", [("0x10", 16), ("32'h93000000", 0x93000000), (42, 42),
                                       ("0X1f", 31)])
def test_parse_address(raw, value):
    assert parse_address(raw) == value


@pytest.mark.parametrize("doc,detail", [
    (_doc(_slave("a", 1, "0x0", "0xf")), "no master"),
    (_doc(MASTER), "no slave"),
    (_doc(MASTER, _slave("a", 0, "0x0", "0xf")), "duplicate id"),
    (_doc(MASTER, _slave("cpu", 1, "0x0", "0xf")), "duplicate name"),
    (_doc(MASTER, _slave("a", 1, "0x10", "0x0")), "addr_start > addr_end"),
    (_doc(MASTER, _slave("a", 1, "0x0", "0x10"), _slave("b", 2, "0x10", "0x20")), "overlap"),
    (_doc(MASTER, {"name": "a", "id": 1, "kind": "Slave"}), "slave without address range"),
    (_doc(MASTER, _slave("a", 1, "0x0", "0xf", data_marker_start="0x20")),
     "data marker outside range"),
    (_doc(MASTER, _slave("a", 1, "0x0", "0xf"), protocol="PCIe"), "unknown bus protocol"),
])
def test_invariant_violations(doc, detail):
    with pytest.raises(ConfigInvariantViolation, match=detail):
        soc_from_dict(doc)


def test_missing_file(tmp_path):
    with pytest.raises(InputFileError):
        load_soc_config(tmp_path / "absent.json")


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "soc.json"
    path.write_text('{\n  "clock": "clk",\n  "reset": \n}\n')
    with pytest.raises(MalformedJson) as info:
        load_soc_config(path)
    assert info.value.line == 4


def test_duplicate_keys_rejected(tmp_path):
    path = tmp_path / "soc.json"
    path.write_text(json.dumps(_doc(MASTER, _slave("a", 1, "0x0", "0xf")))[:-1]
                    + ', "clock": "clk2"}')
    with pytest.raises(MalformedJson, match="duplicate key"):
        load_soc_config(path)
