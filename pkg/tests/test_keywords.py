import pytest

from dispel.errors import NoEquivalentSignal
from dispel.policy.ast import Signal
from dispel.policy.classify import replace_keywords
from dispel.policy.parser import parse_predicate
from dispel.signals import KEYWORD_TABLE, channel_of, protocol_signal
from dispel.soc import BusProtocol

# Transcribed by hand from the reference keyword table; None marks a "-" cell.
EXPECTED = [
    (("read_address", "read address", "raddress"), "S_AXI_ARADDR", "wb_adr_i"),
    (("write_address", "write address", "waddress"), "S_AXI_AWADDR", "wb_adr_o"),
    (("read_data", "read data", "rdata"), "S_AXI_RDATA", "wb_dat_i"),
    (("write_data", "write data", "wdata"), "S_AXI_WDATA", "wb_dat_o"),
    (("strobe", "strb", "wstrb"), "S_AXI_WSTRB", "wb_stb_i"),
    (("write_ready", "write ready", "wready"), "S_AXI_WREADY", None),
    (("read_ready", "read ready", "rready"), "S_AXI_RREADY", None),
    (("address_ready", "address ready", "arready"), "S_AXI_AWREADY", None),
    (("address_valid", "address valid", "arvalid"), "S_AXI_AWVALID", None),
    (("write_valid", "write valid", "wvalid"), "S_AXI_WVALID", None),
    (("read_valid", "read valid", "rvalid"), "S_AXI_RVALID", None),
]

CASES = [(spellings, proto, cell)
         for spellings, axi, wb in EXPECTED
         for proto, cell in ((BusProtocol.AXI4, axi), (BusProtocol.WISHBONE, wb))]


def test_case_count():
    assert len(CASES) == 22


def test_table_matches_transcription():
    assert [(r.spellings, r.axi4, r.wishbone) for r in KEYWORD_TABLE] == EXPECTED


@pytest.mark.parametrize("spellings,proto,cell", CASES,
                         ids=[f"{s[0]}-{p.value}" for s, p, _ in CASES])
def test_keyword_row(spellings, proto, cell):
    for spelling in spellings:
        ast = parse_predicate(f"{spelling} = 1")
        if cell is None:
            with pytest.raises(NoEquivalentSignal, match=proto.value):
                replace_keywords(ast, proto)
        else:
            assert replace_keywords(ast, proto).left.name == cell


def test_keywords_are_case_insensitive():
    ast = replace_keywords(parse_predicate("Read_Address = 1"), BusProtocol.AXI4)
    assert ast.left.name == "S_AXI_ARADDR"


def test_replace_is_idempotent():
    ast = parse_predicate("(slave_no = 1), (rdata = 0 and write address > 0x10 and x = 1)")
    once = replace_keywords(ast, BusProtocol.AXI4)
    assert replace_keywords(once, BusProtocol.AXI4) == once


def test_non_keyword_leaves_untouched():
    ast = replace_keywords(parse_predicate("aes.key_reg = 1"), BusProtocol.AXI4)
    assert ast.left == Signal("aes.key_reg")


def test_bare_address_means_write_address():
    assert channel_of("address") == "aw_addr"
    assert protocol_signal("address", BusProtocol.WISHBONE) == "wb_adr_o"


def test_wishbone_message_names_keyword_table():
    with pytest.raises(NoEquivalentSignal, match="keyword table"):
        replace_keywords(parse_predicate("wready = 1"), BusProtocol.WISHBONE)
