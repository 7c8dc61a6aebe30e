"""Bus signal vocabulary: keywords, protocol signal names, channel model.

Every bus signal is identified internally by a *channel name* such as
``aw_addr`` or ``r_data``.  Policy authors may write a keyword
(``read address``), a channel name, or a protocol signal name
(``S_AXI_ARADDR``); all three resolve to the same channel.
"""

from __future__ import annotations

from dataclasses import dataclass

from .soc import BusProtocol

MODE_SIGNAL = "reg_mode"
MODE_ALIASES = frozenset({"mode", "reg_mode"})


@dataclass(frozen=True)
class Channel:
    name: str
    width: int
    forward: bool      # driven master -> slave
    path: str          # "write", "read" or "resp"


CHANNELS = {c.name: c for c in (
    Channel("aw_addr", 32, True, "write"),
    Channel("aw_valid", 1, True, "write"),
    Channel("aw_ready", 1, False, "write"),
    Channel("w_data", 32, True, "write"),
    Channel("w_strb", 4, True, "write"),
    Channel("w_valid", 1, True, "write"),
    Channel("w_ready", 1, False, "write"),
    Channel("ar_addr", 32, True, "read"),
    Channel("ar_valid", 1, True, "read"),
    Channel("ar_ready", 1, False, "read"),
    Channel("r_data", 32, False, "read"),
    Channel("r_valid", 1, False, "read"),
    Channel("r_ready", 1, True, "read"),
    Channel("b_resp", 2, False, "resp"),
    Channel("b_valid", 1, False, "resp"),
    Channel("b_ready", 1, True, "resp"),
)}

ADDRESS_CHANNELS = frozenset({"aw_addr", "ar_addr"})

PROTOCOL_SIGNALS = {
    BusProtocol.AXI4: {name: "S_AXI_" + name.replace("_", "").upper() for name in CHANNELS},
    BusProtocol.WISHBONE: {
        "ar_addr": "wb_adr_i",
        "aw_addr": "wb_adr_o",
        "r_data": "wb_dat_i",
        "w_data": "wb_dat_o",
        "w_strb": "wb_stb_i",
    },
}

# Channels carried by each protocol's port bundles in the central module.
PROTOCOL_CHANNELS = {
    proto: tuple(name for name in CHANNELS if name in table)
    for proto, table in PROTOCOL_SIGNALS.items()
}


@dataclass(frozen=True)
class KeywordRow:
    spellings: tuple[str, ...]
    axi4: str
    wishbone: str | None

    def signal_for(self, protocol: BusProtocol) -> str | None:
        return self.axi4 if protocol is BusProtocol.AXI4 else self.wishbone


KEYWORD_TABLE = (
    KeywordRow(("read_address", "read address", "raddress"), "S_AXI_ARADDR", "wb_adr_i"),
    KeywordRow(("write_address", "write address", "waddress"), "S_AXI_AWADDR", "wb_adr_o"),
    KeywordRow(("read_data", "read data", "rdata"), "S_AXI_RDATA", "wb_dat_i"),
    KeywordRow(("write_data", "write data", "wdata"), "S_AXI_WDATA", "wb_dat_o"),
    KeywordRow(("strobe", "strb", "wstrb"), "S_AXI_WSTRB", "wb_stb_i"),
    KeywordRow(("write_ready", "write ready", "wready"), "S_AXI_WREADY", None),
    KeywordRow(("read_ready", "read ready", "rready"), "S_AXI_RREADY", None),
    KeywordRow(("address_ready", "address ready", "arready"), "S_AXI_AWREADY", None),
    KeywordRow(("address_valid", "address valid", "arvalid"), "S_AXI_AWVALID", None),
    KeywordRow(("write_valid", "write valid", "wvalid"), "S_AXI_WVALID", None),
    KeywordRow(("read_valid", "read valid", "rvalid"), "S_AXI_RVALID", None),
)

# Bare "address" is accepted as the write address.
_EXTRA_ALIASES = {"address": KEYWORD_TABLE[1]}

KEYWORDS: dict[str, KeywordRow] = {}
for _row in KEYWORD_TABLE:
    for _spelling in _row.spellings:
        KEYWORDS[_spelling.replace(" ", "_")] = _row
KEYWORDS.update(_EXTRA_ALIASES)

# Two-word spellings, used by the tokenizer to merge "read address" etc.
PHRASES = {tuple(s.split(" ")) for row in KEYWORD_TABLE for s in row.spellings if " " in s}

_AXI_TO_CHANNEL = {sig.lower(): ch for ch, sig in PROTOCOL_SIGNALS[BusProtocol.AXI4].items()}
_WB_TO_CHANNEL = {sig.lower(): ch for ch, sig in PROTOCOL_SIGNALS[BusProtocol.WISHBONE].items()}


def keyword_row(name: str) -> KeywordRow | None:
    return KEYWORDS.get(name.lower())


def channel_of(name: str) -> str | None:
    """Channel named by a keyword, channel name or protocol signal, else None."""
    low = name.lower()
    if low in CHANNELS:
        return low
    row = KEYWORDS.get(low)
    if row is not None:
        return _AXI_TO_CHANNEL[row.axi4.lower()]
    return _AXI_TO_CHANNEL.get(low) or _WB_TO_CHANNEL.get(low)


def protocol_signal(name: str, protocol: BusProtocol) -> str | None:
    """The protocol's spelling for a bus signal name; None if it has none.

    Keywords follow the keyword table verbatim; other names go through the
    channel model.
    """
    row = keyword_row(name)
    if row is not None:
        return row.signal_for(protocol)
    channel = channel_of(name)
    if channel is None:
        return None
    return PROTOCOL_SIGNALS[protocol].get(channel)


def is_bus_signal(name: str) -> bool:
    return channel_of(name) is not None


def is_mode(name: str) -> bool:
    return name.lower() in MODE_ALIASES
