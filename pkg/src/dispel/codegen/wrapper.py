"""Per-IP wrapper patches for IP-level policies.

Inside a wrapper, bus signals keep their protocol names (``wb_dat_o``) and
policies drive shadow copies named ``<signal>_spw``.  Given an existing
wrapper, the generated logic is spliced in after the ``// DISPEL-INSERT``
line and nothing else changes; otherwise a pass-through skeleton module
``<ip>_spw`` is generated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import MarkerNotFound
from ..signals import CHANNELS, MODE_SIGNAL, PROTOCOL_CHANNELS, PROTOCOL_SIGNALS
from ..soc import IpConfig, SocConfig
from .assertions import wrapper_namer, wrapper_width
from .central import INDENT, logic_type

MARKER = "// DISPEL-INSERT"


class WrapperScope:
    """Naming inside one IP's wrapper: no select line, protocol signal names."""

    def __init__(self, cfg: SocConfig, internal: dict[str, int]):
        self.cfg = cfg
        self.internal = internal
        self.width = wrapper_width(internal)

    def namer(self, ip: IpConfig):
        return wrapper_namer

    def out(self, ip: IpConfig, channel: str) -> str:
        return shadow(self.cfg, channel)

    def sel(self, ip: IpConfig) -> None:
        return None

    def reg_prefix(self, rp, ip: IpConfig) -> str:
        return rp.ident


def shadow(cfg: SocConfig, channel: str) -> str:
    return PROTOCOL_SIGNALS[cfg.bus_protocol][channel] + "_spw"


@dataclass
class WrapperBlocks:
    """Generated pieces for one IP, in emission order."""
    ip: IpConfig
    internal: dict[str, int] = field(default_factory=dict)
    decls: list[str] = field(default_factory=list)
    comb: list[list[str]] = field(default_factory=list)     # one named block per policy
    seq: list[list[str]] = field(default_factory=list)      # always_ff blocks
    assertions: list[str] = field(default_factory=list)
    driven: set = field(default_factory=set)                # channels the policies assign

    def fragments(self) -> list[str]:
        out = []
        if self.decls:
            out.append("\n".join(self.decls))
        out += ["\n".join(block) for block in self.seq]
        out += ["\n".join(block) for block in self.comb]
        out += self.assertions
        return out


def _comb_process(ip: IpConfig, cfg: SocConfig, channels, blocks: WrapperBlocks) -> list[str]:
    names = PROTOCOL_SIGNALS[cfg.bus_protocol]
    lines = [f"always_comb begin : dispel_{ip.name}"]
    lines += [f"{INDENT}{names[ch]}_spw = {names[ch]};" for ch in channels]
    for block in blocks.comb:
        lines += [INDENT + line for line in block]
    lines.append("end")
    return lines


def _body(ip: IpConfig, cfg: SocConfig, channels, blocks: WrapperBlocks) -> list[str]:
    lines = list(blocks.decls)
    for block in blocks.seq:
        if lines:
            lines.append("")
        lines += block
    if channels:
        if lines:
            lines.append("")
        lines += _comb_process(ip, cfg, channels, blocks)
    if blocks.assertions:
        if lines:
            lines.append("")
        lines += blocks.assertions
    return lines


def insertion_text(blocks: WrapperBlocks, cfg: SocConfig, indent: str = "") -> str:
    """Module items spliced after the marker: shadow declarations plus policy logic."""
    channels = [ch for ch in PROTOCOL_CHANNELS[cfg.bus_protocol] if ch in blocks.driven]
    names = PROTOCOL_SIGNALS[cfg.bus_protocol]
    lines = ["// begin dispel policy logic"]
    lines += [f"{logic_type(CHANNELS[ch].width)} {names[ch]}_spw;" for ch in channels]
    lines += _body(blocks.ip, cfg, channels, blocks)
    lines.append("// end dispel policy logic")
    return "".join((indent + line if line else "") + "\n" for line in lines)


def splice(original: str, insert: str, path="<wrapper>") -> str:
    """Insert ``insert`` after the marker line; everything else is kept byte for byte."""
    idx = original.find(MARKER)
    if idx < 0:
        raise MarkerNotFound(path, MARKER)
    end = original.find("\n", idx)
    if end < 0:
        return original + "\n" + insert
    return original[:end + 1] + insert + original[end + 1:]


def marker_indent(original: str) -> str:
    idx = original.find(MARKER)
    line_start = original.rfind("\n", 0, idx) + 1
    prefix = original[line_start:idx]
    return prefix if prefix.strip() == "" else ""


def skeleton(blocks: WrapperBlocks, cfg: SocConfig, header: str) -> str:
    """Stand-alone ``<ip>_spw`` module: pass-through shadows plus the policy logic."""
    ip = blocks.ip
    channels = list(PROTOCOL_CHANNELS[cfg.bus_protocol])
    names = PROTOCOL_SIGNALS[cfg.bus_protocol]
    ports = [("input", 1, cfg.clock_name), ("input", 1, cfg.reset_name),
             ("input", 32, MODE_SIGNAL)]
    for ch in channels:
        ports.append(("input", CHANNELS[ch].width, names[ch]))
        ports.append(("output", CHANNELS[ch].width, names[ch] + "_spw"))
    for name in sorted(blocks.internal):
        ports.append(("input", blocks.internal[name], name))
    out = [header, f"module {ip.name}_spw ("]
    for i, (direction, width, name) in enumerate(ports):
        sep = "," if i < len(ports) - 1 else ""
        out.append(f"    {direction:<6} {logic_type(width):<13} {name}{sep}")
    out.append(");")
    body = _body(ip, cfg, channels, blocks)
    out.append("")
    out += [(INDENT + line) if line else "" for line in body]
    out.append("")
    out.append("endmodule")
    return "\n".join(out) + "\n"


def emit_wrapper_patch(ip: IpConfig, blocks: WrapperBlocks, cfg: SocConfig,
                       original: str | None = None, path=None, header: str = "") -> str:
    """Full wrapper text: ``original`` patched at its marker, or a fresh skeleton."""
    if original is None:
        return skeleton(blocks, cfg, header)
    path = path or f"{ip.name} wrapper"
    if MARKER not in original:
        raise MarkerNotFound(path, MARKER)
    return splice(original, insertion_text(blocks, cfg, marker_indent(original)), path)


def find_wrapper(wrapper_dir, ip: IpConfig) -> Path | None:
    if wrapper_dir is None:
        return None
    for name in (f"{ip.name}_spw.sv", f"{ip.name}.sv"):
        candidate = Path(wrapper_dir) / name
        if candidate.is_file():
            return candidate
    return None
