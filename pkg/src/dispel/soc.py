"""SoC description consumed by every downstream stage."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ConfigInvariantViolation, InputFileError, MalformedJson

ADDR_MASK = 0xFFFF_FFFF


class BusProtocol(str, Enum):
    AXI4 = "AXI4"
    WISHBONE = "Wishbone"


class IpKind(str, Enum):
    MASTER = "Master"
    SLAVE = "Slave"


class IpCategory(str, Enum):
    CRYPTO = "Crypto"
    HASHING = "Hashing"
    MEMORY = "Memory"
    DSP = "DSP"
    ACCELERATOR = "Accelerator"
    PERIPHERAL = "Peripheral"
    OTHER = "Other"


@dataclass(frozen=True)
class IpConfig:
    name: str
    id: int
    kind: IpKind
    category: IpCategory = IpCategory.OTHER
    base_addr: int | None = None
    addr_start: int | None = None
    addr_end: int | None = None
    data_marker_start: int | None = None
    data_marker_end: int | None = None
    trusted: bool = False

    @property
    def is_master(self) -> bool:
        return self.kind is IpKind.MASTER

    @property
    def is_slave(self) -> bool:
        return self.kind is IpKind.SLAVE

    def covers(self, addr: int) -> bool:
        if self.addr_start is None or self.addr_end is None:
            return False
        return self.addr_start <= addr <= self.addr_end


@dataclass(frozen=True)
class SocConfig:
    clock_name: str
    reset_name: str
    bus_protocol: BusProtocol
    ips: tuple[IpConfig, ...] = field(default_factory=tuple)

    def __post_init__(self):
        validate(self)

    @property
    def masters(self) -> list[IpConfig]:
        return [ip for ip in self.ips if ip.is_master]

    @property
    def slaves(self) -> list[IpConfig]:
        return [ip for ip in self.ips if ip.is_slave]

    def ip_by_id(self, ip_id: int) -> IpConfig | None:
        for ip in self.ips:
            if ip.id == ip_id:
                return ip
        return None

    def ip_by_name(self, name: str) -> IpConfig | None:
        lowered = name.lower()
        for ip in self.ips:
            if ip.name.lower() == lowered:
                return ip
        return None

    @property
    def reset_active_low(self) -> bool:
        return self.reset_name.lower().endswith(("_n", "_ni", "n_i"))


def parse_address(value, what="address") -> int:
    """Normalise an address given as int or hex string (``0x`` optional)."""
    if isinstance(value, bool):
        raise ValueError(f"{what}: expected an address, got a boolean")
    if isinstance(value, int):
        addr = value
    elif isinstance(value, str):
        text = value.strip().replace("_", "")
        if text.lower().startswith("32'h"):
            text = text[4:]
        elif text.lower().startswith("0x"):
            text = text[2:]
        if not text:
            raise ValueError(f"{what}: empty address")
        try:
            addr = int(text, 16)
        except ValueError:
            raise ValueError(f"{what}: {value!r} is not a hex address") from None
    else:
        raise ValueError(f"{what}: expected an address, got {type(value).__name__}")
    if not 0 <= addr <= ADDR_MASK:
        raise ValueError(f"{what}: {value!r} does not fit in 32 bits")
    return addr


def validate(cfg: SocConfig) -> None:
    if not cfg.masters:
        raise ConfigInvariantViolation("no master")
    if not cfg.slaves:
        raise ConfigInvariantViolation("no slave")
    names, ids = set(), set()
    for ip in cfg.ips:
        if ip.name.lower() in names:
            raise ConfigInvariantViolation("duplicate name", ip.name)
        names.add(ip.name.lower())
        if ip.id < 0:
            raise ConfigInvariantViolation("negative id", ip.name)
        if ip.id in ids:
            raise ConfigInvariantViolation("duplicate id", ip.name)
        ids.add(ip.id)
        if ip.is_slave and (ip.addr_start is None or ip.addr_end is None):
            raise ConfigInvariantViolation("slave without address range", ip.name)
        if ip.addr_start is not None and ip.addr_end is not None:
            if ip.addr_start > ip.addr_end:
                raise ConfigInvariantViolation("addr_start > addr_end", ip.name)
            for marker in (ip.data_marker_start, ip.data_marker_end):
                if marker is not None and not ip.covers(marker):
                    raise ConfigInvariantViolation("data marker outside range", ip.name)
    slaves = sorted(cfg.slaves, key=lambda s: s.addr_start)
    for prev, cur in zip(slaves, slaves[1:]):
        if cur.addr_start <= prev.addr_end:
            raise ConfigInvariantViolation(
                "overlap", cur.name, f"{cur.name} overlaps {prev.name}")


def lookup_ip_by_address(cfg: SocConfig, addr: int) -> IpConfig | None:
    for ip in cfg.slaves:
        if ip.covers(addr):
            return ip
    return None


_IP_KEYS = {"name", "id", "kind", "category", "base_addr", "addr_start", "addr_end",
            "data_marker_start", "data_marker_end", "trusted"}


def _enum(enum_cls, raw, which, ip_name):
    for member in enum_cls:
        if isinstance(raw, str) and raw.lower() == member.value.lower():
            return member
    raise ConfigInvariantViolation(f"unknown {which} {raw!r}", ip_name)


def _ip_from_dict(raw: dict, index: int) -> IpConfig:
    if not isinstance(raw, dict):
        raise ConfigInvariantViolation(f"ips[{index}] is not an object")
    name = raw.get("name")
    if not isinstance(name, str) or not name.isidentifier():
        raise ConfigInvariantViolation("IP name must be an identifier", name or f"ips[{index}]")
    unknown = set(raw) - _IP_KEYS
    if unknown:
        raise ConfigInvariantViolation(f"unknown keys {sorted(unknown)}", name)
    ip_id = raw.get("id")
    if isinstance(ip_id, bool) or not isinstance(ip_id, int):
        raise ConfigInvariantViolation("id must be an integer", name)

    def addr(key):
        if raw.get(key) is None:
            return None
        try:
            return parse_address(raw[key], key)
        except ValueError as exc:
            raise ConfigInvariantViolation("bad address", name, str(exc)) from None

    trusted = raw.get("trusted", False)
    if not isinstance(trusted, bool):
        raise ConfigInvariantViolation("trusted must be a boolean", name)
    start = addr("addr_start")
    base = addr("base_addr")
    return IpConfig(
        name=name,
        id=ip_id,
        kind=_enum(IpKind, raw.get("kind"), "kind", name),
        category=_enum(IpCategory, raw.get("category", "Other"), "category", name),
        base_addr=base if base is not None else start,
        addr_start=start,
        addr_end=addr("addr_end"),
        data_marker_start=addr("data_marker_start"),
        data_marker_end=addr("data_marker_end"),
        trusted=trusted,
    )


def soc_from_dict(doc: dict) -> SocConfig:
    if not isinstance(doc, dict):
        raise ConfigInvariantViolation("top level must be an object")
    for key in ("clock", "reset"):
        if not isinstance(doc.get(key), str) or not doc[key].isidentifier():
            raise ConfigInvariantViolation(f"{key} must be an identifier")
    ips = doc.get("ips", [])
    if not isinstance(ips, list):
        raise ConfigInvariantViolation("ips must be an array")
    protocol = doc.get("bus_protocol", "AXI4")
    return SocConfig(
        clock_name=doc["clock"],
        reset_name=doc["reset"],
        bus_protocol=_enum(BusProtocol, protocol, "bus protocol", None),
        ips=tuple(_ip_from_dict(raw, i) for i, raw in enumerate(ips)),
    )


def read_json(path) -> object:
    """Read a JSON file, mapping failures to typed diagnostics.

    Duplicate object keys are rejected because policy names are keys.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFileError(path, "file not found") from None
    except OSError as exc:
        raise InputFileError(path, exc.strerror or str(exc)) from None

    def no_duplicates(pairs):
        seen = {}
        for key, value in pairs:
            if key in seen:
                raise ValueError(f"duplicate key {key!r}")
            seen[key] = value
        return seen

    try:
        return json.loads(text, object_pairs_hook=no_duplicates)
    except json.JSONDecodeError as exc:
        raise MalformedJson(path, exc.lineno, exc.msg) from None
    except ValueError as exc:
        raise MalformedJson(path, 1, str(exc)) from None


def load_soc_config(path) -> SocConfig:
    return soc_from_dict(read_json(path))
