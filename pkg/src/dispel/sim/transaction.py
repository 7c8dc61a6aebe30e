"""Single-beat bus transactions and trace files."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from ..errors import TraceError
from ..soc import SocConfig, parse_address, read_json

# Bus channels a transaction carries, with their widths.
TX_CHANNELS = {
    "aw_addr": 32, "aw_valid": 1, "w_data": 32, "w_strb": 4, "w_valid": 1,
    "ar_addr": 32, "ar_valid": 1, "r_data": 32, "r_valid": 1,
}
BOOL_FIELDS = frozenset(ch for ch, w in TX_CHANNELS.items() if w == 1)
MODE_LIMIT = 1 << 32


@dataclass(frozen=True)
class Transaction:
    cycle: int
    master_id: int
    slave_id: int
    aw_addr: int = 0
    ar_addr: int = 0
    aw_valid: bool = False
    ar_valid: bool = False
    w_valid: bool = False
    r_valid: bool = False
    w_data: int = 0
    r_data: int = 0
    w_strb: int = 0
    mode: int = 0

    def get(self, channel: str) -> int:
        return int(getattr(self, channel))

    def with_channels(self, values: dict[str, int]) -> "Transaction":
        return replace(self, **{ch: bool(v) if ch in BOOL_FIELDS else v
                                for ch, v in values.items()})

    def to_dict(self) -> dict:
        return asdict(self)


def _int_field(doc: dict, key: str, index: int, bits: int | None, default=None) -> int:
    if key not in doc:
        if default is None:
            raise TraceError(index, f"missing field {key!r}")
        return default
    raw = doc[key]
    if bits == 32 and isinstance(raw, str):
        try:
            return parse_address(raw, key)
        except ValueError as exc:
            raise TraceError(index, str(exc)) from None
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < 0:
        raise TraceError(index, f"{key} must be a non-negative integer")
    if bits is not None and raw >> bits:
        raise TraceError(index, f"{key} does not fit in {bits} bits")
    return raw


def transaction_from_dict(doc, cfg: SocConfig, index: int = 0) -> Transaction:
    if not isinstance(doc, dict):
        raise TraceError(index, "a transaction must be a JSON object")
    known = {f.name for f in fields(Transaction)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise TraceError(index, f"unknown fields {unknown}")
    values = {"cycle": _int_field(doc, "cycle", index, None),
              "master_id": _int_field(doc, "master_id", index, None),
              "slave_id": _int_field(doc, "slave_id", index, None),
              "mode": _int_field(doc, "mode", index, 32, 0)}
    for ch, width in TX_CHANNELS.items():
        if ch in BOOL_FIELDS:
            raw = doc.get(ch, False)
            if raw not in (True, False, 0, 1):
                raise TraceError(index, f"{ch} must be a boolean")
            values[ch] = bool(raw)
        else:
            values[ch] = _int_field(doc, ch, index, width, 0)
    tx = Transaction(**values)
    master, slave = cfg.ip_by_id(tx.master_id), cfg.ip_by_id(tx.slave_id)
    if master is None or not master.is_master:
        raise TraceError(index, f"master_id {tx.master_id} is not a master in the SoC config")
    if slave is None or not slave.is_slave:
        raise TraceError(index, f"slave_id {tx.slave_id} is not a slave in the SoC config")
    return tx


def check_order(trace) -> None:
    for i in range(1, len(trace)):
        if trace[i].cycle < trace[i - 1].cycle:
            raise TraceError(i, f"cycle {trace[i].cycle} is earlier than the previous "
                                f"transaction's cycle {trace[i - 1].cycle}")


def load_trace(path, cfg: SocConfig) -> list[Transaction]:
    doc = read_json(path)
    if not isinstance(doc, list):
        raise TraceError(0, f"{path}: a trace must be a JSON array of transactions")
    trace = [transaction_from_dict(item, cfg, i) for i, item in enumerate(doc)]
    check_order(trace)
    return trace
