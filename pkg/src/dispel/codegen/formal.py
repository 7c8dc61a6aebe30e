"""Tool-agnostic formal verification script.

The script is plain text with three sections: the files to analyze, every
assertion with its scope, and one equivalence stanza per patched wrapper
pairing the original module with its patched counterpart.
"""

from __future__ import annotations

from ..soc import SocConfig


def emit_formal_script(artifacts, cfg: SocConfig, header: str = "") -> str:
    lines = []
    if header:
        lines += [line.replace("//", "#", 1) for line in header.splitlines()]
    lines += ["", "[files]"]
    for path in sorted(set(artifacts.original_wrappers.values())):
        lines.append(f"analyze original {path}")
    lines.append("analyze dispel_central.sv")
    lines.append("analyze assertions.sv")
    for rel in sorted(artifacts.wrapper_files):
        if not rel.startswith("wrappers/original/"):
            lines.append(f"analyze {rel}")
    lines += ["", "[assertions]"]
    for a in artifacts.assertions:
        where = "assertions.sv" if a.ip_id is None else artifacts.wrapper_path(a.ip_id)
        lines.append(f"assert {a.name} scope={a.scope} file={where}")
    for ip_id in sorted(artifacts.wrapper_patches, key=lambda i: cfg.ip_by_id(i).name):
        ip = cfg.ip_by_id(ip_id)
        lines += ["", f"[equivalence {ip.name}]",
                  f"original {artifacts.original_wrappers[ip_id]}",
                  f"patched {artifacts.wrapper_path(ip_id)}",
                  f"module {artifacts.wrapper_modules[ip_id]}"]
    return "\n".join(lines) + "\n"
