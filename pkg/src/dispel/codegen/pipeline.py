"""Assemble every output artifact from a set of resolved policies."""

from __future__ import annotations

import os
import re
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .. import __version__
from ..errors import InputFileError
from ..policy.ast import Compare, Const, Signal, conjoin, conjuncts
from ..policy.classify import Level
from ..policy.resolve import emission_order
from ..signals import MODE_SIGNAL
from ..soc import SocConfig
from .assertions import (Assertion, bus_assertion, infer_internal_widths, ip_assertion,
                         render_assertions_file)
from .central import action_assignments, build_central, create_cond, create_fsm, logic_type
from .expr import bool_depth, comparison_count
from .formal import emit_formal_script
from .wrapper import WrapperBlocks, WrapperScope, emit_wrapper_patch, find_wrapper, skeleton

HEADER = f"// Generated by dispel {__version__}. Do not edit."
CENTRAL_FILE = "dispel_central.sv"
ASSERTIONS_FILE = "assertions.sv"
FORMAL_FILE = "formal_script.txt"


@dataclass(frozen=True)
class Footprint:
    """Hardware a synthesized policy adds, summed over its bound IPs."""
    comparisons: int
    depth: int
    state_bits: int      # sum of states x register width over the policy's FSMs


@dataclass
class GeneratedArtifacts:
    central_module: str
    wrapper_patches: dict[int, list[str]]
    wrapper_files: dict[str, str]             # path relative to the output dir -> text
    wrapper_modules: dict[int, str]           # ip id -> patched module name
    original_wrappers: dict[int, str]         # ip id -> path of the unpatched wrapper
    assertions: list[Assertion]
    assertions_file: str = ""
    formal_script: str = ""
    footprints: dict[str, Footprint] = field(default_factory=dict)
    fsm_plans: dict[str, list] = field(default_factory=dict)
    locations: dict[str, list[str]] = field(default_factory=dict)
    policies: tuple = ()                      # resolved policies, file order

    def wrapper_path(self, ip_id: int) -> str:
        return f"wrappers/{self._ip_names[ip_id]}_spw.sv"

    def files(self) -> dict[str, str]:
        out = {CENTRAL_FILE: self.central_module, ASSERTIONS_FILE: self.assertions_file,
               FORMAL_FILE: self.formal_script}
        out.update(self.wrapper_files)
        return out

    _ip_names: dict = field(default_factory=dict, repr=False)


def footprint(rp, plans) -> Footprint:
    n = len(rp.binding.ids)
    parts = conjuncts(rp.residual)
    comparisons = comparison_count(rp.residual)
    if rp.mode is not None:
        parts = parts + [Compare("==", Signal(MODE_SIGNAL), Const(rp.mode))]
        comparisons += 1
    state_bits = sum(len(p.states) * p.counter_width for p in plans)
    return Footprint(comparisons * n, bool_depth(conjoin(parts)), state_bits)


def _module_name(text: str, fallback: str) -> str:
    m = re.search(r"^\s*module\s+(\w+)", text, re.MULTILINE)
    return m.group(1) if m else fallback


def _line_of(text: str, needle: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def _ip_blocks(ip_level, cfg: SocConfig, plans: dict) -> tuple[dict, list[Assertion]]:
    """Wrapper pieces for IP-level policies, keyed by IP id."""
    by_ip: dict[int, list] = {}
    for rp in ip_level:
        for ip_id in rp.binding.ids:
            by_ip.setdefault(ip_id, []).append(rp)
    blocks, asserts = {}, []
    for ip in cfg.ips:
        if ip.id not in by_ip:
            continue
        rps = by_ip[ip.id]
        blk = WrapperBlocks(ip, infer_internal_widths([rp.residual for rp in rps]))
        scope = WrapperScope(cfg, blk.internal)
        for rp in rps:
            if not rp.cls.synthesizable:
                a = ip_assertion(rp, cfg, ip.id, blk.internal)
                blk.assertions.append(a.text)
                asserts.append(a)
                continue
            flags = None
            if rp.cls.needs_fsm:
                fsm_plans, text, flags = create_fsm(rp, cfg, scope, ids=[ip.id])
                plans.setdefault(rp.name, []).extend(fsm_plans)
                for plan in fsm_plans:
                    blk.decls += [f"{logic_type(w)} {name};" for name, w in plan.registers]
                blk.seq.append(text)
            blk.comb.append(create_cond(rp, cfg, flags, scope, ids=[ip.id]))
            blk.driven.update(ch for ch, _ in
                              action_assignments(rp.action, rp.residual, cfg.bus_protocol))
        blocks[ip.id] = blk
    return blocks, asserts


def generate(resolved, cfg: SocConfig, wrapper_dir=None, header: str = HEADER) -> GeneratedArtifacts:
    """Central module, wrappers, assertions and formal script for ``resolved``.

    Output depends only on the inputs, so reruns are byte-identical.
    """
    order = emission_order(resolved)
    bus_syn = [rp for rp in order if rp.cls.level is Level.BUS and rp.cls.synthesizable]
    central, plans = build_central(bus_syn, cfg, header)
    ip_level = [rp for rp in order if rp.cls.level is Level.IP]
    blocks, ip_asserts = _ip_blocks(ip_level, cfg, plans)
    file_order = sorted(resolved, key=lambda r: r.policy.index)
    bus_asserts = [bus_assertion(rp, cfg) for rp in file_order
                   if rp.cls.level is Level.BUS and not rp.cls.synthesizable]
    ip_asserts.sort(key=lambda a: [rp.ident for rp in file_order].index(a.name))

    wrapper_files, modules, originals, patches = {}, {}, {}, {}
    for ip_id, blk in blocks.items():
        ip = blk.ip
        rel = f"wrappers/{ip.name}_spw.sv"
        user = find_wrapper(wrapper_dir, ip)
        if user is not None:
            try:
                original = user.read_text()
            except OSError as exc:
                raise InputFileError(user, exc.strerror or str(exc)) from exc
            wrapper_files[rel] = emit_wrapper_patch(ip, blk, cfg, original, user, header)
            originals[ip_id] = str(user)
        else:
            wrapper_files[rel] = emit_wrapper_patch(ip, blk, cfg, header=header)
            orig_rel = f"wrappers/original/{ip.name}_spw.sv"
            wrapper_files[orig_rel] = skeleton(WrapperBlocks(ip, blk.internal), cfg, header)
            originals[ip_id] = orig_rel
        modules[ip_id] = _module_name(wrapper_files[rel], f"{ip.name}_spw")
        patches[ip_id] = blk.fragments()

    art = GeneratedArtifacts(
        central_module=central,
        wrapper_patches=patches,
        wrapper_files=wrapper_files,
        wrapper_modules=modules,
        original_wrappers=originals,
        assertions=bus_asserts + ip_asserts,
        fsm_plans=plans,
        policies=tuple(file_order),
        _ip_names={ip.id: ip.name for ip in cfg.ips},
    )
    art.assertions_file = render_assertions_file(bus_asserts, ip_asserts, cfg, header)
    art.formal_script = emit_formal_script(art, cfg, header)
    for rp in file_order:
        if rp.cls.synthesizable:
            art.footprints[rp.name] = footprint(rp, plans.get(rp.name, []))
        art.locations[rp.name] = _locations(rp, art)
    return art


def _locations(rp, art: GeneratedArtifacts) -> list[str]:
    """``file:line`` of every place the policy was emitted."""
    out = []
    if rp.cls.level is Level.BUS:
        if rp.cls.synthesizable:
            targets = [(CENTRAL_FILE, art.central_module, f"begin : pol_{rp.ident}")]
        else:
            targets = [(ASSERTIONS_FILE, art.assertions_file, f"{rp.ident}: assert property")]
    else:
        needle = f"begin : pol_{rp.ident}" if rp.cls.synthesizable \
            else f"{rp.ident}: assert property"
        targets = []
        for ip_id in rp.binding.ids:
            rel = art.wrapper_path(ip_id)
            targets.append((rel, art.wrapper_files[rel], needle))
    for rel, text, needle in targets:
        line = _line_of(text, needle)
        if line is not None:
            out.append(f"{rel}:{line}")
    return out


def write_artifacts(files: dict[str, str], out_dir) -> Path:
    """Write ``files`` under ``out_dir`` all at once.

    Everything is written into a sibling temporary directory that replaces
    ``out_dir`` only after every file is on disk.
    """
    out = Path(out_dir)
    parent = out.parent if str(out.parent) else Path(".")
    try:
        parent.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=parent))
    except OSError as exc:
        raise InputFileError(out, f"cannot create output directory: {exc.strerror}") from exc
    try:
        for rel, text in sorted(files.items()):
            path = tmp / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        os.chmod(tmp, 0o755)
        if out.exists():
            old = Path(tempfile.mkdtemp(prefix=f".{out.name}.old.", dir=parent))
            old.rmdir()
            out.rename(old)
            tmp.rename(out)
            shutil.rmtree(old, ignore_errors=True)
        else:
            tmp.rename(out)
    except OSError as exc:
        shutil.rmtree(tmp, ignore_errors=True)
        raise InputFileError(out, f"cannot write artifacts: {exc.strerror or exc}") from exc
    return out
