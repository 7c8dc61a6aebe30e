"""Front-end driver: turn a source ``Policy`` into a fully resolved one."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import AssignmentToInput, PolicyError
from ..scoring import ScoreInputs, ScoreWeights, dominant_category, score_policy
from ..signals import CHANNELS, channel_of
from ..soc import SocConfig
from .ast import Assignments, CycleBound, ModeEquals, Sequence, signals
from .classify import (PolicyClass, TargetBinding, classify_policy, cycle_bound,
                       extract_id_flag, is_internal, replace_action_keywords,
                       replace_keywords, split_selectors)
from .parser import Policy, parse_action, parse_predicate, parse_timing


@dataclass(frozen=True)
class ResolvedPolicy:
    policy: Policy
    ident: str                 # policy name made safe for HDL identifiers
    predicate: object          # keyword-resolved predicate
    timing: object
    action: object             # keyword-resolved action
    cls: PolicyClass
    binding: TargetBinding
    residual: object           # predicate without selectors
    bound: CycleBound | None   # from a clock_cycles selector or a CycleBound timing
    score: float

    @property
    def name(self) -> str:
        return self.policy.name

    @property
    def fsm_kind(self) -> str | None:
        if not self.cls.needs_fsm:
            return None
        return "counter" if self.bound is not None else "sequence"

    @property
    def mode(self) -> int | None:
        return self.timing.mode if isinstance(self.timing, ModeEquals) else None

    @property
    def sequence(self) -> Sequence | None:
        return self.residual if isinstance(self.residual, Sequence) else None


def sanitize(name: str) -> str:
    ident = re.sub(r"\W", "_", name, flags=re.ASCII)
    if not ident or ident[0].isdigit():
        ident = "p_" + ident
    return ident


def make_idents(names) -> list[str]:
    """Unique HDL-safe identifiers, one per name; clashes get an index suffix."""
    used, out = set(), []
    for i, name in enumerate(names):
        ident = base = sanitize(name)
        while ident.lower() in used:
            ident = f"{base}_{i}"
            i += 1
        used.add(ident.lower())
        out.append(ident)
    return out


def _check_signal_widths(node):
    for sig in signals(node):
        ch = channel_of(sig.name) if sig.qualifier is None else None
        if ch is not None and sig.msb is not None and sig.msb >= CHANNELS[ch].width:
            raise PolicyError(f"bit {sig.msb} is outside {CHANNELS[ch].width}-bit {sig.name}")


def check_action(action, cfg: SocConfig) -> None:
    if not isinstance(action, Assignments):
        return
    for sig, val in action.items:
        if sig.name in (cfg.clock_name, cfg.reset_name):
            raise AssignmentToInput(sig.name, "clock and reset are inputs")
        if is_internal(sig):
            raise AssignmentToInput(sig.name, "only bus channel signals are drivable")
        width = CHANNELS[channel_of(sig.name)].width
        if val.value >> width:
            raise PolicyError(f"value {val.value:#x} does not fit in {width}-bit {sig.name}")


def resolve_policy(pol: Policy, cfg: SocConfig, ident: str | None = None,
                   weights: ScoreWeights | None = None) -> ResolvedPolicy:
    """Parse, translate, classify, bind and score one policy.

    Policy errors raised on the way are tagged with the policy name.
    """
    try:
        predicate = replace_keywords(parse_predicate(pol.predicate_src), cfg.bus_protocol)
        timing = parse_timing(pol.timing_src)
        action = replace_action_keywords(parse_action(pol.action_src), cfg.bus_protocol)
        _check_signal_widths(predicate)
        check_action(action, cfg)
        cls = classify_policy(pol, predicate, cfg, timing)
        binding = extract_id_flag(predicate, cfg, cls.level)
        bound = cycle_bound(predicate, timing)
        residual = split_selectors(predicate)[1]
    except PolicyError as exc:
        if exc.policy is None:
            exc.policy = pol.name
        raise
    category = dominant_category([cfg.ip_by_id(i).category for i in binding.ids], weights)
    score = score_policy(ScoreInputs(category, pol.bits_protected, pol.attack_types, cls.level),
                         weights)
    return ResolvedPolicy(
        policy=pol,
        ident=ident or sanitize(pol.name),
        predicate=predicate,
        timing=timing,
        action=action,
        cls=cls,
        binding=binding,
        residual=residual,
        bound=bound,
        score=score,
    )


def resolve_all(policies, cfg: SocConfig, weights: ScoreWeights | None = None):
    """Resolve every policy, collecting errors instead of stopping at the first.

    Returns ``(resolved, errors)`` with both lists in file order.
    """
    idents = make_idents([p.name for p in policies])
    resolved, errors = [], []
    for pol, ident in zip(policies, idents):
        try:
            resolved.append(resolve_policy(pol, cfg, ident, weights))
        except PolicyError as exc:
            errors.append(exc)
    return resolved, errors


def emission_order(resolved) -> list[ResolvedPolicy]:
    """Ascending score so higher scores are emitted later and win conflicts.

    Among equal scores the earlier policy in the file is emitted last.
    """
    return sorted(resolved, key=lambda r: (r.score, -r.policy.index))

