"""Severity scores used to rank policies for discard under overhead bounds.

score = bits_protected * |attack_types| * ip_weight * level_weight / 100
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .policy.classify import Level
from .soc import IpCategory

DEFAULT_IP_WEIGHTS = {
    IpCategory.CRYPTO: 5.0,
    IpCategory.HASHING: 4.0,
    IpCategory.MEMORY: 3.0,
    IpCategory.DSP: 2.0,
    IpCategory.ACCELERATOR: 2.0,
    IpCategory.PERIPHERAL: 1.0,
    IpCategory.OTHER: 1.0,
}
DEFAULT_LEVEL_WEIGHTS = {Level.BUS: 1.0, Level.IP: 0.5}
NORMALIZER = 100.0


@dataclass(frozen=True)
class ScoreWeights:
    ip: dict = field(default_factory=lambda: dict(DEFAULT_IP_WEIGHTS))
    level: dict = field(default_factory=lambda: dict(DEFAULT_LEVEL_WEIGHTS))
    normalizer: float = NORMALIZER


@dataclass(frozen=True)
class ScoreInputs:
    ip_category: IpCategory
    bits_protected: int
    attack_types: frozenset
    policy_level: Level

    def __post_init__(self):
        if self.bits_protected < 1:
            raise ValueError("bits_protected must be >= 1")
        if not self.attack_types:
            raise ValueError("attack_types must be non-empty")


def score_policy(s: ScoreInputs, weights: ScoreWeights | None = None) -> float:
    w = weights or ScoreWeights()
    return (s.bits_protected * len(s.attack_types) * w.ip[s.ip_category]
            * w.level[s.policy_level] / w.normalizer)


def dominant_category(categories, weights: ScoreWeights | None = None) -> IpCategory:
    """Category with the highest weight; a policy bound to several IPs scores as the most severe."""
    w = weights or ScoreWeights()
    cats = list(categories) or [IpCategory.OTHER]
    return max(cats, key=lambda c: w.ip[c])


def rank_policies(scored):
    """Sort ``(item, score)`` pairs by descending score; ties keep input order."""
    return sorted(scored, key=lambda pair: -pair[1])


def format_score(score: float) -> str:
    return format(score, ".10g")
