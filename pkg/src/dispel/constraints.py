"""Overhead bounds and the discard loop that enforces them.

Each round regenerates the artifacts for the retained policies, asks a cost
backend for area/delay/power, and drops the lowest-scoring tenth of the
policies while any bound is exceeded.
"""

from __future__ import annotations

import json
import logging
import math
import subprocess
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Protocol

from .codegen.pipeline import GeneratedArtifacts, generate
from .errors import BackendFailure, ConstraintsUnsatisfiable, InvalidConstraints
from .soc import SocConfig, read_json

log = logging.getLogger(__name__)

DISCARD_FRACTION = 0.10
DIMENSIONS = ("area", "delay", "power")


@dataclass(frozen=True)
class CostReport:
    area: float     # um^2
    delay: float    # ns
    power: float    # mW

    def __post_init__(self):
        for dim in DIMENSIONS:
            value = getattr(self, dim)
            if not isinstance(value, (int, float)) or isinstance(value, bool) \
                    or not math.isfinite(value) or value < 0:
                raise ValueError(f"{dim} must be a finite non-negative number, got {value!r}")

    @classmethod
    def from_json(cls, doc) -> "CostReport":
        """Build from ``{"area_um2", "delay_ns", "power_mw"}``."""
        if not isinstance(doc, dict):
            raise ValueError("cost report must be a JSON object")
        try:
            return cls(doc["area_um2"], doc["delay_ns"], doc["power_mw"])
        except KeyError as exc:
            raise ValueError(f"cost report is missing {exc.args[0]!r}") from None


@dataclass(frozen=True)
class ConstraintSpec:
    max_area_pct: float | None = None
    max_delay_pct: float | None = None
    max_power_pct: float | None = None
    baseline: CostReport | None = None

    def __post_init__(self):
        for dim in DIMENSIONS:
            bound = self.bound(dim)
            if bound is not None and (isinstance(bound, bool) or not isinstance(bound, (int, float))
                                      or bound < 0):
                raise ValueError(f"max_{dim}_pct must be a non-negative number")

    def bound(self, dim: str) -> float | None:
        return getattr(self, f"max_{dim}_pct")

    @property
    def constrained(self) -> list[str]:
        return [d for d in DIMENSIONS if self.bound(d) is not None]


class CostBackend(Protocol):
    def estimate(self, artifacts: GeneratedArtifacts) -> CostReport: ...


@dataclass(frozen=True)
class MockEstimator:
    """Deterministic analytic stand-in for synthesis.

    area  = A0 + a * comparisons + b * (FSM states x register width)
    delay = D0 + d * deepest boolean condition
    power = P0 + p * (area - A0)
    """
    A0: float = 10_000.0
    a: float = 50.0
    b: float = 20.0
    D0: float = 2.0
    d: float = 0.05
    P0: float = 1.0
    p: float = 1e-4

    def estimate(self, artifacts: GeneratedArtifacts) -> CostReport:
        prints = artifacts.footprints.values()
        extra = self.a * sum(f.comparisons for f in prints) \
            + self.b * sum(f.state_bits for f in prints)
        depth = max((f.depth for f in prints), default=0)
        return CostReport(self.A0 + extra, self.D0 + self.d * depth, self.P0 + self.p * extra)


def estimate_mock(artifacts: GeneratedArtifacts, model: MockEstimator | None = None) -> CostReport:
    return (model or MockEstimator()).estimate(artifacts)


@dataclass(frozen=True)
class ExternalCommand:
    """Runs ``program <dir>`` on the written artifacts and reads a JSON cost report."""
    program: str
    timeout: float = 3600.0

    def estimate(self, artifacts: GeneratedArtifacts) -> CostReport:
        with tempfile.TemporaryDirectory(prefix="dispel-cost-") as tmp:
            for rel, text in artifacts.files().items():
                path = Path(tmp) / rel
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text)
            try:
                proc = subprocess.run([self.program, tmp], capture_output=True, text=True,
                                      timeout=self.timeout, check=False)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise BackendFailure(f"cost backend {self.program}: {exc}") from exc
        if proc.returncode != 0:
            detail = proc.stderr.strip().splitlines()[-1:] or [""]
            raise BackendFailure(f"cost backend {self.program} exited with status "
                                 f"{proc.returncode}: {detail[0]}")
        try:
            return CostReport.from_json(json.loads(proc.stdout))
        except ValueError as exc:
            raise BackendFailure(f"cost backend {self.program} printed an invalid report: {exc}") \
                from exc


def parse_backend(spec: str, mock: MockEstimator | None = None) -> CostBackend:
    """``mock`` or ``cmd:<path>``."""
    if spec == "mock":
        return mock or MockEstimator()
    if spec.startswith("cmd:") and len(spec) > 4:
        return ExternalCommand(spec[4:])
    raise ValueError(f"cost backend must be 'mock' or 'cmd:<path>', got {spec!r}")


def load_constraints(path) -> tuple[ConstraintSpec, MockEstimator]:
    """Constraint bounds, optional baseline, and optional mock-model constants."""
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise InvalidConstraints("constraints file must be a JSON object", path)
    known = {"max_area_pct", "max_delay_pct", "max_power_pct", "baseline", "mock"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise InvalidConstraints(f"unknown keys {unknown}", path)
    try:
        baseline = CostReport.from_json(doc["baseline"]) if "baseline" in doc else None
        spec = ConstraintSpec(doc.get("max_area_pct"), doc.get("max_delay_pct"),
                              doc.get("max_power_pct"), baseline)
        mock = doc.get("mock", {})
        names = {f.name for f in fields(MockEstimator)}
        if not isinstance(mock, dict) or set(mock) - names:
            raise ValueError(f"mock must be an object with keys from {sorted(names)}")
        model = MockEstimator(**{k: float(v) for k, v in mock.items()})
    except (ValueError, TypeError) as exc:
        raise InvalidConstraints(str(exc), path) from None
    if not spec.constrained:
        raise InvalidConstraints("at least one max_*_pct bound is required", path)
    return spec, model


def overhead_pct(cost: CostReport, baseline: CostReport) -> dict[str, float]:
    return {dim: (getattr(cost, dim) - getattr(baseline, dim)) / getattr(baseline, dim) * 100.0
            for dim in DIMENSIONS if getattr(baseline, dim) > 0}


def enforce_constraints(policies, cfg: SocConfig, constraints: ConstraintSpec,
                        backend: CostBackend, baseline: CostReport | None = None,
                        wrapper_dir=None):
    """Discard lowest-score policies until every overhead bound holds.

    ``policies`` are resolved policies.  Returns ``(retained, log)``: the
    retained policies in file order and one log entry per evaluation.
    The baseline is, in order of preference, the argument, the one in
    ``constraints``, or the backend's estimate for zero policies.
    """
    if not constraints.constrained:
        raise InvalidConstraints("at least one overhead bound is required")
    baseline = baseline or constraints.baseline \
        or backend.estimate(generate([], cfg, wrapper_dir))
    for dim in constraints.constrained:
        if getattr(baseline, dim) <= 0:
            raise InvalidConstraints(f"baseline {dim} must be positive to bound its overhead")

    # highest score first; equal scores keep file order, so the later one goes first
    retained = sorted(policies, key=lambda rp: (-rp.score, rp.policy.index))
    entries = []
    while True:
        cost = backend.estimate(generate(retained, cfg, wrapper_dir))
        pct = overhead_pct(cost, baseline)
        entries.append({"iteration": len(entries), "retained": len(retained),
                        **{f"{dim}_pct": pct.get(dim) for dim in DIMENSIONS}})
        violated = [d for d in constraints.constrained if pct[d] > constraints.bound(d)]
        log.info("iteration %d: %d policies, overhead %s", len(entries) - 1, len(retained),
                 ", ".join(f"{d} {pct[d]:.3g}%" for d in DIMENSIONS if d in pct))
        if not violated:
            return sorted(retained, key=lambda rp: rp.policy.index), entries
        drop = math.ceil(len(retained) * DISCARD_FRACTION)
        if drop >= len(retained):
            raise ConstraintsUnsatisfiable(
                f"overhead bounds still exceeded ({', '.join(violated)}) with "
                f"{len(retained)} polic{'y' if len(retained) == 1 else 'ies'} left; "
                "discarding more would leave none", entries)
        retained = retained[:-drop]


def cost_dict(cost: CostReport) -> dict:
    d = asdict(cost)
    return {"area_um2": d["area"], "delay_ns": d["delay"], "power_mw": d["power"]}
