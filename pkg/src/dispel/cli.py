"""Command-line front end: compile, check, score and simulate.

Exit codes: 0 success, 1 input or diagnostic failure, 2 overhead bounds
cannot be met, 3 the emitted code diverged from the reference semantics.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .codegen.pipeline import generate, write_artifacts
from .constraints import enforce_constraints, load_constraints, parse_backend
from .errors import ConstraintsUnsatisfiable, DispelError, DivergenceFound, PolicyError
from .policy.parser import parse_policies
from .policy.resolve import resolve_all
from .scoring import dominant_category, format_score
from .sim.diffcheck import checked_policies, compare, differential_check
from .sim.golden import run_trace
from .sim.reinterp import EmittedSim, parse_emitted
from .sim.transaction import load_trace
from .soc import load_soc_config

log = logging.getLogger("dispel")

EXIT_OK, EXIT_INPUT, EXIT_UNSAT, EXIT_DIVERGENCE = 0, 1, 2, 3


class _Collector(logging.Handler):
    """Keeps warnings so they can be copied into report.json."""

    def __init__(self):
        super().__init__(logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record):
        self.messages.append(record.getMessage())


def _setup_logging(verbose: bool) -> _Collector:
    root = logging.getLogger()
    root.handlers.clear()
    stderr = logging.StreamHandler(sys.stderr)
    stderr.setFormatter(logging.Formatter("dispel: %(levelname)s: %(message)s"))
    root.addHandler(stderr)
    collector = _Collector()
    root.addHandler(collector)
    root.setLevel(logging.INFO if verbose else logging.WARNING)
    return collector


def _error(msg: str):
    print(f"dispel: error: {msg}", file=sys.stderr)


def _policy_diag(exc: PolicyError, policies, path) -> str:
    lines = {p.name: p.line for p in policies}
    line = lines.get(exc.policy)
    where = f"{path}:{line}: " if line else f"{path}: "
    return where + str(exc)


def _load(args):
    cfg = load_soc_config(args.soc)
    policies = parse_policies(args.policies)
    resolved, errors = resolve_all(policies, cfg)
    return cfg, policies, resolved, errors


def _report_errors(errors, policies, path) -> bool:
    for exc in errors:
        _error(_policy_diag(exc, policies, path))
    return bool(errors)


def _classification(rp) -> str:
    if not rp.cls.synthesizable:
        return f"{rp.cls.level.value} (assertion)"
    return rp.cls.level.value + ("+FSM" if rp.cls.needs_fsm else "")


def _target(rp, cfg) -> dict:
    return {"side": rp.binding.side, "ids": list(rp.binding.ids),
            "ips": [cfg.ip_by_id(i).name for i in rp.binding.ids]}


# -- compile -------------------------------------------------------------------


def build_report(resolved, retained, cfg, artifacts, iterations, diagnostics, path) -> dict:
    kept = {rp.name for rp in retained}
    records = []
    for rp in sorted(resolved, key=lambda r: r.policy.index):
        records.append({
            "name": rp.name,
            "source": f"{path}:{rp.policy.line}",
            "classification": {"level": rp.cls.level.value,
                               "synthesizable": rp.cls.synthesizable,
                               "needs_fsm": rp.cls.needs_fsm},
            "target": _target(rp, cfg),
            "score": rp.score,
            "retained": rp.name in kept,
            "emitted": artifacts.locations.get(rp.name, []) if rp.name in kept else [],
        })
    return {"version": __version__, "policies": records, "iterations": iterations,
            "diagnostics": diagnostics}


def cmd_compile(args, collector: _Collector) -> int:
    cfg, policies, resolved, errors = _load(args)
    if _report_errors(errors, policies, args.policies):
        return EXIT_INPUT
    retained, iterations = resolved, []
    if args.constraints:
        spec, mock = load_constraints(args.constraints)
        backend = parse_backend(args.cost_backend, mock)
        try:
            retained, iterations = enforce_constraints(resolved, cfg, spec, backend,
                                                       wrapper_dir=args.wrapper_dir)
        except ConstraintsUnsatisfiable as exc:
            _error(str(exc))
            for entry in exc.log:
                print(json.dumps(entry), file=sys.stderr)
            return EXIT_UNSAT
        dropped = [rp.name for rp in resolved if rp not in retained]
        if dropped:
            log.warning("discarded to meet overhead bounds: %s", ", ".join(dropped))
    artifacts = generate(retained, cfg, args.wrapper_dir)
    files = artifacts.files()
    report = build_report(resolved, retained, cfg, artifacts, iterations,
                          list(collector.messages), args.policies)
    files["report.json"] = json.dumps(report, indent=2) + "\n"
    write_artifacts(files, args.out)
    if args.json:
        print(files["report.json"], end="")
    return EXIT_OK


# -- check / score -------------------------------------------------------------


def cmd_check(args, collector: _Collector) -> int:
    cfg, policies, resolved, errors = _load(args)
    rows = [(rp.name, _classification(rp), rp.binding.side,
             ",".join(cfg.ip_by_id(i).name for i in rp.binding.ids)) for rp in resolved]
    if args.json:
        print(json.dumps([{"name": rp.name, "classification": _classification(rp),
                           "target": _target(rp, cfg)} for rp in resolved], indent=2))
    elif rows:
        _table(("policy", "class", "side", "target"), rows)
    return EXIT_INPUT if _report_errors(errors, policies, args.policies) else EXIT_OK


def cmd_score(args, collector: _Collector) -> int:
    cfg, policies, resolved, errors = _load(args)
    if _report_errors(errors, policies, args.policies):
        return EXIT_INPUT
    ranked = sorted(resolved, key=lambda rp: (-rp.score, rp.policy.index))
    records = []
    for rank, rp in enumerate(ranked, start=1):
        category = dominant_category(cfg.ip_by_id(i).category for i in rp.binding.ids)
        records.append({"rank": rank, "name": rp.name, "ip_type": category.value,
                        "bits_protected": rp.policy.bits_protected,
                        "attack_types": sorted(rp.policy.attack_types, key="CIA".index),
                        "level": rp.cls.level.value, "score": rp.score})
    if args.json:
        print(json.dumps(records, indent=2))
    elif records:
        _table(("rank", "policy", "ip_type", "bits", "attacks", "level", "score"),
               [(r["rank"], r["name"], r["ip_type"], r["bits_protected"],
                 ",".join(r["attack_types"]), r["level"], format_score(r["score"]))
                for r in records])
    return EXIT_OK


def _table(header, rows):
    cols = list(zip(header, *rows))
    widths = [max(len(str(c)) for c in col) for col in cols]
    for row in (header, *rows):
        print("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())


# -- simulate ------------------------------------------------------------------


def cmd_simulate(args, collector: _Collector) -> int:
    cfg, policies, resolved, errors = _load(args)
    if _report_errors(errors, policies, args.policies):
        return EXIT_INPUT
    if args.fuzz is not None:
        if args.fuzz < 1:
            _error("--fuzz needs a positive number of trials")
            return EXIT_INPUT
        try:
            report = differential_check(resolved, cfg, args.fuzz, args.seed, wrapper_dir=None)
        except DivergenceFound as exc:
            return _divergence(exc)
        out = {"trials": report.trials, "policies": report.policies, "seed": report.seed,
               "divergences": 0}
        _emit(out, args)
        return EXIT_OK
    if args.trace is None:
        _error("simulate needs --trace or --fuzz")
        return EXIT_INPUT
    trace = load_trace(args.trace, cfg)
    enforced, diffs = run_trace(trace, resolved, cfg)
    try:
        _cross_check(trace, resolved, cfg)
    except DivergenceFound as exc:
        return _divergence(exc)
    _emit({"enforced": [tx.to_dict() for tx in enforced],
           "diffs": [d.to_dict() for d in diffs if d]}, args)
    return EXIT_OK


def _cross_check(trace, resolved, cfg):
    """Replay the trace through the emitted central module as well."""
    policies = checked_policies(resolved)
    golden, _ = run_trace(trace, policies, cfg)
    sim = EmittedSim(parse_emitted(generate(policies, cfg).central_module), cfg)
    for i, (tx, want) in enumerate(zip(trace, golden)):
        compare(want, sim.step(tx), i)


def _divergence(exc: DivergenceFound) -> int:
    _error(str(exc))
    print(json.dumps(exc.transaction.to_dict()), file=sys.stderr)
    return EXIT_DIVERGENCE


def _emit(doc, args):
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.json or not args.out:
        print(text, end="")


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dispel",
                                description="Compile SoC security policies into enforcement RTL.")
    p.add_argument("--version", action="version", version=f"dispel {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--policies", required=True, help="policy JSON file")
        sp.add_argument("--soc", required=True, help="SoC configuration JSON file")
        sp.add_argument("--json", action="store_true", help="machine-readable output on stdout")

    c = sub.add_parser("compile", help="generate the central module, wrappers and scripts")
    common(c)
    c.add_argument("--out", required=True, help="output directory (replaced atomically)")
    c.add_argument("--constraints", help="overhead bounds JSON; enables the discard loop")
    c.add_argument("--cost-backend", default="mock", metavar="mock|cmd:<path>",
                   help="cost estimator for the discard loop (default: mock)")
    c.add_argument("--wrapper-dir", help="directory with existing <ip>_spw.sv wrappers")
    c.set_defaults(func=cmd_compile)

    k = sub.add_parser("check", help="parse and classify policies only")
    common(k)
    k.set_defaults(func=cmd_check)

    s = sub.add_parser("score", help="print severity scores in rank order")
    common(s)
    s.set_defaults(func=cmd_score)

    m = sub.add_parser("simulate", help="run a trace or a differential fuzz")
    common(m)
    m.add_argument("--trace", help="trace JSON: array of transactions")
    m.add_argument("--out", help="where to write the enforced trace and diffs")
    m.add_argument("--fuzz", type=int, metavar="N", help="differential check over N random "
                                                          "transactions instead of a trace")
    m.add_argument("--seed", type=int, default=0, help="seed for --fuzz (default: 0)")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    collector = _setup_logging(args.verbose)
    try:
        return args.func(args, collector)
    except ConstraintsUnsatisfiable as exc:
        _error(str(exc))
        return EXIT_UNSAT
    except DivergenceFound as exc:
        return _divergence(exc)
    except (DispelError, ValueError) as exc:
        _error(str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _error(f"{exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
