from pathlib import Path

import pytest

from dispel.policy.parser import parse_policies, policies_from_dict
from dispel.policy.resolve import resolve_all
from dispel.soc import load_soc_config

DATA = Path(__file__).parent / "data"

# lines recorded by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES = []


def load_cfg(name):
    return load_soc_config(DATA / name)


def resolve_doc(doc, cfg):
    """Resolve an in-memory policy document; fail the test on any policy error."""
    resolved, errors = resolve_all(policies_from_dict(doc), cfg)
    assert not errors, [str(e) for e in errors]
    return resolved


def resolve_file(name, cfg):
    resolved, errors = resolve_all(parse_policies(DATA / name), cfg)
    assert not errors, [str(e) for e in errors]
    return resolved


@pytest.fixture
def cfg_2ip():
    return load_cfg("soc_2ip.json")


@pytest.fixture
def cfg_cep():
    return load_cfg("soc_cep.json")


@pytest.fixture
def cfg_scored():
    return load_cfg("soc_scored.json")


@pytest.fixture
def cfg_wb():
    return load_cfg("soc_wishbone_crypto.json")


# Overhead scenario for the discard loop. With these constants and a zero-policy
# baseline, power overhead is 0.1 % per comparison and delay overhead 1.5 % per
# logic level, so the hand-computed log is 71/58/46 comparisons at 20/18/16
# policies (7.1/5.8/4.6 % power) and depth 4/4/3 (6/6/4.5 % delay).
SCENARIO_MOCK = dict(A0=1e6, a=100.0, b=20.0, D0=2.0, d=0.03, P0=5.0, p=5e-5)
SCENARIO_BOUNDS = dict(max_area_pct=5.0, max_delay_pct=5.0, max_power_pct=5.0)


def _conj(n, base):
    return " and ".join(f"wdata != 0x{base + k:x}" for k in range(n))


def scenario_doc():
    """20 policies, highest score first; the last four are the wide, deep ones."""
    widths = [3] * 14 + [2] * 2 + [6, 6] + [6, 7]
    doc = {}
    for i, n in enumerate(widths):
        doc[f"q{i:02d}"] = {"predicate": f"(slave_no = 1), ({_conj(n, 16 * i)})",
                            "action": "reject", "timing": "always",
                            "bits_protected": 100 - i}
    return doc


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
