import pytest
from hypothesis import given
from hypothesis import strategies as st

from dispel.policy.classify import Level
from dispel.policy.resolve import emission_order
from dispel.scoring import (ScoreInputs, ScoreWeights, dominant_category, format_score,
                            rank_policies, score_policy)
from dispel.soc import IpCategory

from conftest import resolve_doc, resolve_file

# (category, bits, attacks, level) -> score, hand-computed as bits*|attacks|*ip*level/100
SCORE_CASES = [
    (IpCategory.CRYPTO, 128, "CIA", Level.BUS, 19.2),
    (IpCategory.HASHING, 64, "CIA", Level.BUS, 7.68),
    (IpCategory.MEMORY, 32, "CA", Level.IP, 0.96),
    (IpCategory.DSP, 16, "A", Level.IP, 0.16),
    (IpCategory.CRYPTO, 128, "CIA", Level.IP, 9.6),
    (IpCategory.OTHER, 1, "A", Level.IP, 0.005),
]


@pytest.mark.parametrize("cat,bits,attacks,level,expected", SCORE_CASES)
def test_closed_form(cat, bits, attacks, level, expected):
    got = score_policy(ScoreInputs(cat, bits, frozenset(attacks), level))
    assert got == pytest.approx(expected, abs=1e-9)


def test_scored_fixture_end_to_end(cfg_scored):
    scores = [rp.score for rp in resolve_file("policies_scored.json", cfg_scored)]
    assert scores == pytest.approx([19.2, 7.68, 0.96, 0.16], abs=1e-9)


def test_format_score():
    assert [format_score(s) for s in (19.2, 7.68, 0.96, 0.16)] == ["19.2", "7.68", "0.96", "0.16"]


def test_custom_weights():
    w = ScoreWeights(ip={c: 1.0 for c in IpCategory}, level={Level.BUS: 2.0, Level.IP: 1.0},
                     normalizer=10.0)
    assert score_policy(ScoreInputs(IpCategory.DSP, 5, frozenset("CI"), Level.BUS), w) == 2.0


def test_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        ScoreInputs(IpCategory.DSP, 0, frozenset("C"), Level.BUS)
    with pytest.raises(ValueError):
        ScoreInputs(IpCategory.DSP, 1, frozenset(), Level.BUS)


def test_dominant_category_picks_heaviest():
    assert dominant_category([IpCategory.PERIPHERAL, IpCategory.CRYPTO]) is IpCategory.CRYPTO
    assert dominant_category([]) is IpCategory.OTHER


_inputs = st.builds(ScoreInputs, st.sampled_from(list(IpCategory)), st.integers(1, 4096),
                    st.frozensets(st.sampled_from("CIA"), min_size=1), st.sampled_from(list(Level)))


@given(_inputs, st.integers(1, 100))
def test_monotone_in_bits(s, extra):
    bigger = ScoreInputs(s.ip_category, s.bits_protected + extra, s.attack_types, s.policy_level)
    assert score_policy(bigger) > score_policy(s)


@given(_inputs)
def test_bus_outranks_ip(s):
    bus = ScoreInputs(s.ip_category, s.bits_protected, s.attack_types, Level.BUS)
    ip = ScoreInputs(s.ip_category, s.bits_protected, s.attack_types, Level.IP)
    assert score_policy(bus) > score_policy(ip) > 0


def test_rank_is_stable_on_ties():
    assert rank_policies([("a", 1.0), ("b", 2.0), ("c", 1.0)]) == [("b", 2.0), ("a", 1.0),
                                                                   ("c", 1.0)]


def test_emission_order_puts_highest_score_last(cfg_scored):
    order = [rp.name for rp in emission_order(resolve_file("policies_scored.json", cfg_scored))]
    assert order == ["P4", "P3", "P2", "P1"]


def test_emission_order_ties_keep_earlier_policy_last(cfg_cep):
    body = {"predicate": "(slave_no = 1), (rdata = 1)", "action": "reject", "timing": "mode = 0"}
    resolved = resolve_doc({"first": body, "second": body}, cfg_cep)
    assert [rp.name for rp in emission_order(resolved)] == ["second", "first"]
