"""
Tests for the finiteness decision procedure
"""

from pathlib import Path

import pytest
import yaml
from pydantic import ValidationError
from src.propp_toolkit.core.verdicts import (
    ANCHORS,
    Conclusion,
    FmInput,
    Prop21Outcome,
    audit_verdict,
    fm_verdict,
    poincare3_pairs,
    prop21_rule,
    prop22_check,
    prop23_allowed_pairs,
    thm31_deduction_solver,
)
from src.propp_toolkit.errors import ContradictoryPremisesError, MissingPremiseError

GOLDEN = yaml.safe_load((Path(__file__).parent / "fixtures" / "golden_verdicts.yaml").read_text())["rows"]


@pytest.mark.parametrize("row", GOLDEN, ids=lambda r: f"{r['d_plus']}-{r['d_minus']}-{r['mu_p_in_k']}-{r['first_layer_unramified']}")
def test_golden_verdicts(row):
    """Test every golden row and audit its reasoning chain"""
    inp = FmInput(**{k: v for k, v in row.items() if k != "conclusion"})
    verdict = fm_verdict(inp)
    assert verdict.conclusion == Conclusion(row["conclusion"])
    assert audit_verdict(inp, verdict) == []


def test_chain_order():
    """Test that the chain lists rules in the order they were tried"""
    verdict = fm_verdict(FmInput(d_plus=1, d_minus=0, mu_p_in_k=True, first_layer_unramified=True))
    assert [s.rule for s in verdict.reasoning_chain] == [
        "prop21_rule",
        "thm31_conditions",
        "thm32_not_uniform",
        "thm33_high_layers",
    ]
    assert verdict.conclusion == Conclusion.INCONCLUSIVE


@pytest.mark.parametrize(
    "inp",
    [
        FmInput(d_plus=2, d_minus=1, mu_p_in_k=False),
        FmInput(d_plus=1, d_minus=0, mu_p_in_k=True, first_layer_unramified=True),
    ],
)
def test_anchors_quote_conclusions(inp):
    """Test that every chain step cites its rule's premises and quoted conclusion"""
    for step in fm_verdict(inp).reasoning_chain:
        assert step.anchor == ANCHORS[step.rule]
        premises, conclusion = step.anchor.split(" => ")
        assert premises
        assert conclusion.startswith('"') and conclusion.endswith('"')


def test_high_layers_rule():
    """Test the Iwasawa rule when its premises are declared"""
    inp = FmInput(
        d_plus=1,
        d_minus=0,
        mu_p_in_k=True,
        first_layer_unramified=True,
        mu_invariant_zero=True,
        n_at_least_n0=True,
    )
    verdict = fm_verdict(inp)
    assert verdict.conclusion == Conclusion.FINITE_IF_POWERFUL_AT_HIGH_LAYERS
    assert audit_verdict(inp, verdict) == []


def test_rank_rule_records_deduction():
    """Test that the finite verdict carries the deduction steps"""
    verdict = fm_verdict(FmInput(d_plus=2, d_minus=1, mu_p_in_k=False))
    rules = [s.rule for s in verdict.reasoning_chain]
    assert rules[:2] == ["prop21_rule", "thm31_conditions"]
    assert "thm31_deduction_solver" in rules
    assert verdict.reasoning_chain[-1].rule == "prop23_allowed_pairs"
    assert verdict.reasoning_chain[-1].satisfied


def test_missing_d_minus():
    """Test that d_minus is required when mu_p is not in k"""
    with pytest.raises(MissingPremiseError):
        fm_verdict(FmInput(d_plus=2, mu_p_in_k=False))


def test_missing_ramification_premise():
    """Test that d+ = 1 with mu_p in k needs the ramification premise"""
    with pytest.raises(MissingPremiseError):
        fm_verdict(FmInput(d_plus=1, d_minus=2, mu_p_in_k=True))


def test_contradictory_premises():
    """Test that n >= n0 cannot be declared with a nonzero mu-invariant"""
    with pytest.raises(ContradictoryPremisesError):
        fm_verdict(FmInput(d_plus=0, mu_p_in_k=True, mu_invariant_zero=False, n_at_least_n0=True))


def test_negative_rank_rejected():
    """Test input validation of the ranks"""
    with pytest.raises(ValidationError):
        FmInput(d_plus=-1, mu_p_in_k=True)


def test_group_label():
    """Test the unramified and S-ramified labels"""
    plain = fm_verdict(FmInput(d_plus=0, mu_p_in_k=True))
    restricted = fm_verdict(FmInput(d_plus=0, mu_p_in_k=True, s_variant=True))
    assert plain.galois_group == "G(L(p)|k), Cl"
    assert restricted.galois_group == "G(L_S(p)|k), Cl_S"


def test_audit_catches_tampering():
    """Test that an edited conclusion or premise is reported"""
    inp = FmInput(d_plus=2, d_minus=1, mu_p_in_k=True)
    verdict = fm_verdict(inp)
    forged = verdict.model_copy(update={"conclusion": Conclusion.INCONCLUSIVE})
    assert audit_verdict(inp, forged)

    steps = [s.model_copy(deep=True) for s in verdict.reasoning_chain]
    steps[0].premises["d_plus = 0"] = True
    forged = verdict.model_copy(update={"reasoning_chain": steps})
    assert audit_verdict(inp, forged)


@pytest.mark.parametrize(
    "d_plus,powerful,ab_finite,outcome",
    [
        (0, True, True, Prop21Outcome.ABELIAN_HENCE_FINITE),
        (0, True, False, Prop21Outcome.ABELIAN),
        (0, False, True, Prop21Outcome.NOT_APPLICABLE),
        (1, True, True, Prop21Outcome.NOT_APPLICABLE),
    ],
)
def test_prop21_rule(d_plus, powerful, ab_finite, outcome):
    """Test the abelian criterion for d+ = 0"""
    assert prop21_rule(d_plus, powerful, ab_finite) == outcome


def test_rank_inequalities():
    """Test both inequalities, including a failing pair"""
    assert prop22_check(1, 2, 0, 0) == (True, True)
    assert prop22_check(3, 0, 0, 0) == (True, True)
    assert prop22_check(2, 1, 0, 0) == (False, True)
    assert prop22_check(0, 3, 0, 0) == (True, False)


def test_poincare_pairs():
    """Test that the derived pairs match the stated table"""
    assert poincare3_pairs() == prop23_allowed_pairs() == {(1, 2), (3, 0)}


@pytest.mark.parametrize("delta,survivors", [(0, set()), (1, {(2, 1)})])
def test_deduction_solver(delta, survivors):
    """Test the pairs surviving d+ d- <= d- + delta"""
    assert thm31_deduction_solver(range(11), range(11), delta) == survivors
    assert thm31_deduction_solver(range(11), range(11), delta).isdisjoint(prop23_allowed_pairs())
