"""
Verdicts - the finiteness decision procedure over declared arithmetic data

Inputs are class-group ranks, the mu_p flag and ramification / Iwasawa
premises; none of them is computed here. Every verdict carries the chain of
rules that was tried, and each rule names the premises it relied on so the
chain can be re-audited against the input.
"""

from enum import Enum
from itertools import product
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple

import structlog
from pydantic import BaseModel, Field

from ..errors import ContradictoryPremisesError, MissingPremiseError

logger = structlog.get_logger(__name__)

DEDUCTION_RANGE = range(0, 11)


class Conclusion(str, Enum):
    FINITE_IF_POWERFUL = "finite_if_powerful"
    ABELIAN_HENCE_FINITE_IF_POWERFUL = "abelian_hence_finite_if_powerful"
    NOT_UNIFORM_IF_INFINITE = "not_uniform_if_infinite"
    FINITE_IF_POWERFUL_AT_HIGH_LAYERS = "finite_if_powerful_at_high_layers"
    INCONCLUSIVE = "inconclusive"


class Prop21Outcome(str, Enum):
    ABELIAN_HENCE_FINITE = "abelian_hence_finite"
    ABELIAN = "abelian"
    NOT_APPLICABLE = "not_applicable"


class FmInput(BaseModel):
    """Declared data of a CM field; optional premises are tri-state (None = undeclared)"""
    d_plus: int = Field(ge=0)
    d_minus: Optional[int] = Field(default=None, ge=0)
    mu_p_in_k: bool
    first_layer_unramified: Optional[bool] = None
    mu_invariant_zero: Optional[bool] = None
    n_at_least_n0: Optional[bool] = None
    s_variant: bool = False

    @property
    def delta(self) -> int:
        return 1 if self.mu_p_in_k else 0


class RuleStep(BaseModel):
    rule: str
    anchor: str
    premises: Dict[str, bool] = Field(default_factory=dict)
    satisfied: bool
    note: Optional[str] = None


class FmVerdict(BaseModel):
    conclusion: Conclusion
    galois_group: str
    reasoning_chain: List[RuleStep]


# premise name -> independent evaluator; rule steps only cite names from here
PREMISES: Dict[str, Callable[[FmInput], bool]] = {
    "d_plus = 0": lambda i: i.d_plus == 0,
    "d_plus = 1": lambda i: i.d_plus == 1,
    "d_plus != 1": lambda i: i.d_plus != 1,
    "mu_p in k": lambda i: i.mu_p_in_k,
    "d_minus != 0 if mu_p not in k": lambda i: i.mu_p_in_k or bool(i.d_minus),
    "first layer not unramified": lambda i: i.first_layer_unramified is False,
    "mu-invariant = 0": lambda i: i.mu_invariant_zero is True,
    "n >= n0": lambda i: i.n_at_least_n0 is True,
}


def prop21_rule(d_plus: int, is_powerful: bool, ab_finite: bool) -> Prop21Outcome:
    """A powerful group with no plus generators is abelian (finite when G^ab is)"""
    if d_plus != 0 or not is_powerful:
        return Prop21Outcome.NOT_APPLICABLE
    return Prop21Outcome.ABELIAN_HENCE_FINITE if ab_finite else Prop21Outcome.ABELIAN


def prop22_check(d_plus: int, d_minus: int, h2qp_plus: int, h2qp_minus: int) -> Tuple[bool, bool]:
    """
    The two rank inequalities for a powerful group with involution.

    (i)  d+ d- <= d- + dim pH^2(G, Q_p/Z_p)^-
    (ii) C(d+, 2) + C(d-, 2) <= d+ + dim pH^2(G, Q_p/Z_p)^+
    """
    first = d_plus * d_minus <= d_minus + h2qp_minus
    second = d_plus * (d_plus - 1) // 2 + d_minus * (d_minus - 1) // 2 <= d_plus + h2qp_plus
    return first, second


def prop23_allowed_pairs() -> Set[Tuple[int, int]]:
    """(d+, d-) of a 3-dimensional Poincare group with involution and finite abelianization"""
    return {(1, 2), (3, 0)}


def poincare3_pairs(limit: int = 10) -> Set[Tuple[int, int]]:
    """
    The same pairs derived from the cohomology counts.

    dim H^1 = 3 forces d+ + d- = 3, and Poincare duality makes the minus
    part of pH^2 vanish, so inequality (i) is tight: d+ d- = d-.
    """
    return {
        (a, b)
        for a, b in product(range(limit + 1), repeat=2)
        if a + b == 3 and a * b == b
    }


def thm31_deduction_solver(
    d_plus_range: Iterable[int],
    d_minus_range: Iterable[int],
    delta: int,
) -> Set[Tuple[int, int]]:
    """Pairs with d+ >= 2 and d- >= 1 surviving d+ d- <= d- + delta"""
    minus_values = list(d_minus_range)
    return {
        (a, b)
        for a in d_plus_range
        for b in minus_values
        if a >= 2 and b >= 1 and a * b <= b + delta
    }


# premises => "conclusion" for every rule the chain can cite, keyed by rule name
ANCHORS: Dict[str, str] = {
    "prop21_rule": 'd+ = 0, G powerful => "G is abelian, hence finite as G^ab is finite"',
    "thm31_conditions": 'd- != 0 if mu_p not in k, d+ != 1, G powerful => "G is finite"',
    "thm32_not_uniform": 'mu_p in k, k_1|k not unramified if d+ = 1 => "G is not uniform if infinite"',
    "thm33_high_layers": 'mu_p in k, mu = 0, n >= n0, G(k_n) powerful => "G(k_n) is finite"',
    "reflection_bound": 'd- != 0 if mu_p not in k, with the reflection theorem => "d- >= 1"',
    "thm31_deduction_solver": 'G infinite and powerful => "d+ d- <= d- + delta"',
    "prop23_allowed_pairs": 'G a Poincare group of dimension 3 => "(d+, d-) is (1, 2) or (3, 0)"',
}


def _step(rule: str, inp: FmInput, names: List[str], note: Optional[str] = None) -> RuleStep:
    held = {name: PREMISES[name](inp) for name in names}
    return RuleStep(rule=rule, anchor=ANCHORS[rule], premises=held, satisfied=all(held.values()), note=note)


def _check_premises(inp: FmInput) -> None:
    if inp.n_at_least_n0 is True and inp.mu_invariant_zero is False:
        raise ContradictoryPremisesError(
            "n >= n0 is declared, but n0 only exists when the mu-invariant vanishes"
        )


def fm_verdict(inp: FmInput) -> FmVerdict:
    """
    Apply the rules in order and stop at the first that fires.

    Order: the abelian criterion for d+ = 0, then the rank conditions
    (finite if powerful), then the non-uniformity rule, then the Iwasawa
    rule at high layers; otherwise inconclusive.
    """
    _check_premises(inp)
    chain: List[RuleStep] = []
    conclusion = Conclusion.INCONCLUSIVE
    label = "G(L_S(p)|k), Cl_S" if inp.s_variant else "G(L(p)|k), Cl"

    abelian = _step(
        "prop21_rule",
        inp,
        ["d_plus = 0"],
    )
    chain.append(abelian)
    if abelian.satisfied:
        conclusion = Conclusion.ABELIAN_HENCE_FINITE_IF_POWERFUL
    else:
        if not inp.mu_p_in_k and inp.d_plus != 1 and inp.d_minus is None:
            raise MissingPremiseError("d_minus must be declared when mu_p is not in k")
        ranks = _step(
            "thm31_conditions",
            inp,
            ["d_plus != 1", "d_minus != 0 if mu_p not in k"],
        )
        chain.append(ranks)
        if ranks.satisfied:
            conclusion = Conclusion.FINITE_IF_POWERFUL
            chain.extend(_rank_endgame(inp))
        elif inp.mu_p_in_k:
            if inp.d_plus == 1 and inp.first_layer_unramified is None:
                raise MissingPremiseError("first_layer_unramified must be declared when d+ = 1 and mu_p is in k")
            uniform = _step(
                "thm32_not_uniform",
                inp,
                ["mu_p in k", "d_plus = 1", "first layer not unramified"],
            )
            chain.append(uniform)
            if uniform.satisfied:
                conclusion = Conclusion.NOT_UNIFORM_IF_INFINITE
            else:
                iwasawa = _step(
                    "thm33_high_layers",
                    inp,
                    ["mu_p in k", "mu-invariant = 0", "n >= n0"],
                )
                chain.append(iwasawa)
                if iwasawa.satisfied:
                    conclusion = Conclusion.FINITE_IF_POWERFUL_AT_HIGH_LAYERS

    verdict = FmVerdict(conclusion=conclusion, galois_group=label, reasoning_chain=chain)
    logger.info("verdict_reached", conclusion=conclusion.value, steps=len(chain))
    return verdict


def _rank_endgame(inp: FmInput) -> List[RuleStep]:
    survivors = thm31_deduction_solver(DEDUCTION_RANGE, DEDUCTION_RANGE, inp.delta)
    allowed = prop23_allowed_pairs()
    return [
        RuleStep(
            rule="reflection_bound",
            anchor=ANCHORS["reflection_bound"],
            satisfied=True,
            note="consequence used inside the argument; the declared d- is not re-checked",
        ),
        RuleStep(
            rule="thm31_deduction_solver",
            anchor=ANCHORS["thm31_deduction_solver"],
            satisfied=True,
            note=f"delta = {inp.delta}; surviving pairs {sorted(survivors)}",
        ),
        RuleStep(
            rule="prop23_allowed_pairs",
            anchor=ANCHORS["prop23_allowed_pairs"],
            satisfied=survivors.isdisjoint(allowed),
            note=f"surviving pairs disjoint from {sorted(allowed)}: contradiction, so the group is finite",
        ),
    ]


def audit_verdict(inp: FmInput, verdict: FmVerdict) -> List[str]:
    """
    Re-evaluate every premise cited by the chain; returns the mismatches.

    The decisive step (last rule whose premises all hold) must have produced
    the reported conclusion.
    """
    problems = []
    for step in verdict.reasoning_chain:
        for name, held in step.premises.items():
            if PREMISES[name](inp) != held:
                problems.append(f"{step.rule}: premise '{name}' recorded as {held}")
        if step.premises and step.satisfied != all(step.premises.values()):
            problems.append(f"{step.rule}: satisfied flag disagrees with its premises")
    fired = {
        "prop21_rule": Conclusion.ABELIAN_HENCE_FINITE_IF_POWERFUL,
        "thm31_conditions": Conclusion.FINITE_IF_POWERFUL,
        "thm32_not_uniform": Conclusion.NOT_UNIFORM_IF_INFINITE,
        "thm33_high_layers": Conclusion.FINITE_IF_POWERFUL_AT_HIGH_LAYERS,
    }
    decisive = [s for s in verdict.reasoning_chain if s.rule in fired and s.satisfied]
    expected = fired[decisive[0].rule] if decisive else Conclusion.INCONCLUSIVE
    if len(decisive) > 1:
        problems.append("more than one rule fired")
    if expected != verdict.conclusion:
        problems.append(f"conclusion {verdict.conclusion.value} but chain supports {expected.value}")
    return problems
