"""
Verification suites over the corpus

Each suite checks one property on every corpus member (or random Tate
module) and reports per-instance values; any failing instance carries the
full presentation and involution as a witness.
"""

from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from functools import partial
from typing import Any, Callable, Dict, Iterable, List, Optional

import numpy as np
import structlog
from pydantic import BaseModel, Field

from ..errors import InputError, ProppError
from ..io.presentation_file import format_presentation
from .cohomology import (
    DEFAULT_BRUTE_CAP,
    DEFAULT_TATE_CAP,
    DENSE_COCYCLE_CAP,
    TateModule,
    compute_cohomology,
    h2_dim_brute,
    h2_dim_dense,
    kunneth_dims,
    prop22_layer_bound,
    random_tate_module,
    tate_h0_h1,
)
from .corpus import CorpusMember, CorpusSpec, Family, GenerationStats, InvolutionPolicy, generate
from .involution import dual_split_matches, eigen_ranks, power_map_commutes
from .linalg import eigensplit_involution
from .structure import analyze_structure, frattini, frattini_by_generators, p_powers_form_subgroup, series_is_central
from .verdicts import prop21_rule, prop22_check

logger = structlog.get_logger(__name__)

# collection is checked against the table on all pairs up to this order
ORACLE_MAX_ORDER = 243


class Suite(str, Enum):
    KUNNETH = "kunneth"
    PROP21 = "prop21"
    PROP22 = "prop22"
    ORACLE = "oracle"
    HERBRAND = "herbrand"


class InstanceResult(BaseModel):
    tag: str
    ok: bool
    skipped: bool = False
    values: Dict[str, Any] = Field(default_factory=dict)
    witness: Optional[Dict[str, Any]] = None


class SuiteSummary(BaseModel):
    suite: Suite
    passed: bool
    instances: int
    violations: int
    skipped: int = 0
    notes: List[str] = Field(default_factory=list)
    generation: Optional[GenerationStats] = None
    results: List[InstanceResult] = Field(default_factory=list)


def _witness(member: CorpusMember, values: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "presentation": format_presentation(member.presentation, member.images),
        "family": member.family.value,
        "values": values,
    }


def _result(member: CorpusMember, ok: bool, values: Dict[str, Any]) -> InstanceResult:
    return InstanceResult(
        tag=member.tag,
        ok=ok,
        values=values,
        witness=None if ok else _witness(member, values),
    )


def check_kunneth(member: CorpusMember, brute_cap: int = DEFAULT_BRUTE_CAP) -> InstanceResult:
    """Brute-force H^2 split of an elementary abelian group against the closed form"""
    table = member.action.table
    if table.order > brute_cap:
        return InstanceResult(tag=member.tag, ok=True, skipped=True)
    report = compute_cohomology(table, member.action, brute_cap)
    expected = kunneth_dims(report.h1_plus, report.h1_minus)
    values = {
        "d_plus": report.h1_plus,
        "d_minus": report.h1_minus,
        "h2_plus": report.h2_plus,
        "h2_minus": report.h2_minus,
        "kunneth": list(expected),
    }
    ok = (report.h2_plus, report.h2_minus) == expected and report.h2 >= report.h1
    return _result(member, ok, values)


def check_prop21(member: CorpusMember) -> InstanceResult:
    """d+ = 0 on a powerful member forces it to be abelian"""
    table = member.action.table
    structure = analyze_structure(table)
    split = eigen_ranks(member.action, 1)
    outcome = prop21_rule(split.d_plus, structure.is_powerful, True)
    values = {
        "d_plus": split.d_plus,
        "d_minus": split.d_minus,
        "powerful": structure.is_powerful,
        "abelian": structure.is_abelian,
        "rule": outcome.value,
    }
    ok = outcome.value == "not_applicable" or structure.is_abelian
    return _result(member, ok, values)


def check_prop22(member: CorpusMember, brute_cap: int = DEFAULT_BRUTE_CAP) -> InstanceResult:
    """Rank inequalities on powerful members and the layer bound on all of them"""
    table = member.action.table
    if table.order > brute_cap:
        return InstanceResult(tag=member.tag, ok=True, skipped=True)
    structure = analyze_structure(table)
    report = compute_cohomology(table, member.action, brute_cap)
    first = eigen_ranks(member.action, 1)
    second = eigen_ranks(member.action, 2)
    bound = prop22_layer_bound(first, second, report.p_h2_qpzp_plus, report.p_h2_qpzp_minus)
    values = {
        "d_plus": first.d_plus,
        "d_minus": first.d_minus,
        "p_h2_qpzp_plus": report.p_h2_qpzp_plus,
        "p_h2_qpzp_minus": report.p_h2_qpzp_minus,
        "powerful": structure.is_powerful,
        "layer_bound": list(bound),
    }
    ok = all(bound)
    if structure.is_powerful:
        inequalities = prop22_check(first.d_plus, first.d_minus, report.p_h2_qpzp_plus, report.p_h2_qpzp_minus)
        values["inequalities"] = list(inequalities)
        ok = ok and all(inequalities)
    return _result(member, ok, values)


def check_oracle(member: CorpusMember) -> InstanceResult:
    """
    Collection against the table, Frattini shortcuts, layer-matrix identities,
    powerful-group invariants, and on small members H^2 from both cocycle systems
    """
    pres, act = member.presentation, member.action
    table = act.table
    values: Dict[str, Any] = {"order": table.order}
    ok = True
    if table.order <= ORACLE_MAX_ORDER:
        labels = table.labels
        mismatches = 0
        for a in range(table.order):
            for b in range(table.order):
                if pres.index_of(pres.multiply(labels[a], labels[b])) != table.mul[a, b]:
                    mismatches += 1
        values["product_mismatches"] = mismatches
        ok = mismatches == 0
    values["frattini_agrees"] = frattini(table) == frattini_by_generators(table)

    structure = analyze_structure(table)
    frattini_split = eigensplit_involution(act.matrix_on_frattini)
    first = eigen_ranks(act, 1)
    values["frattini_action_agrees"] = (frattini_split.dim_plus, frattini_split.dim_minus) == (
        first.d_plus,
        first.d_minus,
    )
    values["dual_splits_agree"] = all(dual_split_matches(m) for m in act.matrices_on_layers)
    values["series_central"] = series_is_central(table, structure.central_series)
    if structure.is_powerful:
        ranks = structure.layer_ranks
        values["power_map_commutes"] = power_map_commutes(act)
        values["p_powers_form_subgroup"] = p_powers_form_subgroup(table)
        values["layer_ranks_nonincreasing"] = all(a >= b for a, b in zip(ranks, ranks[1:]))
    if table.order <= DENSE_COCYCLE_CAP:
        values["h2_systems_agree"] = h2_dim_brute(table).dim == h2_dim_dense(table)
    ok = ok and all(v for k, v in values.items() if isinstance(v, bool))
    return _result(member, ok, values)


def check_tate(module: TateModule, tag: str) -> InstanceResult:
    result = tate_h0_h1(module)
    values = {
        "orders": module.orders,
        "n": module.n,
        "h0": result.h0,
        "h_minus1": result.h_minus1,
    }
    ok = result.h0_order == result.h_minus1_order
    witness = None if ok else {"orders": module.orders, "action": module.action.tolist(), "n": module.n}
    return InstanceResult(tag=tag, ok=ok, values=values, witness=witness)


def _fan_out(check: Callable, members: List[Any], jobs: int) -> List[InstanceResult]:
    if jobs <= 1 or len(members) <= 1:
        return [check(m) for m in members]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(check, members))


def _summarize(suite: Suite, results: Iterable[InstanceResult], stats=None, notes=None) -> SuiteSummary:
    results = list(results)
    violations = sum(1 for r in results if not r.ok)
    summary = SuiteSummary(
        suite=suite,
        passed=violations == 0,
        instances=sum(1 for r in results if not r.skipped),
        violations=violations,
        skipped=sum(1 for r in results if r.skipped),
        notes=notes or [],
        generation=stats,
        results=results,
    )
    logger.info(
        "suite_finished",
        suite=suite.value,
        instances=summary.instances,
        violations=violations,
        skipped=summary.skipped,
    )
    return summary


def corpus_for(suite: Suite, spec: CorpusSpec) -> CorpusSpec:
    """Restrict a corpus spec to what a suite needs"""
    if suite == Suite.KUNNETH:
        return spec.model_copy(
            update={"families": [Family.ELEMENTARY_ABELIAN], "involution_policy": InvolutionPolicy.ALL_DIAGONAL}
        )
    return spec


def run_suite(
    suite: Suite,
    spec: CorpusSpec,
    jobs: int = 1,
    brute_cap: int = DEFAULT_BRUTE_CAP,
    tate_cap: int = DEFAULT_TATE_CAP,
) -> SuiteSummary:
    """
    Run one suite; the summary lists results in corpus order whatever ``jobs`` is.

    Args:
        suite: which property to check
        spec: corpus to check it on (herbrand uses only p, seed, random_samples)
        jobs: worker processes
        brute_cap: largest group handled by the cocycle system
        tate_cap: largest Tate module
    """
    if jobs < 1:
        raise InputError(f"jobs must be at least 1, got {jobs}")
    if suite == Suite.HERBRAND:
        rng = np.random.default_rng(spec.seed)
        modules = [random_tate_module(rng, spec.p, tate_cap) for _ in range(spec.random_samples)]
        results = [check_tate(m, f"tate(sample={k})") for k, m in enumerate(modules)]
        anchor = TateModule([spec.p], [[1]], spec.p, spec.p)
        rank = tate_h0_h1(anchor).p_rank_h0
        trivial = check_tate(anchor, "tate(trivial Z/p on Z/p)")
        results.append(trivial.model_copy(update={"ok": trivial.ok and rank == 1}))
        notes = [f"p-rank of H^0 for Z/p acting trivially on Z/p: {rank}"]
        return _summarize(suite, results, notes=notes)

    stats = GenerationStats()
    members = list(generate(corpus_for(suite, spec), stats))
    checks = {
        Suite.KUNNETH: partial(check_kunneth, brute_cap=brute_cap),
        Suite.PROP21: check_prop21,
        Suite.PROP22: partial(check_prop22, brute_cap=brute_cap),
        Suite.ORACLE: check_oracle,
    }
    try:
        results = _fan_out(checks[suite], members, jobs)
    except ProppError:
        logger.error("suite_failed", suite=suite.value)
        raise

    notes = []
    if suite == Suite.PROP21 and Family.EXTRASPECIAL in spec.families and spec.max_order_exponent >= 3:
        witnessed = any(
            r.values.get("d_plus") == 0 and not r.values.get("powerful") and not r.values.get("abelian")
            for r in results
        )
        notes.append(f"non-powerful non-abelian member with d+ = 0 present: {witnessed}")
        if not witnessed:
            results.append(InstanceResult(tag="coverage(non-powerful witness)", ok=False))
    return _summarize(suite, results, stats, notes)
