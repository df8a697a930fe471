"""
Structure - descending p-central series, Frattini subgroup, powerfulness

Everything is computed elementwise on a GroupTable. Generator-based
shortcuts (frattini_by_generators) exist only to be checked against the
elementwise versions.
"""

import itertools
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, SkipValidation

from ..errors import InternalFault, NotPowerfulError
from .linalg import MatFp
from .pc_engine import GroupTable, Subgroup, normal_closure, subgroup_closure, whole_group

logger = structlog.get_logger(__name__)


def log_p(value: int, p: int) -> int:
    """Exact base-p logarithm of a power of p"""
    exponent = 0
    while value > 1:
        if value % p:
            raise InternalFault(f"{value} is not a power of {p}")
        value //= p
        exponent += 1
    return exponent


def agemo(t: GroupTable) -> Subgroup:
    """G^p, the subgroup generated by all p-th powers"""
    return subgroup_closure(t, t.power_map(t.p))


def derived_subgroup(t: GroupTable) -> Subgroup:
    """[G, G], the subgroup generated by all commutators"""
    return subgroup_closure(t, t.commutators(t.elements, t.elements).ravel())


def frattini(t: GroupTable) -> Subgroup:
    """Phi(G) = G^p [G, G], elementwise"""
    seeds = np.concatenate([t.power_map(t.p), t.commutators(t.elements, t.elements).ravel()])
    return subgroup_closure(t, seeds)


def frattini_by_generators(t: GroupTable) -> Subgroup:
    """Normal closure of g_i^p and [g_i, g_j] over the table's generators"""
    gens = np.asarray(t.generators, dtype=np.int64)
    if gens.size == 0:
        return subgroup_closure(t, [])
    seeds = np.concatenate([t.power_map(t.p)[gens], t.commutators(gens, gens).ravel()])
    return normal_closure(t, seeds)


def p_powers_form_subgroup(t: GroupTable) -> bool:
    """Whether {x^p : x in G} is already the subgroup G^p"""
    powers = np.unique(t.power_map(t.p))
    return powers.size == agemo(t).order


@dataclass(frozen=True)
class CentralSeries:
    """G_1 = G, G_{i+1} = G_i^p [G_i, G], ending with the trivial subgroup"""

    p: int
    terms: List[Subgroup]

    @property
    def length(self) -> int:
        """c, the number of non-trivial terms"""
        return len(self.terms) - 1

    @property
    def layer_ranks(self) -> List[int]:
        return [
            log_p(upper.order // lower.order, self.p)
            for upper, lower in zip(self.terms, self.terms[1:])
        ]

    def term(self, i: int) -> Subgroup:
        """G_i with the 1-based numbering of the series"""
        if i < 1:
            raise IndexError("series terms are numbered from 1")
        if i > len(self.terms):
            return self.terms[-1]
        return self.terms[i - 1]


def p_central_series(t: GroupTable) -> CentralSeries:
    """Descending p-central series computed elementwise"""
    p_powers = t.power_map(t.p)
    current = whole_group(t)
    terms = [current]
    while not current.is_trivial():
        members = current.members
        seeds = np.concatenate([p_powers[members], t.commutators(members, t.elements).ravel()])
        following = subgroup_closure(t, seeds)
        if following.order == current.order:
            raise InternalFault("p-central series stalled; table is not a p-group")
        terms.append(following)
        current = following
    series = CentralSeries(t.p, terms)
    logger.debug("p_central_series", order=t.order, layer_ranks=series.layer_ranks)
    return series


def series_is_central(t: GroupTable, series: CentralSeries) -> bool:
    """[G_i, G] and G_i^p lie in G_{i+1} for every i"""
    p_powers = t.power_map(t.p)
    for upper, lower in zip(series.terms, series.terms[1:]):
        members = upper.members
        if not np.all(lower.mask[t.commutators(members, t.elements)]):
            return False
        if not np.all(lower.mask[p_powers[members]]):
            return False
    return True


class CommutatorWitness(NamedTuple):
    x: int
    g: int
    value: int


class PowerfulnessCheck(NamedTuple):
    is_powerful: bool
    witness: Optional[CommutatorWitness] = None


def is_powerful(t: GroupTable) -> PowerfulnessCheck:
    """[G, G] contained in G^p (the criterion for odd p), with a witness otherwise"""
    comms = t.commutators(t.elements, t.elements)
    p_part = agemo(t)
    outside = np.argwhere(~p_part.mask[comms])
    if outside.size:
        x, g = (int(v) for v in outside[0])
        return PowerfulnessCheck(False, CommutatorWitness(x, g, int(comms[x, g])))
    return PowerfulnessCheck(True)


def generator_rank(t: GroupTable) -> int:
    """d(G) = dim G/Phi(G)"""
    return log_p(t.order // frattini(t).order, t.p)


class LayerCoordinates:
    """
    Coordinates on an elementary abelian section upper/lower.

    A basis b_1..b_r of upper modulo lower is picked greedily by element
    index; every member of upper gets its coordinate vector in F_p^r.
    """

    def __init__(self, t: GroupTable, upper: Subgroup, lower: Subgroup):
        self.t = t
        self.p = t.p
        span = lower
        basis: List[int] = []
        for x in upper.members:
            if not span.mask[x]:
                basis.append(int(x))
                span = subgroup_closure(t, np.append(span.members, x))
        if span != upper:
            raise InternalFault("greedy basis does not reach the upper subgroup")
        self.basis = basis

        coords = np.full((t.order, len(basis)), -1, dtype=np.int64)
        lower_members = lower.members
        powers = [[t.identity] for _ in basis]
        for k, b in enumerate(basis):
            for _ in range(1, self.p):
                powers[k].append(int(t.mul[powers[k][-1], b]))
        for combo in itertools.product(range(self.p), repeat=len(basis)):
            elem = t.identity
            for k, c in enumerate(combo):
                elem = int(t.mul[elem, powers[k][c]])
            coords[t.mul[elem, lower_members]] = combo
        if np.any(coords[upper.members] < 0):
            raise InternalFault("section is not elementary abelian of the expected rank")
        self.coords = coords

    @property
    def rank(self) -> int:
        return len(self.basis)

    def of(self, elements) -> np.ndarray:
        return self.coords[np.asarray(elements, dtype=np.int64)]


def layer_coordinates(t: GroupTable, series: CentralSeries) -> List[LayerCoordinates]:
    """Coordinates for every layer G_i/G_{i+1}, i = 1..c"""
    return [LayerCoordinates(t, upper, lower) for upper, lower in zip(series.terms, series.terms[1:])]


def power_map_matrix(t: GroupTable, layers: List[LayerCoordinates], i: int) -> MatFp:
    """
    Matrix of x -> x^p from layer i to layer i + 1 (1-based).

    Only linear when the group is powerful; columns are images of the basis.
    """
    source = layers[i - 1]
    p_powers = t.power_map(t.p)
    if i < len(layers):
        target = layers[i]
        columns = [target.of(p_powers[b]) for b in source.basis]
        rows = target.rank
    else:
        columns, rows = [], 0
    entries = np.array(columns, dtype=np.int64).reshape(len(source.basis), rows).T
    return MatFp(t.p, entries)


def _layer_map_bijective(t: GroupTable, series: CentralSeries, i: int, p_powers: np.ndarray) -> bool:
    ranks = series.layer_ranks
    if i >= len(ranks) or ranks[i - 1] != ranks[i]:
        return False
    upper = series.term(i)
    target = series.term(i + 1)
    below = series.term(i + 2)
    images = np.unique(p_powers[upper.members])
    if not np.all(target.mask[images]):
        return False
    # count distinct cosets x^p G_{i+2}
    cosets = np.unique(t.mul[np.ix_(images, below.members)].min(axis=1))
    return cosets.size * below.order == target.order


def layer_regular_depth(s: CentralSeries, t: GroupTable) -> int:
    """
    Largest m with G_i/G_{i+1} -> G_{i+1}/G_{i+2}, x -> x^p, bijective for all i < m.

    Only meaningful for powerful groups; 0 for the trivial group.
    """
    check = is_powerful(t)
    if not check.is_powerful:
        raise NotPowerfulError(
            f"layer regularity needs a powerful group; commutator {check.witness.value} "
            f"lies outside G^p"
        )
    if s.length == 0:
        return 0
    p_powers = t.power_map(t.p)
    depth = 1
    while _layer_map_bijective(t, s, depth, p_powers):
        depth += 1
    return depth


class StructureReport(BaseModel):
    """Structural invariants of a finite p-group"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    order: int
    order_exponent: int
    d: int
    is_abelian: bool
    is_powerful: bool
    layer_ranks: List[int]
    layer_regular_depth: Optional[int] = None
    uniform_quotient_candidate: bool = False
    powerful_witness: Optional[List[int]] = None
    central_series: SkipValidation[Optional[CentralSeries]] = Field(default=None, exclude=True)


def analyze_structure(t: GroupTable) -> StructureReport:
    """Run the whole structure module on one table"""
    series = p_central_series(t)
    check = is_powerful(t)
    ranks = series.layer_ranks
    d = ranks[0] if ranks else 0
    if d != generator_rank(t):
        raise InternalFault("first layer rank differs from dim G/Phi(G)")
    depth = layer_regular_depth(series, t) if check.is_powerful else None
    report = StructureReport(
        order=t.order,
        order_exponent=log_p(t.order, t.p),
        d=d,
        is_abelian=t.is_abelian,
        is_powerful=check.is_powerful,
        layer_ranks=ranks,
        layer_regular_depth=depth,
        uniform_quotient_candidate=check.is_powerful and bool(ranks) and len(set(ranks)) == 1,
        powerful_witness=list(check.witness) if check.witness else None,
        central_series=series,
    )
    logger.info(
        "structure_analyzed",
        order=report.order,
        d=report.d,
        powerful=report.is_powerful,
        layer_ranks=ranks,
    )
    return report
