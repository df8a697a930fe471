"""
PC Engine - finite p-groups from consistent polycyclic presentations

Elements are exponent vectors over the ordered generators g_0..g_{n-1}
(g1..gn in presentation files). Multiplication is collection from the left;
GroupTable materializes the whole group for elementwise work.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..errors import (
    InconsistentPresentationError,
    InternalFault,
    NonNormalSubgroupError,
    PresentationSyntaxError,
    TableCapExceededError,
)
from .linalg import check_prime

logger = structlog.get_logger(__name__)

Word = Tuple[Tuple[int, int], ...]
Element = Tuple[int, ...]

# full associativity re-check is cubic in the order
FULL_ASSOCIATIVITY_LIMIT = 243
SAMPLED_TRIPLES = 20000

# full tables are built up to p^7 elements unless a cap is configured
DEFAULT_TABLE_EXPONENT = 7


def default_table_cap(p: int) -> int:
    return p ** DEFAULT_TABLE_EXPONENT


def _check_normal_word(word: Word, lowest: int, n: int, p: int, what: str) -> Word:
    last = lowest
    for gen, exp in word:
        if not 0 <= gen < n:
            raise PresentationSyntaxError(f"{what} uses g{gen + 1}, but there are only {n} generators")
        if gen <= last:
            raise PresentationSyntaxError(
                f"{what} must use strictly increasing generators above g{lowest + 1}, found g{gen + 1}"
            )
        if not 0 <= exp < p:
            raise PresentationSyntaxError(f"{what} has exponent {exp} outside [0, {p})")
        last = gen
    return tuple((gen, exp) for gen, exp in word if exp)


@dataclass(frozen=True)
class PcPresentation:
    """
    Power-commutator presentation of a group of order p^n.

    power[i] is the normal word for g_i^p; commutators[(j, i)] with j > i is
    the normal word for [g_j, g_i] = g_j^-1 g_i^-1 g_j g_i. Missing entries
    are the identity. Relation words only use generators of higher index.
    """

    p: int
    n: int
    power: Tuple[Word, ...] = ()
    commutators: Mapping[Tuple[int, int], Word] = field(default_factory=dict)

    def __post_init__(self):
        check_prime(self.p)
        if self.n < 0:
            raise PresentationSyntaxError(f"number of generators must be non-negative, got {self.n}")
        power = tuple(self.power) + ((),) * (self.n - len(self.power))
        if len(power) != self.n:
            raise PresentationSyntaxError(f"{len(self.power)} power relations for {self.n} generators")
        power = tuple(
            _check_normal_word(tuple(w), i, self.n, self.p, f"power relation of g{i + 1}")
            for i, w in enumerate(power)
        )
        comms: Dict[Tuple[int, int], Word] = {}
        for (j, i), w in sorted(self.commutators.items()):
            if not (0 <= i < j < self.n):
                raise PresentationSyntaxError(
                    f"commutator relation [g{j + 1}, g{i + 1}] needs n >= j > i >= 1 with n = {self.n}"
                )
            word = _check_normal_word(tuple(w), j, self.n, self.p, f"commutator relation [g{j + 1}, g{i + 1}]")
            if word:
                comms[(j, i)] = word
        object.__setattr__(self, "power", power)
        object.__setattr__(self, "commutators", comms)
        # letter expansions used by the collector
        object.__setattr__(self, "_power_letters", tuple(_letters(w) for w in power))
        object.__setattr__(self, "_comm_letters", {k: _letters(w) for k, w in comms.items()})

    @property
    def order(self) -> int:
        return self.p ** self.n

    @property
    def identity(self) -> Element:
        return (0,) * self.n

    def generator(self, i: int) -> Element:
        vec = [0] * self.n
        vec[i] = 1
        return tuple(vec)

    def collect(self, vec: Sequence[int], word: Iterable[Tuple[int, int]]) -> Element:
        """
        Normal form of vec * word by collection from the left.

        ``word`` may hold any non-negative exponents; it is expanded into
        single letters processed from a stack.
        """
        p, n = self.p, self.n
        exps = list(vec)
        stack: List[int] = []
        for gen, exp in reversed(list(word)):
            stack.extend([gen] * exp)
        while stack:
            i = stack.pop()
            tail: List[int] = []
            for j in range(i + 1, n):
                e = exps[j]
                if e:
                    # g_j^{g_i} = g_j [g_j, g_i]
                    tail.extend(([j] + list(self._comm_letters.get((j, i), ()))) * e)
                    exps[j] = 0
            exps[i] += 1
            pushed: List[int] = []
            if exps[i] == p:
                exps[i] = 0
                pushed = list(self._power_letters[i])
            pushed.extend(tail)
            stack.extend(reversed(pushed))
        return tuple(exps)

    def multiply(self, a: Sequence[int], b: Sequence[int]) -> Element:
        return self.collect(a, vector_to_word(b))

    def power_of(self, a: Sequence[int], e: int) -> Element:
        if e < 0:
            return self.power_of(self.inverse(a), -e)
        result = self.identity
        base = tuple(a)
        while e:
            if e & 1:
                result = self.multiply(result, base)
            base = self.multiply(base, base)
            e >>= 1
        return result

    def inverse(self, a: Sequence[int]) -> Element:
        # clear exponents left to right: a * g_1^f1 * g_2^f2 ... = 1
        w = tuple(a)
        y = self.identity
        for i in range(self.n):
            e = w[i]
            if e:
                step = ((i, self.p - e),)
                w = self.collect(w, step)
                y = self.collect(y, step)
        return y

    def commutator(self, a: Sequence[int], b: Sequence[int]) -> Element:
        """[a, b] = a^-1 b^-1 a b"""
        left = self.multiply(self.inverse(a), self.inverse(b))
        return self.multiply(self.multiply(left, a), b)

    def evaluate(self, word: Iterable[Tuple[int, int]]) -> Element:
        """Normal form of an arbitrary word; negative exponents allowed"""
        result = self.identity
        for gen, exp in word:
            if not 0 <= gen < self.n:
                raise PresentationSyntaxError(f"word uses g{gen + 1}, but there are only {self.n} generators")
            if exp >= 0:
                result = self.collect(result, ((gen, exp),))
            else:
                result = self.multiply(result, self.power_of(self.inverse(self.generator(gen)), -exp))
        return result

    def index_of(self, vec: Sequence[int]) -> int:
        idx = 0
        for e in vec:
            idx = idx * self.p + e
        return idx


def _letters(word: Word) -> Tuple[int, ...]:
    return tuple(gen for gen, exp in word for _ in range(exp))


def vector_to_word(vec: Sequence[int]) -> Word:
    return tuple((i, int(e)) for i, e in enumerate(vec) if e)


def collect_multiply(pres: PcPresentation, a: Sequence[int], b: Sequence[int]) -> Element:
    """Unique normal form of a*b; the identity is the zero vector"""
    return pres.multiply(a, b)


@dataclass(frozen=True)
class ConsistencyViolation:
    """A test word whose two bracketings collect differently"""
    label: str
    left: Element
    right: Element


def consistency_check(pres: PcPresentation) -> List[ConsistencyViolation]:
    """
    Run the standard consistency test words by collection.

    An empty result means normal forms are unique and the group has order
    exactly p^n.
    """
    p, n = pres.p, pres.n
    gen = pres.generator
    violations: List[ConsistencyViolation] = []

    def record(label: str, left: Element, right: Element):
        if left != right:
            violations.append(ConsistencyViolation(label, left, right))

    def power_vec(i: int) -> Element:
        return pres.collect(pres.identity, pres.power[i])

    for k, j, i in itertools.combinations(range(n), 3):
        # combinations yields k < j < i; test words need k > j > i
        hi, mid, lo = i, j, k
        left = pres.multiply(gen(hi), pres.collect(gen(mid), ((lo, 1),)))
        right = pres.collect(pres.collect(gen(hi), ((mid, 1),)), ((lo, 1),))
        record(f"g{hi + 1}(g{mid + 1} g{lo + 1}) = (g{hi + 1} g{mid + 1})g{lo + 1}", left, right)

    for j in range(n):
        for i in range(j):
            gj_gi = pres.collect(gen(j), ((i, 1),))
            left = pres.collect(power_vec(j), ((i, 1),))
            right = pres.multiply(pres.collect(pres.identity, ((j, p - 1),)), gj_gi)
            record(f"(g{j + 1}^p) g{i + 1} = g{j + 1}^(p-1) (g{j + 1} g{i + 1})", left, right)

            left = pres.collect(gen(j), pres.power[i])
            right = pres.collect(gj_gi, ((i, p - 1),))
            record(f"g{j + 1} (g{i + 1}^p) = (g{j + 1} g{i + 1}) g{i + 1}^(p-1)", left, right)

    for i in range(n):
        left = pres.collect(gen(i), pres.power[i])
        right = pres.collect(power_vec(i), ((i, 1),))
        record(f"g{i + 1} (g{i + 1}^p) = (g{i + 1}^p) g{i + 1}", left, right)

    logger.debug("consistency_checked", p=p, n=n, violations=len(violations))
    return violations


def ensure_consistent(pres: PcPresentation) -> PcPresentation:
    violations = consistency_check(pres)
    if violations:
        logger.warning("presentation_inconsistent", violations=len(violations), first=violations[0].label)
        raise InconsistentPresentationError(violations)
    return pres


@dataclass(frozen=True, eq=False)
class GroupTable:
    """
    Fully materialized finite group on indices 0..order-1.

    ``labels`` holds exponent vectors for tables built from a presentation,
    ``coset_representatives`` the parent indices for quotient tables.
    """

    p: int
    mul: np.ndarray
    inv: np.ndarray
    identity: int = 0
    generators: Tuple[int, ...] = ()
    labels: Optional[np.ndarray] = None
    coset_representatives: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("mul", "inv", "labels", "coset_representatives"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=np.int64, copy=True)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def order(self) -> int:
        return int(self.mul.shape[0])

    @property
    def elements(self) -> np.ndarray:
        return np.arange(self.order)

    @property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    def power_map(self, e: int) -> np.ndarray:
        """x -> x^e for every element, e >= 0"""
        result = np.full(self.order, self.identity, dtype=np.int64)
        for _ in range(e):
            result = self.mul[result, self.elements]
        return result

    def commutators(self, xs: np.ndarray, gs: np.ndarray) -> np.ndarray:
        """Matrix of [x, g] = x^-1 g^-1 x g for x in xs (rows), g in gs (columns)"""
        xs = np.asarray(xs, dtype=np.int64)
        gs = np.asarray(gs, dtype=np.int64)
        left = self.mul[np.ix_(self.inv[xs], self.inv[gs])]
        left = self.mul[left, xs[:, None]]
        return self.mul[left, gs[None, :]]

    def conjugate(self, xs: np.ndarray, g: int) -> np.ndarray:
        """g^-1 x g for every x in xs"""
        return self.mul[self.mul[self.inv[g], xs], g]

    def check_laws(self, seed: int = 0) -> None:
        """Identity, inverse and associativity laws; raises InternalFault"""
        n = self.order
        e = self.identity
        everything = self.elements
        if not (np.array_equal(self.mul[e], everything) and np.array_equal(self.mul[:, e], everything)):
            raise InternalFault("identity law fails in group table")
        if not np.all(self.mul[everything, self.inv] == e):
            raise InternalFault("inverse law fails in group table")
        if n <= FULL_ASSOCIATIVITY_LIMIT:
            for a in range(n):
                left = self.mul[self.mul[a][:, None], everything[None, :]]
                right = self.mul[a][self.mul]
                if not np.array_equal(left, right):
                    raise InternalFault(f"associativity fails in group table for left factor {a}")
        else:
            rng = np.random.default_rng(seed)
            a, b, c = rng.integers(0, n, size=(3, SAMPLED_TRIPLES))
            if not np.array_equal(self.mul[self.mul[a, b], c], self.mul[a, self.mul[b, c]]):
                raise InternalFault("associativity fails on a sampled triple")


def all_exponent_vectors(p: int, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(p), repeat=n)), dtype=np.int64)


def build_table(pres: PcPresentation, cap: int) -> GroupTable:
    """
    Materialize the group of a consistent presentation.

    Row a, column b holds the index of a*b; element indices are the exponent
    vectors read as base-p numbers (g1 most significant). Products are
    composed from right multiplication by single generators, each of which
    is computed by collection.
    """
    if pres.order > cap:
        raise TableCapExceededError(pres.order, cap)
    ensure_consistent(pres)

    order = pres.order
    vectors = all_exponent_vectors(pres.p, pres.n)
    right_mult = np.empty((pres.n, order), dtype=np.int64)
    for i in range(pres.n):
        for idx, vec in enumerate(vectors):
            right_mult[i, idx] = pres.index_of(pres.collect(vec, ((i, 1),)))

    mul = np.empty((order, order), dtype=np.int64)
    start = np.arange(order)
    for b, vec in enumerate(vectors):
        column = start
        for i, e in enumerate(vec):
            for _ in range(e):
                column = right_mult[i, column]
        mul[:, b] = column

    inv = np.argmin(mul, axis=1)
    generators = tuple(pres.index_of(pres.generator(i)) for i in range(pres.n))
    table = GroupTable(pres.p, mul, inv, 0, generators, labels=vectors)
    table.check_laws()
    logger.debug("table_built", p=pres.p, n=pres.n, order=order)
    return table


@dataclass(frozen=True, eq=False)
class Subgroup:
    """Subset of a GroupTable's elements, held as a boolean mask"""

    mask: np.ndarray

    def __post_init__(self):
        arr = np.array(self.mask, dtype=bool, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "mask", arr)

    @property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def order(self) -> int:
        return int(self.mask.sum())

    def __contains__(self, idx: int) -> bool:
        return bool(self.mask[idx])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subgroup):
            return NotImplemented
        return bool(np.array_equal(self.mask, other.mask))

    def __hash__(self) -> int:
        return hash(self.mask.tobytes())

    def __le__(self, other: "Subgroup") -> bool:
        return bool(np.all(other.mask[self.mask]))

    def is_trivial(self) -> bool:
        return self.order == 1


def whole_group(t: GroupTable) -> Subgroup:
    return Subgroup(np.ones(t.order, dtype=bool))


def subgroup_closure(t: GroupTable, seed: Iterable[int]) -> Subgroup:
    """Smallest subgroup containing ``seed``"""
    seeds = np.unique(np.asarray(list(seed), dtype=np.int64))
    mask = np.zeros(t.order, dtype=bool)
    mask[t.identity] = True
    frontier = np.array([t.identity], dtype=np.int64)
    if seeds.size:
        # right multiplication by the seeds reaches every product; inverses
        # are positive powers in a finite group
        while frontier.size:
            reached = t.mul[np.ix_(frontier, seeds)].ravel()
            fresh = np.unique(reached[~mask[reached]])
            mask[fresh] = True
            frontier = fresh
    sub = Subgroup(mask)
    if t.order % sub.order:
        raise InternalFault(f"closure of order {sub.order} does not divide group order {t.order}")
    return sub


def normal_closure(t: GroupTable, seed: Iterable[int]) -> Subgroup:
    """Smallest normal subgroup containing ``seed``"""
    conjugators = list(t.generators) or list(range(t.order))
    current = subgroup_closure(t, seed)
    while True:
        members = current.members
        images = np.concatenate([t.conjugate(members, g) for g in conjugators])
        if np.all(current.mask[images]):
            return current
        current = subgroup_closure(t, np.concatenate([members, images]))


def quotient_table(t: GroupTable, n: Subgroup) -> GroupTable:
    """
    Multiplication table of t/n on cosets.

    Cosets are numbered by their smallest member, so the identity coset is 0.
    """
    members = n.members
    for g in (list(t.generators) or range(t.order)):
        images = t.conjugate(members, g)
        outside = np.flatnonzero(~n.mask[images])
        if outside.size:
            x = int(members[outside[0]])
            raise NonNormalSubgroupError(x, int(g), int(images[outside[0]]))

    smallest = t.mul[:, members].min(axis=1)
    reps = np.unique(smallest)
    coset_of = np.searchsorted(reps, smallest)
    mul = coset_of[t.mul[np.ix_(reps, reps)]]
    inv = coset_of[t.inv[reps]]
    identity = int(coset_of[t.identity])
    generators = []
    for g in t.generators:
        c = int(coset_of[g])
        if c != identity and c not in generators:
            generators.append(c)
    quotient = GroupTable(t.p, mul, inv, identity, tuple(generators), coset_representatives=reps)
    if quotient.order * n.order != t.order:
        raise InternalFault("quotient order does not match |G|/|N|")
    quotient.check_laws()
    logger.debug("quotient_built", order=quotient.order, kernel_order=n.order)
    return quotient
