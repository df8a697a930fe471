"""
Corpus - finite p-groups with involutions for property checks

Each family builder returns a presentation plus generator blocks; the
involution catalog flips the sign of whole blocks (g -> g^-1 on every
generator of a block) and keeps the sign patterns that validate. At most
one involution is kept per first-layer split of each group.
"""

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, Field, field_validator

from ..errors import InputError
from .involution import InvolutionAction, eigen_ranks, validate_involution
from .linalg import check_prime
from .pc_engine import PcPresentation, Word, build_table, consistency_check, default_table_cap

logger = structlog.get_logger(__name__)

Blocks = List[List[int]]


class Family(str, Enum):
    ELEMENTARY_ABELIAN = "elementary_abelian"
    HOMOCYCLIC = "homocyclic"
    EXTRASPECIAL = "extraspecial"
    METACYCLIC_POWERFUL = "metacyclic_powerful"
    RANDOM_PC = "random_pc"


class InvolutionPolicy(str, Enum):
    ALL_DIAGONAL = "all_diagonal"
    INVERSION = "inversion"
    SUPPLIED = "supplied"


class CorpusSpec(BaseModel):
    """What to generate; the stream is a function of these fields alone"""
    p: int = 3
    max_order_exponent: int = Field(default=4, ge=0)
    families: List[Family] = Field(default_factory=lambda: list(Family))
    involution_policy: InvolutionPolicy = InvolutionPolicy.ALL_DIAGONAL
    supplied_signs: List[List[int]] = Field(default_factory=list)
    seed: int = 0
    random_samples: int = Field(default=20, ge=0)
    min_rank: int = Field(default=0, ge=0)
    max_table: Optional[int] = Field(default=None, ge=1)

    @field_validator("p")
    @classmethod
    def _odd_prime(cls, value: int) -> int:
        return check_prime(value)

    @property
    def table_cap(self) -> int:
        """Largest member materialized; a larger one is a cap error, not a skip"""
        return self.max_table if self.max_table is not None else default_table_cap(self.p)


@dataclass(frozen=True, eq=False)
class CorpusMember:
    family: Family
    presentation: PcPresentation
    images: Tuple[Word, ...]
    action: InvolutionAction
    tag: str


class GenerationStats(BaseModel):
    presentations: int = 0
    rejected_presentations: int = 0
    candidate_involutions: int = 0
    rejected_involutions: int = 0
    emitted: int = 0


def _digits(value: int, p: int, start: int, count: int) -> Dict[int, int]:
    """Base-p digits of value at positions start..count-1"""
    out = {}
    for k in range(count):
        if k >= start and value % p:
            out[k] = value % p
        value //= p
    return out


def elementary_abelian(p: int, rank: int) -> Tuple[PcPresentation, Blocks]:
    return PcPresentation(p, rank), [[i] for i in range(rank)]


def homocyclic(p: int, exponent: int, rank: int) -> Tuple[PcPresentation, Blocks]:
    """(Z/p^e)^d; factor k uses generators k*e .. k*e + e - 1 with g^p the next one"""
    n = exponent * rank
    power = []
    for k in range(rank):
        for level in range(exponent):
            idx = k * exponent + level
            power.append(((idx + 1, 1),) if level + 1 < exponent else ())
    blocks = [list(range(k * exponent, (k + 1) * exponent)) for k in range(rank)]
    return PcPresentation(p, n, tuple(power)), blocks


def extraspecial(p: int, half_rank: int) -> Tuple[PcPresentation, Blocks]:
    """Exponent-p extraspecial group of order p^(2m+1): [y_k, x_k] = z"""
    n = 2 * half_rank + 1
    z = n - 1
    comms = {(2 * k + 1, 2 * k): ((z, 1),) for k in range(half_rank)}
    return PcPresentation(p, n, (), comms), [[i] for i in range(n)]


def metacyclic_powerful(p: int, m: int, n: int) -> Tuple[PcPresentation, Blocks]:
    """
    <a, b | a^(p^m) = b^(p^n) = 1, b^-1 a b = a^(1+p)>, needing n >= m - 1.

    Generators: b, b^p, ..., then a, a^p, ...; [a_r, b_s] is the power of a
    with exponent p^r ((1+p)^(p^s) - 1).
    """
    if n < m - 1:
        raise InputError(f"metacyclic group needs n >= m - 1, got m={m}, n={n}")
    total = m + n
    power = [((s + 1, 1),) if s + 1 < n else () for s in range(n)]
    power += [((n + r + 1, 1),) if r + 1 < m else () for r in range(m)]
    modulus = p ** m
    comms = {}
    for r in range(m):
        for s in range(n):
            value = (p ** r * (pow(1 + p, p ** s, modulus) - 1)) % modulus
            digits = _digits(value, p, r + 1, m)
            if digits:
                comms[(n + r, s)] = tuple((n + k, e) for k, e in sorted(digits.items()))
    blocks = [list(range(n, total)), list(range(n))]
    return PcPresentation(p, total, tuple(power), comms), blocks


def random_pc(rng: np.random.Generator, p: int, n: int, max_letters: int = 2) -> PcPresentation:
    """Relation words with at most max_letters letters on higher generators"""

    def word_above(lowest: int) -> Word:
        higher = list(range(lowest + 1, n))
        if not higher or rng.random() < 0.4:
            return ()
        count = int(rng.integers(1, min(max_letters, len(higher)) + 1))
        gens = sorted(int(g) for g in rng.choice(higher, size=count, replace=False))
        return tuple((g, int(rng.integers(1, p))) for g in gens)

    power = tuple(word_above(i) for i in range(n))
    comms = {(j, i): word_above(j) for j in range(n) for i in range(j)}
    return PcPresentation(p, n, power, comms)


def _sign_patterns(blocks: Blocks, spec: CorpusSpec) -> List[Tuple[int, ...]]:
    count = len(blocks)
    if spec.involution_policy == InvolutionPolicy.INVERSION:
        return [(-1,) * count]
    if spec.involution_policy == InvolutionPolicy.SUPPLIED:
        return [tuple(s) for s in spec.supplied_signs if len(s) == count]
    patterns = []
    for minus in range(count + 1):
        for chosen in itertools.combinations(range(count), minus):
            patterns.append(tuple(-1 if k in chosen else 1 for k in range(count)))
    return patterns


def _images(n: int, blocks: Blocks, signs: Sequence[int]) -> Tuple[Word, ...]:
    images: List[Word] = [((i, 1),) for i in range(n)]
    for block, sign in zip(blocks, signs):
        for i in block:
            images[i] = ((i, sign),)
    return tuple(images)


def _family_members(spec: CorpusSpec, rng: np.random.Generator, stats: GenerationStats):
    p, top = spec.p, spec.max_order_exponent
    for family in spec.families:
        if family == Family.ELEMENTARY_ABELIAN:
            for rank in range(spec.min_rank, top + 1):
                yield family, f"elementary_abelian(rank={rank})", *elementary_abelian(p, rank)
        elif family == Family.HOMOCYCLIC:
            for exponent in range(2, top + 1):
                for rank in range(1, top // exponent + 1):
                    yield family, f"homocyclic(e={exponent},d={rank})", *homocyclic(p, exponent, rank)
        elif family == Family.EXTRASPECIAL:
            for half in range(1, (top - 1) // 2 + 1):
                yield family, f"extraspecial(order={p}^{2 * half + 1})", *extraspecial(p, half)
        elif family == Family.METACYCLIC_POWERFUL:
            for m in range(2, top + 1):
                for n in range(max(1, m - 1), top - m + 1):
                    yield family, f"metacyclic_powerful(m={m},n={n})", *metacyclic_powerful(p, m, n)
        elif family == Family.RANDOM_PC:
            for sample in range(spec.random_samples):
                n = int(rng.integers(min(2, top), top + 1))
                pres = random_pc(rng, p, n)
                if consistency_check(pres):
                    stats.rejected_presentations += 1
                    logger.debug("corpus_member_rejected", family=family.value, sample=sample)
                    continue
                yield family, f"random_pc(seed={spec.seed},sample={sample})", pres, [[i] for i in range(n)]


def generate(spec: CorpusSpec, stats: Optional[GenerationStats] = None) -> Iterator[CorpusMember]:
    """
    Stream validated (presentation, involution) pairs.

    Deterministic in spec (the seed only drives random_pc). Candidate
    involutions failing validation are dropped and counted in ``stats``;
    a member above ``spec.table_cap`` raises TableCapExceededError.
    """
    stats = stats if stats is not None else GenerationStats()
    rng = np.random.default_rng(spec.seed)
    for family, tag, pres, blocks in _family_members(spec, rng, stats):
        stats.presentations += 1
        table = build_table(pres, spec.table_cap)
        seen = set()
        for signs in _sign_patterns(blocks, spec):
            stats.candidate_involutions += 1
            images = _images(pres.n, blocks, signs)
            try:
                act = validate_involution(pres, images, table=table)
            except InputError as exc:
                stats.rejected_involutions += 1
                logger.debug("involution_rejected", tag=tag, signs=signs, reason=str(exc))
                continue
            split = eigen_ranks(act, 1)
            key = (split.d_plus, split.d_minus)
            if key in seen:
                continue
            seen.add(key)
            stats.emitted += 1
            sign_text = "".join("+" if s > 0 else "-" for s in signs)
            yield CorpusMember(family, pres, images, act, f"{tag}[{sign_text}]")
    logger.info("corpus_generated", **stats.model_dump())
