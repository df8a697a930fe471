"""
Tests for the polycyclic presentation engine
"""

import numpy as np
import pytest
from src.propp_toolkit.core.pc_engine import (
    GroupTable,
    PcPresentation,
    build_table,
    collect_multiply,
    consistency_check,
    ensure_consistent,
    normal_closure,
    quotient_table,
    subgroup_closure,
)
from src.propp_toolkit.errors import (
    InconsistentPresentationError,
    InputError,
    InternalFault,
    NonNormalSubgroupError,
    PresentationSyntaxError,
    TableCapExceededError,
)


@pytest.fixture
def heisenberg():
    """Extraspecial group of order 27 and exponent 3: [g2, g1] = g3"""
    return PcPresentation(3, 3, commutators={(1, 0): ((2, 1),)})


@pytest.fixture
def metacyclic():
    """<a, b | a^9 = b^9 = 1, a^b = a^4> with g1 = b, g2 = b^3, g3 = a, g4 = a^3"""
    return PcPresentation(
        3,
        4,
        power=(((1, 1),), (), ((3, 1),), ()),
        commutators={(2, 0): ((3, 1),)},
    )


def test_generator_relations(heisenberg):
    """Test that collection honours the defining commutator"""
    g1, g2, g3 = (heisenberg.generator(i) for i in range(3))
    assert heisenberg.commutator(g2, g1) == g3
    assert heisenberg.multiply(g2, g1) == (1, 1, 1)
    assert heisenberg.power_of(g1, 3) == heisenberg.identity


def test_power_relation(metacyclic):
    """Test that g1^3 collects to g2 and a has order 9"""
    g1 = metacyclic.generator(0)
    assert metacyclic.power_of(g1, 3) == (0, 1, 0, 0)
    assert metacyclic.power_of(metacyclic.generator(2), 9) == metacyclic.identity


def test_inverse_and_negative_exponents(heisenberg):
    """Test inverses against products and words with negative exponents"""
    assert heisenberg.evaluate(((0, -1),)) == (2, 0, 0)
    for vec in [(1, 2, 0), (2, 1, 1), (0, 1, 2)]:
        assert heisenberg.multiply(vec, heisenberg.inverse(vec)) == heisenberg.identity


def test_consistent_presentations(heisenberg, metacyclic):
    """Test that well-formed groups pass every test word"""
    assert consistency_check(heisenberg) == []
    assert consistency_check(metacyclic) == []


def test_inconsistent_presentation():
    """Test that g1^3 = g2 clashes with [g2, g1] = g3"""
    pres = PcPresentation(3, 3, power=(((1, 1),), (), ()), commutators={(1, 0): ((2, 1),)})
    violations = consistency_check(pres)
    assert violations
    assert all(v.left != v.right for v in violations)
    with pytest.raises(InconsistentPresentationError):
        ensure_consistent(pres)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"commutators": {(1, 0): ((0, 1),)}},
        {"commutators": {(0, 1): ((2, 1),)}},
        {"commutators": {(1, 0): ((2, 3),)}},
        {"power": (((0, 1),), (), ())},
        {"power": (((5, 1),), (), ())},
    ],
)
def test_malformed_relations(kwargs):
    """Test structural checks on relation words"""
    with pytest.raises(PresentationSyntaxError):
        PcPresentation(3, 3, **kwargs)


def test_prime_two_rejected():
    """Test that presentations over p = 2 are refused"""
    with pytest.raises(InputError, match="odd"):
        PcPresentation(2, 1)


def test_build_table(heisenberg):
    """Test table size, indexing and non-commutativity"""
    table = build_table(heisenberg, cap=27)
    assert table.order == 27
    assert not table.is_abelian
    assert table.generators == (9, 3, 1)
    assert np.all(table.mul[np.arange(27), table.inv] == 0)


def test_table_matches_collection(metacyclic):
    """Test that every table entry agrees with direct collection"""
    table = build_table(metacyclic, cap=81)
    rng = np.random.default_rng(3)
    for a, b in rng.integers(0, 81, size=(200, 2)):
        expected = metacyclic.index_of(collect_multiply(metacyclic, table.labels[a], table.labels[b]))
        assert table.mul[a, b] == expected


def test_table_cap(heisenberg):
    """Test that the cap is enforced before any collection"""
    with pytest.raises(TableCapExceededError) as exc:
        build_table(heisenberg, cap=26)
    assert exc.value.order == 27


def test_power_map(metacyclic):
    """Test x -> x^9 is trivial and x -> x^3 is not"""
    table = build_table(metacyclic, cap=81)
    assert np.all(table.power_map(9) == table.identity)
    assert np.any(table.power_map(3) != table.identity)


def test_subgroup_closure(heisenberg):
    """Test orders of generated subgroups"""
    table = build_table(heisenberg, cap=27)
    assert subgroup_closure(table, [1]).order == 3
    assert subgroup_closure(table, [9, 3]).order == 27
    assert subgroup_closure(table, []).is_trivial()


def test_normal_closure(heisenberg):
    """Test that the normal closure of g1 picks up the centre"""
    table = build_table(heisenberg, cap=27)
    closure = normal_closure(table, [9])
    assert closure.order == 9
    assert 1 in closure


def test_quotient_by_centre(heisenberg):
    """Test G / Z(G) is abelian of order 9"""
    table = build_table(heisenberg, cap=27)
    quotient = quotient_table(table, subgroup_closure(table, [1]))
    assert quotient.order == 9
    assert quotient.is_abelian
    assert quotient.identity == 0
    assert len(quotient.generators) == 2


def test_quotient_by_non_normal_subgroup(heisenberg):
    """Test that <g1> is rejected with a witness"""
    table = build_table(heisenberg, cap=27)
    with pytest.raises(NonNormalSubgroupError) as exc:
        quotient_table(table, subgroup_closure(table, [9]))
    element, _, image = exc.value.witness
    assert element in subgroup_closure(table, [9])
    assert image not in subgroup_closure(table, [9])


def test_check_laws_catches_broken_table():
    """Test that a table with a wrong inverse column is a fault"""
    broken = GroupTable(3, np.array([[0, 1, 2], [1, 2, 0], [2, 1, 0]]), np.array([0, 2, 1]))
    with pytest.raises(InternalFault):
        broken.check_laws()


def test_trivial_group():
    """Test the group with no generators"""
    table = build_table(PcPresentation(3, 0), cap=1)
    assert table.order == 1
    assert table.generators == ()
