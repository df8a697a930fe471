"""
Tests for H^1, H^2 and Tate cohomology
"""

import numpy as np
import pytest
from src.propp_toolkit.core.cohomology import (
    TateModule,
    compute_cohomology,
    h2_dim_brute,
    h2_dim_dense,
    h2_eigensplit,
    kunneth_dims,
    p_h2_qpzp_dims,
    pc_sequence,
    prop22_layer_bound,
    random_tate_module,
    tate_h0_h1,
    uniform_h2_dims,
)
from src.propp_toolkit.core.involution import EigenSplit, validate_involution
from src.propp_toolkit.core.linalg import IncrementalEchelon
from src.propp_toolkit.core.pc_engine import PcPresentation, build_table
from src.propp_toolkit.errors import (
    CohomologyInconsistencyError,
    ComputationTooLargeError,
    InputError,
    InvalidTateModuleError,
    TableCapExceededError,
)


def _elementary(signs):
    """(Z/3)^r with sigma acting diagonally by the given signs"""
    pres = PcPresentation(3, len(signs))
    return validate_involution(pres, [((i, s),) for i, s in enumerate(signs)])


@pytest.fixture
def heisenberg_action():
    """Extraspecial group of order 27 with g1, g2 inverted"""
    pres = PcPresentation(3, 3, commutators={(1, 0): ((2, 1),)})
    return validate_involution(pres, [((0, -1),), ((1, -1),), ((2, 1),)])


@pytest.mark.parametrize(
    "signs,h2",
    [([1], 1), ([1, 1], 3), ([1, 1, 1], 6)],
)
def test_h2_elementary_abelian(signs, h2):
    """Test dim H^2((Z/3)^r) = r + r(r-1)/2"""
    act = _elementary(signs)
    computation = h2_dim_brute(act.table)
    assert computation.dim == h2
    assert computation.d == len(signs)
    assert computation.b2_dim == act.table.order - 1 - len(signs)
    assert computation.representatives.shape[0] == h2


def test_h2_cyclic_of_order_nine():
    """Test that Z/9 has one-dimensional H^1 and H^2"""
    table = build_table(PcPresentation(3, 2, power=(((1, 1),), ())), cap=9)
    report = compute_cohomology(table)
    assert (report.h1, report.h2, report.p_h2_qpzp) == (1, 1, 0)
    assert report.h2_plus is None


def test_h2_heisenberg(heisenberg_action):
    """Test the extraspecial group: Schur multiplier of rank 2"""
    report = compute_cohomology(heisenberg_action.table, heisenberg_action)
    assert report.h1 == 2
    assert report.h2 == 4
    assert report.p_h2_qpzp == 2
    assert (report.h1_plus, report.h1_minus) == (0, 2)
    assert report.h2_plus + report.h2_minus == 4
    assert report.p_h2_qpzp_plus + report.p_h2_qpzp_minus == 2
    assert report.z2_dim == report.b2_dim + report.h2


@pytest.mark.parametrize(
    "signs",
    [[-1], [1, -1], [1, -1, -1], [-1, -1], [1, 1, -1]],
)
def test_h2_split_matches_kunneth(signs):
    """Test the brute-force H^2 split against the closed form"""
    act = _elementary(signs)
    split = h2_eigensplit(act.table, act)
    d_plus = signs.count(1)
    assert (split.d_plus, split.d_minus) == kunneth_dims(d_plus, len(signs) - d_plus)


def test_h2_split_reuses_computation():
    """Test that a precomputed system gives the same split"""
    act = _elementary([1, -1])
    computation = h2_dim_brute(act.table)
    assert h2_eigensplit(act.table, act, computation) == h2_eigensplit(act.table, act)


def test_h2_split_needs_elementwise_action(heisenberg_action):
    """Test that a relation-level involution cannot act on cochains"""
    pres = PcPresentation(3, 3, commutators={(1, 0): ((2, 1),)})
    relations_only = validate_involution(pres, [((0, -1),), ((1, -1),), ((2, 1),)], cap=9)
    with pytest.raises(InputError):
        h2_eigensplit(heisenberg_action.table, relations_only)


def test_brute_cap(heisenberg_action):
    """Test the cap on the cocycle system"""
    with pytest.raises(TableCapExceededError, match="cocycle system"):
        h2_dim_brute(heisenberg_action.table, cap=9)


@pytest.mark.parametrize(
    "pres",
    [
        PcPresentation(3, 1),
        PcPresentation(3, 2),
        PcPresentation(3, 2, power=(((1, 1),), ())),
        PcPresentation(3, 3),
        PcPresentation(3, 3, power=(((1, 1),), ((2, 1),), ())),
        PcPresentation(3, 3, commutators={(1, 0): ((2, 1),)}),
        PcPresentation(5, 2),
    ],
)
def test_generator_system_matches_dense_system(pres):
    """Test H^2 from generator values against the full cocycle identity"""
    table = build_table(pres, cap=pres.order)
    assert h2_dim_brute(table).dim == h2_dim_dense(table)


def test_dense_system_cap(heisenberg_action):
    """Test that the dense cross-check keeps its own small cap"""
    with pytest.raises(TableCapExceededError, match="dense cocycle system"):
        h2_dim_dense(heisenberg_action.table, cap=9)


def test_pc_sequence_gives_normal_forms(heisenberg_action):
    """Test that every element has one exponent vector"""
    gens, exponents = pc_sequence(heisenberg_action.table)
    assert len(gens) == 3
    assert len({tuple(row) for row in exponents}) == 27
    assert exponents.max() == 2


def test_h2_at_order_243_within_default_cap():
    """Test (Z/3)^5 under the default cap, with its Kunneth split"""
    act = _elementary([1, 1, -1, -1, -1])
    computation = h2_dim_brute(act.table)
    assert act.table.order == 243
    assert computation.dim == 15
    assert len(computation.generators) == 5
    assert computation.representatives.shape == (15, 242 * 5)
    split = h2_eigensplit(act.table, act, computation)
    assert (split.d_plus, split.d_minus) == kunneth_dims(2, 3) == (6, 9)


def test_h2_split_homocyclic_inversion():
    """Test Z/9 x Z/9 with sigma = -1: Bockstein classes odd, the cup product even"""
    pres = PcPresentation(3, 4, power=(((1, 1),), (), ((3, 1),), ()))
    act = validate_involution(pres, [((i, -1),) for i in range(4)])
    report = compute_cohomology(act.table, act)
    assert (report.h1, report.h2, report.p_h2_qpzp) == (2, 3, 1)
    assert (report.h2_plus, report.h2_minus) == (1, 2)
    assert (report.p_h2_qpzp_plus, report.p_h2_qpzp_minus) == (1, 0)


def test_allocation_failure_is_a_cap_error(heisenberg_action, monkeypatch):
    """Test that running out of memory in the solver is a clean input error"""

    def exhausted(self, block):
        raise MemoryError()

    monkeypatch.setattr(IncrementalEchelon, "absorb", exhausted)
    with pytest.raises(ComputationTooLargeError, match="does not fit in memory") as exc:
        h2_dim_brute(heisenberg_action.table)
    assert isinstance(exc.value, InputError)
    assert exc.value.order == 27


def test_closed_forms():
    """Test Kunneth and uniform dimension formulas"""
    assert kunneth_dims(1, 2) == (2, 4)
    assert kunneth_dims(0, 1) == (0, 1)
    assert kunneth_dims(3, 0) == (6, 0)
    assert uniform_h2_dims(2, 1) == (1, 2)
    assert uniform_h2_dims(1, 0) == (0, 0)


def test_p_h2_qpzp_dims():
    """Test the divisible-coefficient differences and their sign check"""
    assert p_h2_qpzp_dims(4, 1, 3, 2, 0, 2) == (2, 1, 1)
    with pytest.raises(CohomologyInconsistencyError):
        p_h2_qpzp_dims(1, 1, 0, 2, 1, 1)


def test_layer_bound():
    """Test the per-sign flags of the layer bound"""
    first = EigenSplit(d_plus=2, d_minus=0)
    empty = EigenSplit(d_plus=0, d_minus=0)
    assert prop22_layer_bound(first, empty, 0, 0) == (False, True)
    assert prop22_layer_bound(first, EigenSplit(d_plus=1, d_minus=0), 0, 0) == (True, True)


@pytest.mark.parametrize(
    "orders,action,n,h0,h_minus1",
    [
        ([3], [[1]], 3, [3], [3]),
        ([3], [[2]], 2, [], []),
        ([9], [[1]], 3, [3], [3]),
        ([9], [[1]], 9, [9], [9]),
        ([4], [[1]], 2, [2], [2]),
        ([3, 3], [[0, 1], [1, 0]], 2, [], []),
    ],
)
def test_tate_cohomology(orders, action, n, h0, h_minus1):
    """Test H^0 and H^-1 of small cyclic modules"""
    result = tate_h0_h1(TateModule(orders, action, n, 3))
    assert result.h0 == h0
    assert result.h_minus1 == h_minus1
    assert result.h0_order == int(np.prod(h0, dtype=np.int64))
    assert result.p_rank_h0 == sum(1 for q in h0 if q % 3 == 0)


@pytest.mark.parametrize(
    "orders,action,n",
    [
        ([3], [[0]], 1),
        ([3], [[2]], 1),
        ([2, 4], [[0, 1], [1, 0]], 2),
        ([0], [[1]], 1),
        ([3], [[1]], 0),
    ],
)
def test_invalid_tate_modules(orders, action, n):
    """Test non-invertible, wrong-order and ill-defined actions"""
    with pytest.raises(InvalidTateModuleError):
        TateModule(orders, action, n, 3)


def test_tate_cap():
    """Test that enumeration is capped"""
    with pytest.raises(TableCapExceededError):
        TateModule([9, 9], [[1, 0], [0, 1]], 1, 3, cap=80)


@pytest.mark.parametrize("seed", range(8))
def test_herbrand_quotient_is_one(seed):
    """Test |H^0| = |H^-1| on random finite modules"""
    module = random_tate_module(np.random.default_rng(seed), 3)
    result = tate_h0_h1(module)
    assert result.h0_order == result.h_minus1_order
