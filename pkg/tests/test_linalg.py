"""
Tests for exact linear algebra over F_p
"""

import numpy as np
import pytest
from src.propp_toolkit.core.linalg import (
    IncrementalEchelon,
    MatFp,
    QuotientProjector,
    check_prime,
    eigensplit_involution,
    kernel_basis,
    mulmod,
    rank,
    residue_dtype,
    span_coordinates,
)
from src.propp_toolkit.errors import InputError, NotAnInvolutionError


@pytest.fixture
def random_matrix():
    """A reproducible 8 x 10 matrix over F_7"""
    rng = np.random.default_rng(11)
    return MatFp(7, rng.integers(0, 7, size=(8, 10)))


def test_check_prime_rejects_two():
    """Test that p = 2 is refused with the odd-prime message"""
    with pytest.raises(InputError, match="p must be odd"):
        check_prime(2)


@pytest.mark.parametrize("value", [1, 9, 15, 0])
def test_check_prime_rejects_composites(value):
    """Test that non-primes are refused"""
    with pytest.raises(InputError, match="p must be prime"):
        check_prime(value)


def test_check_prime_upper_bound():
    """Test the 2^16 limit on the modulus"""
    assert check_prime(65521) == 65521
    with pytest.raises(InputError):
        check_prime(65537)


def test_entries_must_be_reduced():
    """Test that entries outside [0, p) are rejected but from_rows reduces"""
    with pytest.raises(InputError):
        MatFp(3, np.array([[3]]))
    m = MatFp.from_rows([[4, -1]], 3)
    assert m.to_rows() == [[1, 2]]


def test_rank_of_dependent_rows():
    """Test rank when one row is a multiple of another"""
    assert rank(MatFp.from_rows([[1, 2], [2, 4]], 3)) == 1
    assert rank(MatFp.identity(4, 5)) == 4


def test_kernel_basis(random_matrix):
    """Test that kernel vectors are annihilated and have the right count"""
    basis = kernel_basis(random_matrix)
    assert len(basis) == random_matrix.cols - rank(random_matrix)
    for v in basis:
        assert not np.any(mulmod(random_matrix.entries, v.reshape(-1, 1), 7))


def test_kernel_basis_is_canonical():
    """Test the free-column convention of the kernel basis"""
    m = MatFp.from_rows([[1, 2, 0], [0, 0, 1]], 3)
    basis = kernel_basis(m)
    assert [list(v) for v in basis] == [[1, 1, 0]]


def test_mulmod_large_prime():
    """Test that products stay exact when float64 would not be"""
    p = 65521
    a = np.full((3, 300), p - 1, dtype=np.int64)
    b = np.full((300, 2), p - 1, dtype=np.int64)
    expected = (300 * (p - 1) ** 2) % p
    assert np.all(mulmod(a, b, p) == expected)


def test_matmul_and_equality():
    """Test MatFp product and value equality"""
    a = MatFp.from_rows([[1, 1], [0, 1]], 5)
    b = MatFp.from_rows([[1, 4], [0, 1]], 5)
    assert a @ b == MatFp.identity(2, 5)
    assert hash(a @ b) == hash(MatFp.identity(2, 5))


@pytest.mark.parametrize(
    "rows,expected",
    [
        ([[1, 0, 0], [0, 1, 0], [0, 0, 1]], (3, 0)),
        ([[2, 0], [0, 2]], (0, 2)),
        ([[1, 0], [0, 2]], (1, 1)),
        ([[0, 1], [1, 0]], (1, 1)),
    ],
)
def test_eigensplit_involution(rows, expected):
    """Test plus/minus eigenspace dimensions"""
    split = eigensplit_involution(MatFp.from_rows(rows, 3))
    assert (split.dim_plus, split.dim_minus) == expected
    assert len(split.basis_plus) + len(split.basis_minus) == len(rows)


def test_eigensplit_rejects_non_involution():
    """Test that a unipotent matrix is not accepted"""
    with pytest.raises(NotAnInvolutionError):
        eigensplit_involution(MatFp.from_rows([[1, 1], [0, 1]], 3))


def test_eigensplit_transpose_agrees():
    """Test that a matrix and its transpose split the same way"""
    m = MatFp.from_rows([[1, 1, 0], [0, 2, 0], [0, 0, 2]], 3)
    direct = eigensplit_involution(m)
    dual = eigensplit_involution(m.transpose())
    assert (direct.dim_plus, direct.dim_minus) == (dual.dim_plus, dual.dim_minus)


def test_span_coordinates():
    """Test coordinates relative to an independent basis"""
    basis = np.array([[1, 0, 1], [0, 1, 1]])
    coords = span_coordinates(basis, np.array([[2, 3, 0]]), 5)
    assert coords.tolist() == [[2, 3]]


def test_incremental_echelon_matches_full(random_matrix):
    """Test that block absorption gives the full row space"""
    echelon = IncrementalEchelon(10, 7)
    entries = random_matrix.entries
    for start in range(0, 8, 3):
        echelon.absorb(entries[start:start + 3])
    assert echelon.rank == rank(random_matrix)
    full = np.array(kernel_basis(random_matrix)).reshape(-1, 10)
    assert np.array_equal(echelon.kernel_basis(), full)


def test_incremental_echelon_reports_new_pivots():
    """Test the pivot count returned by absorb"""
    echelon = IncrementalEchelon(3, 3)
    assert echelon.absorb(np.array([[1, 1, 0]])) == 1
    assert echelon.absorb(np.array([[2, 2, 0]])) == 0
    assert echelon.absorb(np.array([[0, 1, 1], [1, 2, 1]])) == 1


def test_quotient_projector():
    """Test projection onto F_p^n modulo a relation span"""
    projector = QuotientProjector(np.array([[1, 1, 0]]), 3, 3)
    assert projector.dim == 2
    assert projector.free == [1, 2]
    assert projector.project(np.array([1, 0, 0])).tolist() == [[2, 0]]


def test_quotient_projector_without_relations():
    """Test that an empty relation set leaves every coordinate free"""
    projector = QuotientProjector(np.zeros((0, 2), dtype=np.int64), 2, 5)
    assert projector.dim == 2
    assert projector.project(np.array([3, 4])).tolist() == [[3, 4]]


@pytest.mark.parametrize("p,dtype", [(3, np.uint8), (251, np.uint8), (257, np.uint16), (65521, np.uint16)])
def test_residue_dtype(p, dtype):
    """Test the storage type chosen for residues mod p"""
    assert residue_dtype(p) == np.dtype(dtype)


def test_incremental_echelon_stores_small_residues():
    """Test compact row storage with widened rows on read"""
    echelon = IncrementalEchelon(1000, 3)
    echelon.absorb(np.eye(1000, dtype=np.int64)[:100] * 2)
    assert echelon.nbytes == 100 * 1000
    assert echelon.rows.dtype == np.int64
    assert echelon.rows[0, 0] == 1
    assert echelon.kernel_basis().shape == (900, 1000)
