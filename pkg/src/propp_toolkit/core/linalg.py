"""
Exact dense linear algebra over F_p, p an odd prime below 2^16.

Matrices are int64 numpy arrays holding residues in [0, p). Products are
taken in float64 when the accumulated sum provably stays below 2^53 (then
BLAS is exact), otherwise in int64. IncrementalEchelon keeps its absorbed
rows as uint8/uint16 residues to bound memory on tall systems.
"""

from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import structlog
from sympy import isprime

from ..errors import InputError, InternalFault, NotAnInvolutionError

logger = structlog.get_logger(__name__)

MAX_PRIME = 2 ** 16
_FLOAT_EXACT = 2 ** 53


def check_prime(p: int) -> int:
    """Validate the global prime assumption: p odd prime, p < 2^16"""
    if p == 2:
        raise InputError("p must be odd")
    if p < 2 or not isprime(p):
        raise InputError(f"p must be prime, got {p}")
    if p >= MAX_PRIME:
        raise InputError(f"p must be below {MAX_PRIME}, got {p}")
    return int(p)


def mulmod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Matrix product reduced mod p"""
    inner = a.shape[1]
    if inner == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if inner * (p - 1) ** 2 < _FLOAT_EXACT:
        prod = np.rint(a.astype(np.float64) @ b.astype(np.float64)).astype(np.int64)
        return prod % p
    return (a.astype(np.int64) @ b.astype(np.int64)) % p


def rref(a: np.ndarray, p: int) -> Tuple[np.ndarray, List[int]]:
    """
    Reduced row echelon form over F_p with first-nonzero pivot selection.

    Returns:
        (rows, pivots): the nonzero rows of the RREF and their pivot columns
    """
    work = np.array(a, dtype=np.int64, copy=True) % p
    if work.ndim != 2:
        raise InputError("rref expects a 2-D array")
    m, n = work.shape
    pivots: List[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.flatnonzero(work[r:, c])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            work[[r, piv]] = work[[piv, r]]
        work[r] = (work[r] * pow(int(work[r, c]), -1, p)) % p
        col = work[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            work[hit] = (work[hit] - np.outer(col[hit], work[r])) % p
        pivots.append(c)
        r += 1
    return work[:r], pivots


def _kernel_from_rref(rows: np.ndarray, pivots: Sequence[int], ncols: int, p: int) -> np.ndarray:
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = np.zeros((len(free), ncols), dtype=np.int64)
    if not free:
        return basis
    basis[np.arange(len(free)), free] = 1
    if pivots:
        basis[:, list(pivots)] = (-rows[:, free].T) % p
    return basis


@dataclass(frozen=True, eq=False)
class MatFp:
    """Dense matrix over F_p"""

    p: int
    entries: np.ndarray

    def __post_init__(self):
        check_prime(self.p)
        arr = np.array(self.entries, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            raise InputError(f"matrix must be 2-D, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.p):
            raise InputError(f"matrix entries must lie in [0, {self.p})")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], p: int, cols: Optional[int] = None) -> "MatFp":
        """Build from integer rows, reducing every entry mod p"""
        data = [list(r) for r in rows]
        if not data:
            return cls(p, np.zeros((0, cols or 0), dtype=np.int64))
        return cls(p, np.array(data, dtype=np.int64) % p)

    @classmethod
    def identity(cls, n: int, p: int) -> "MatFp":
        return cls(p, np.eye(n, dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __matmul__(self, other: "MatFp") -> "MatFp":
        if other.p != self.p:
            raise InputError("matrices over different primes")
        if self.cols != other.rows:
            raise InputError(f"shape mismatch {self.entries.shape} @ {other.entries.shape}")
        return MatFp(self.p, mulmod(self.entries, other.entries, self.p))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatFp):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.p, self.entries.shape, self.entries.tobytes()))

    def transpose(self) -> "MatFp":
        return MatFp(self.p, self.entries.T)

    def to_rows(self) -> List[List[int]]:
        return [[int(x) for x in row] for row in self.entries]

    def __repr__(self) -> str:
        return f"MatFp(p={self.p}, {self.to_rows()})"


def rank(m: MatFp) -> int:
    """F_p-rank by exact row reduction"""
    if m.rows == 0 or m.cols == 0:
        return 0
    _, pivots = rref(m.entries, m.p)
    return len(pivots)


def kernel_basis(m: MatFp) -> List[np.ndarray]:
    """
    Basis of the right null space {v : m v = 0}.

    The basis is read off the RREF: one vector per free column f, with a 1 in
    position f, so identical inputs always give identical bases.
    """
    rows, pivots = rref(m.entries, m.p) if m.rows else (np.zeros((0, m.cols), dtype=np.int64), [])
    return list(_kernel_from_rref(rows, pivots, m.cols, m.p))


def column_space_basis(m: MatFp) -> List[np.ndarray]:
    """Canonical (RREF) basis of the column space"""
    if m.rows == 0 or m.cols == 0:
        return []
    rows, _ = rref(m.entries.T, m.p)
    return list(rows)


class InvolutionEigenspaces(NamedTuple):
    dim_plus: int
    dim_minus: int
    basis_plus: List[np.ndarray]
    basis_minus: List[np.ndarray]


def eigensplit_involution(m: MatFp) -> InvolutionEigenspaces:
    """
    Split F_p^n into the +1 and -1 eigenspaces of an involution.

    The plus space is the image of (1 + m)/2, the minus space that of
    (1 - m)/2; 2 is invertible because p is odd.
    """
    if m.p == 2:
        raise NotAnInvolutionError("eigen split needs p odd")
    if not m.is_square:
        raise NotAnInvolutionError(f"matrix is not square: {m.entries.shape}")
    n = m.rows
    ident = np.eye(n, dtype=np.int64)
    if not np.array_equal(mulmod(m.entries, m.entries, m.p), ident):
        raise NotAnInvolutionError("matrix does not square to the identity")

    half = pow(2, -1, m.p)
    plus = MatFp(m.p, (half * (ident + m.entries)) % m.p)
    minus = MatFp(m.p, (half * (ident - m.entries)) % m.p)
    basis_plus = column_space_basis(plus)
    basis_minus = column_space_basis(minus)
    if len(basis_plus) + len(basis_minus) != n:
        raise InternalFault("eigenspaces of an involution do not span the space")
    return InvolutionEigenspaces(len(basis_plus), len(basis_minus), basis_plus, basis_minus)


def span_coordinates(basis: np.ndarray, vectors: np.ndarray, p: int) -> np.ndarray:
    """
    Coordinates of each row of ``vectors`` in terms of the rows of ``basis``.

    The basis rows must be linearly independent and every vector must lie in
    their span.

    Returns:
        array of shape (len(vectors), len(basis))
    """
    k = basis.shape[0]
    if vectors.shape[0] == 0:
        return np.zeros((0, k), dtype=np.int64)
    aug = np.concatenate([basis.T, vectors.T], axis=1) % p
    rows, pivots = rref(aug, p)
    if pivots[:k] != list(range(k)) or len(pivots) > k:
        raise InternalFault("vectors are not in the span of an independent basis")
    return rows[:k, k:].T.copy()


def residue_dtype(p: int) -> np.dtype:
    """Smallest unsigned type holding residues mod p"""
    return np.dtype(np.uint8) if p <= 2 ** 8 else np.dtype(np.uint16)


class IncrementalEchelon:
    """
    Row space of a linear system fed in blocks.

    Each block is reduced against the rows already absorbed with one matrix
    product, so a tall system never has to be materialized at once. Absorbed
    rows are kept as small unsigned residues; arithmetic widens per block.
    """

    def __init__(self, ncols: int, p: int):
        self.p = p
        self.ncols = ncols
        self._dtype = residue_dtype(p)
        self._rows = np.zeros((0, ncols), dtype=self._dtype)
        self.pivots: List[int] = []

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def rows(self) -> np.ndarray:
        """Reduced rows sorted by pivot column, widened to int64"""
        return self._rows.astype(np.int64)

    @property
    def nbytes(self) -> int:
        return int(self._rows.nbytes)

    def absorb(self, block: np.ndarray) -> int:
        """Add the rows of ``block``; returns how many new pivots appeared"""
        work = np.asarray(block, dtype=np.int64) % self.p
        if work.shape[0] == 0:
            return 0
        if self.pivots:
            work = (work - mulmod(work[:, self.pivots], self._rows, self.p)) % self.p
        new_rows, new_pivots = rref(work, self.p)
        if not new_pivots:
            return 0
        current = self._rows.astype(np.int64)
        if self.pivots:
            current = (current - mulmod(current[:, new_pivots], new_rows, self.p)) % self.p
        rows = np.concatenate([current, new_rows], axis=0)
        pivots = self.pivots + new_pivots
        order = np.argsort(pivots, kind="stable")
        self._rows = rows[order].astype(self._dtype)
        self.pivots = [pivots[i] for i in order]
        return len(new_pivots)

    def kernel_basis(self) -> np.ndarray:
        """Right null space of everything absorbed, one row per basis vector"""
        return _kernel_from_rref(self.rows, self.pivots, self.ncols, self.p)


class QuotientProjector:
    """Coordinates on F_p^n / span(relations), read off the free columns"""

    def __init__(self, relations: np.ndarray, n: int, p: int):
        self.p = p
        self.n = n
        rel = np.asarray(relations, dtype=np.int64)
        rel = rel.reshape(len(rel), n) % p
        if rel.shape[0]:
            self.rows, self.pivots = rref(rel, p)
        else:
            self.rows, self.pivots = np.zeros((0, n), dtype=np.int64), []
        self.free = [c for c in range(n) if c not in set(self.pivots)]

    @property
    def dim(self) -> int:
        return len(self.free)

    def project(self, vectors: np.ndarray) -> np.ndarray:
        vecs = np.atleast_2d(np.asarray(vectors, dtype=np.int64)) % self.p
        if self.pivots:
            vecs = (vecs - mulmod(vecs[:, self.pivots], self.rows, self.p)) % self.p
        return vecs[:, self.free]
