"""
Cohomology - H^1 and H^2 of a finite p-group with trivial F_p coefficients

A normalized 2-cocycle is determined by its values f(x, g) with g running
over a polycyclic generating sequence, and such values come from a cocycle
exactly when every defining relation lifts to a constant translation. H^2 is
that solution space modulo coboundaries, solved by block elimination. The
full cocycle identity over all |G|^2 values is kept as a cross-check for
small groups. Also here: the closed-form Kunneth counts, the divisible
coefficient dimensions from the Bockstein sequence, and Tate cohomology of
finite cyclic actions.
"""

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel
from sympy import Matrix, factorint, isprime

from ..errors import (
    CohomologyInconsistencyError,
    ComputationTooLargeError,
    InputError,
    InternalFault,
    InvalidTateModuleError,
    TableCapExceededError,
)
from .involution import EigenSplit, InvolutionAction, eigen_ranks
from .linalg import IncrementalEchelon, MatFp, eigensplit_involution, span_coordinates
from .pc_engine import GroupTable
from .structure import generator_rank, layer_coordinates, log_p, p_central_series

logger = structlog.get_logger(__name__)

DEFAULT_BRUTE_CAP = 256
DEFAULT_TATE_CAP = 4096
DENSE_COCYCLE_CAP = 27
DENSE_BLOCK_ROWS = 512


@dataclass
class H2Computation:
    """
    Result of the cocycle system.

    Cochains are stored by their values f(x, g_k) for x != 1 and g_k in
    ``generators``, at index position[x] * n + k.
    """

    p: int
    dim: int
    z2_dim: int
    b2_dim: int
    d: int
    representatives: np.ndarray
    b2_basis: np.ndarray
    generators: Tuple[int, ...]
    nonidentity: np.ndarray
    position: np.ndarray = field(repr=False)


def pc_sequence(t: GroupTable) -> Tuple[List[int], np.ndarray]:
    """
    Generators g_1..g_n refining the lower p-central series, with the
    exponent vector of every element in its normal form g_1^e_1 ... g_n^e_n.

    g_i^p and [g_j, g_i] lie in the subgroup of later generators, so the
    power relations and the relations g_j g_i = normal form (i < j) present
    the group.
    """
    gens = [b for layer in layer_coordinates(t, p_central_series(t)) for b in layer.basis]
    n = len(gens)
    elements = np.array([t.identity], dtype=np.int64)
    for g in gens:
        powers = [t.identity]
        for _ in range(1, t.p):
            powers.append(int(t.mul[powers[-1], g]))
        elements = t.mul[elements[:, None], np.array(powers)[None, :]].ravel()
    if elements.size != t.order or np.unique(elements).size != t.order:
        raise InternalFault("central series basis does not give unique normal forms")
    exponents = np.zeros((t.order, n), dtype=np.int64)
    exponents[elements] = np.array(list(itertools.product(range(t.p), repeat=n)), dtype=np.int64).reshape(t.order, n)
    return gens, exponents


def _letters(exponents: np.ndarray) -> List[int]:
    return [k for k, e in enumerate(exponents) for _ in range(int(e))]


def _walk(t: GroupTable, gens: Sequence[int], position: np.ndarray, word: Sequence[int], out: np.ndarray, sign: int):
    """Add sign * (sum of f(cur, letter) along word) to out[x] for every start x"""
    n = len(gens)
    rows = t.elements
    cur = t.elements
    for k in word:
        keep = cur != t.identity
        np.add.at(out, (rows[keep], position[cur[keep]] * n + k), sign)
        cur = t.mul[cur, gens[k]]


def _relation_blocks(t: GroupTable, gens: Sequence[int], exponents: np.ndarray, position: np.ndarray):
    """
    One block per defining relation L = R.

    Right multiplication by g_k lifts to (a, x) -> (a + f(x, g_k), x g_k).
    The values extend to a normalized cocycle exactly when every relation
    acts as the same translation from every start x.
    """
    n = len(gens)
    unknowns = (t.order - 1) * n
    nonid = np.flatnonzero(t.elements != t.identity)
    p_powers = t.power_map(t.p)
    relations = []
    for i in range(n):
        relations.append(([i] * t.p, _letters(exponents[p_powers[gens[i]]])))
        for j in range(i + 1, n):
            relations.append(([j, i], _letters(exponents[t.mul[gens[j], gens[i]]])))
    for left, right in relations:
        offset = np.zeros((t.order, unknowns), dtype=np.int64)
        _walk(t, gens, position, left, offset, 1)
        _walk(t, gens, position, right, offset, -1)
        yield (offset[nonid] - offset[t.identity]) % t.p


def coboundary_vectors(t: GroupTable, gens: Sequence[int], nonid: np.ndarray, position: np.ndarray) -> np.ndarray:
    """delta(e_u)(x, g) = [x = u] + [g = u] - [xg = u] for every u != 1"""
    m, n = nonid.size, len(gens)
    xs = np.repeat(nonid, n)
    gs = np.tile(np.asarray(gens, dtype=np.int64), m)
    cols = np.arange(m * n)
    vectors = np.zeros((m, m * n), dtype=np.int64)
    np.add.at(vectors, (position[xs], cols), 1)
    np.add.at(vectors, (position[gs], cols), 1)
    products = t.mul[xs, gs]
    keep = products != t.identity
    np.add.at(vectors, (position[products[keep]], cols[keep]), -1)
    return vectors % t.p


def h2_dim_brute(t: GroupTable, cap: int = DEFAULT_BRUTE_CAP) -> H2Computation:
    """
    dim H^2(G, F_p) by solving the normalized cocycle system.

    Unknowns are the values f(x, g) on a polycyclic generating sequence,
    (|G| - 1) * log_p |G| of them; H^2 is the solution space modulo the
    coboundaries restricted the same way.

    Args:
        t: materialized group
        cap: largest group order accepted

    Returns:
        H2Computation with representative cocycles for a basis of H^2
    """
    if t.order > cap:
        raise TableCapExceededError(t.order, cap, what="cocycle system")
    p = t.p
    gens, exponents = pc_sequence(t)
    nonid = np.flatnonzero(t.elements != t.identity)
    position = np.full(t.order, -1, dtype=np.int64)
    position[nonid] = np.arange(nonid.size)
    unknowns = nonid.size * len(gens)
    d = generator_rank(t)

    try:
        system = IncrementalEchelon(unknowns, p)
        for block in _relation_blocks(t, gens, exponents, position):
            system.absorb(block)
        cocycles = system.kernel_basis()
        coboundaries = IncrementalEchelon(unknowns, p)
        coboundaries.absorb(coboundary_vectors(t, gens, nonid, position))
    except MemoryError as e:
        raise ComputationTooLargeError(t.order, "cocycle system") from e

    z2_dim = cocycles.shape[0]
    b2_dim = t.order - 1 - d
    if coboundaries.rank != b2_dim:
        raise CohomologyInconsistencyError(
            f"coboundary rank {coboundaries.rank} differs from |G| - 1 - d = {b2_dim}"
        )
    b2_basis = coboundaries.rows

    reps = []
    for cocycle in cocycles:
        if coboundaries.absorb(cocycle[None, :]):
            reps.append(cocycle)
    dim = z2_dim - b2_dim
    if len(reps) != dim:
        raise CohomologyInconsistencyError(f"{len(reps)} representatives for H^2 of dimension {dim}")
    logger.debug(
        "cocycle_system_solved",
        order=t.order,
        unknowns=unknowns,
        stored_bytes=system.nbytes,
        z2=z2_dim,
        b2=b2_dim,
        h2=dim,
    )
    return H2Computation(
        p=p,
        dim=dim,
        z2_dim=z2_dim,
        b2_dim=b2_dim,
        d=d,
        representatives=np.array(reps, dtype=np.int64).reshape(dim, unknowns),
        b2_basis=b2_basis,
        generators=tuple(gens),
        nonidentity=nonid,
        position=position,
    )


def _spanning_tree(t: GroupTable, gens: Sequence[int]) -> List[Tuple[int, int, int]]:
    """(y, parent, k) with y = parent * g_k, in breadth-first order"""
    seen = np.zeros(t.order, dtype=bool)
    seen[t.identity] = True
    frontier = [t.identity]
    edges = []
    while frontier:
        fresh = []
        for parent in frontier:
            for k, g in enumerate(gens):
                y = int(t.mul[parent, g])
                if not seen[y]:
                    seen[y] = True
                    edges.append((y, parent, k))
                    fresh.append(y)
        frontier = fresh
    return edges


def extend_cocycle(t: GroupTable, h2: H2Computation, values: np.ndarray, tree=None) -> np.ndarray:
    """
    Full table F(x, y) of the cocycle with F(x, g_k) = values.

    F(x, y g) = F(x, y) + F(xy, g) - F(y, g) along a spanning tree.
    """
    n = len(h2.generators)
    f = np.zeros((t.order, n), dtype=np.int64)
    f[h2.nonidentity] = np.asarray(values, dtype=np.int64).reshape(h2.nonidentity.size, n)
    full = np.zeros((t.order, t.order), dtype=np.int64)
    for y, parent, k in tree if tree is not None else _spanning_tree(t, h2.generators):
        full[:, y] = (full[:, parent] + f[t.mul[:, parent], k] - f[parent, k]) % t.p
    return full


def h2_eigensplit(
    t: GroupTable,
    act: InvolutionAction,
    computation: Optional[H2Computation] = None,
    cap: int = DEFAULT_BRUTE_CAP,
) -> EigenSplit:
    """
    Eigen split of sigma on H^2, acting by (sigma f)(x, y) = f(sigma x, sigma y).

    sigma is its own inverse, so precomposition with sigma and with its
    inverse agree.
    """
    if act.permutation is None or act.table is None or act.table.order != t.order:
        raise InputError("H^2 eigen split needs an elementwise-validated involution on this table")
    h2 = computation or h2_dim_brute(t, cap)
    if h2.dim == 0:
        return EigenSplit(d_plus=0, d_minus=0)

    sigma = act.permutation
    tree = _spanning_tree(t, h2.generators)
    xs = sigma[h2.nonidentity]
    ys = sigma[np.asarray(h2.generators, dtype=np.int64)]
    moved = np.stack(
        [extend_cocycle(t, h2, rep, tree)[np.ix_(xs, ys)].ravel() for rep in h2.representatives]
    )

    basis = np.concatenate([h2.b2_basis, h2.representatives], axis=0)
    coords = span_coordinates(basis, moved, t.p)[:, h2.b2_basis.shape[0]:]
    split = eigensplit_involution(MatFp(t.p, coords.T % t.p))
    return EigenSplit(d_plus=split.dim_plus, d_minus=split.dim_minus)


def _dense_cocycle_blocks(t: GroupTable, nonid: np.ndarray, position: np.ndarray):
    """Cocycle identity with a generator in the middle, over all (|G|-1)^2 cochain values"""
    m = nonid.size
    unknowns = m * m
    xs, zs = np.meshgrid(nonid, nonid, indexing="ij")
    xs, zs = xs.ravel(), zs.ravel()
    for g in t.generators:
        xg = t.mul[xs, g]
        gz = t.mul[g, zs]
        for start in range(0, xs.size, DENSE_BLOCK_ROWS):
            stop = min(start + DENSE_BLOCK_ROWS, xs.size)
            rows = np.arange(stop - start)
            block = np.zeros((stop - start, unknowns), dtype=np.int64)
            x, z, gx, gzs = xs[start:stop], zs[start:stop], xg[start:stop], gz[start:stop]
            # f(x,g) + f(xg,z) - f(g,z) - f(x,gz) = 0, f vanishing on the identity
            np.add.at(block, (rows, position[x] * m + position[g]), 1)
            keep = gx != t.identity
            np.add.at(block, (rows[keep], position[gx[keep]] * m + position[z[keep]]), 1)
            np.add.at(block, (rows, position[g] * m + position[z]), -1)
            keep = gzs != t.identity
            np.add.at(block, (rows[keep], position[x[keep]] * m + position[gzs[keep]]), -1)
            yield block % t.p


def h2_dim_dense(t: GroupTable, cap: int = DENSE_COCYCLE_CAP) -> int:
    """
    dim H^2(G, F_p) from the cocycle identity on every cochain value.

    Independent of the generator-value system, and quadratic in |G| unknowns,
    so it only serves as a cross-check on small groups.
    """
    if t.order > cap:
        raise TableCapExceededError(t.order, cap, what="dense cocycle system")
    nonid = np.flatnonzero(t.elements != t.identity)
    position = np.full(t.order, -1, dtype=np.int64)
    position[nonid] = np.arange(nonid.size)
    system = IncrementalEchelon(nonid.size ** 2, t.p)
    for block in _dense_cocycle_blocks(t, nonid, position):
        system.absorb(block)
    z2_dim = nonid.size ** 2 - system.rank
    return z2_dim - (t.order - 1 - generator_rank(t))


def kunneth_dims(d_plus: int, d_minus: int) -> Tuple[int, int]:
    """H^2 split of an elementary abelian group whose involution has split (d+, d-)"""
    return (d_plus + comb(d_plus, 2) + comb(d_minus, 2), d_minus + d_plus * d_minus)


def uniform_h2_dims(d_plus: int, d_minus: int) -> Tuple[int, int]:
    """
    Split of H^2 with divisible coefficients for a uniform group.

    That module is the exterior square of the dual of the first layer.
    """
    return (comb(d_plus, 2) + comb(d_minus, 2), d_plus * d_minus)


def p_h2_qpzp_dims(
    h2: int,
    h2_plus: int,
    h2_minus: int,
    d: int,
    d_plus: int,
    d_minus: int,
) -> Tuple[int, int, int]:
    """
    Dimensions of the p-torsion of H^2(G, Q_p/Z_p), total and per sign.

    The Bockstein sequence embeds the dual of G^ab/p into H^2(G, F_p) with
    this module as cokernel, so each value is a difference that cannot be
    negative.
    """
    values = (h2 - d, h2_plus - d_plus, h2_minus - d_minus)
    if min(values) < 0:
        raise CohomologyInconsistencyError(
            f"negative divisible-coefficient dimension {values} from H^2 = "
            f"({h2}, {h2_plus}, {h2_minus}) and d = ({d}, {d_plus}, {d_minus})"
        )
    return values


def prop22_layer_bound(
    first_layer: EigenSplit,
    second_layer: EigenSplit,
    p_h2_plus: int,
    p_h2_minus: int,
) -> Tuple[bool, bool]:
    """
    Five-term sequence bound, one flag per sign.

    H^2 of G/Phi(G) maps to H^2(G) with kernel a quotient of the dual of
    G_2/G_3, hence kunneth^(+-) <= dim(G_2/G_3)^(+-) + d^(+-) + pH^2^(+-).
    """
    k_plus, k_minus = kunneth_dims(first_layer.d_plus, first_layer.d_minus)
    plus_ok = k_plus <= second_layer.d_plus + first_layer.d_plus + p_h2_plus
    minus_ok = k_minus <= second_layer.d_minus + first_layer.d_minus + p_h2_minus
    return plus_ok, minus_ok


class CohomologyReport(BaseModel):
    """Dimensions over F_p; splits are absent when no involution is given"""
    h1: int
    h1_plus: Optional[int] = None
    h1_minus: Optional[int] = None
    h2: int
    h2_plus: Optional[int] = None
    h2_minus: Optional[int] = None
    p_h2_qpzp: int
    p_h2_qpzp_plus: Optional[int] = None
    p_h2_qpzp_minus: Optional[int] = None
    z2_dim: int
    b2_dim: int
    kunneth_plus: Optional[int] = None
    kunneth_minus: Optional[int] = None
    uniform_p_h2_plus: Optional[int] = None
    uniform_p_h2_minus: Optional[int] = None


def compute_cohomology(
    t: GroupTable,
    act: Optional[InvolutionAction] = None,
    cap: int = DEFAULT_BRUTE_CAP,
) -> CohomologyReport:
    """H^1, H^2 and the derived dimensions for one group (and involution)"""
    h2 = h2_dim_brute(t, cap)
    p_total = h2.dim - h2.d
    if p_total < 0:
        raise CohomologyInconsistencyError(f"H^2 dimension {h2.dim} below d(G) = {h2.d}")
    report = CohomologyReport(h1=h2.d, h2=h2.dim, p_h2_qpzp=p_total, z2_dim=h2.z2_dim, b2_dim=h2.b2_dim)
    if act is None:
        return report

    first = eigen_ranks(act, 1)
    split = h2_eigensplit(t, act, h2)
    if split.rank != h2.dim:
        raise CohomologyInconsistencyError(f"H^2 split {split} does not add up to {h2.dim}")
    _, plus, minus = p_h2_qpzp_dims(h2.dim, split.d_plus, split.d_minus, h2.d, first.d_plus, first.d_minus)
    k_plus, k_minus = kunneth_dims(first.d_plus, first.d_minus)
    u_plus, u_minus = uniform_h2_dims(first.d_plus, first.d_minus)
    report = report.model_copy(
        update=dict(
            h1_plus=first.d_plus,
            h1_minus=first.d_minus,
            h2_plus=split.d_plus,
            h2_minus=split.d_minus,
            p_h2_qpzp_plus=plus,
            p_h2_qpzp_minus=minus,
            kunneth_plus=k_plus,
            kunneth_minus=k_minus,
            uniform_p_h2_plus=u_plus,
            uniform_p_h2_minus=u_minus,
        )
    )
    logger.info("cohomology_computed", order=t.order, h1=report.h1, h2=report.h2, h2_plus=split.d_plus)
    return report


class TateModule:
    """
    Finite abelian group M = Z/n_1 x ... x Z/n_r with a cyclic group of
    order n acting through one integer matrix.

    (A x)_i = sum_j A_ij x_j mod n_i, which is well defined when n_i divides
    A_ij n_j. Elements are enumerated, so |M| is capped.
    """

    def __init__(
        self,
        orders: Sequence[int],
        action: Sequence[Sequence[int]],
        n: int,
        p: int,
        cap: int = DEFAULT_TATE_CAP,
    ):
        self.orders = [int(o) for o in orders]
        self.action = np.array(action, dtype=np.int64).reshape(len(self.orders), len(self.orders))
        self.n = int(n)
        self.p = int(p)
        if any(o < 1 for o in self.orders):
            raise InvalidTateModuleError(f"cyclic orders must be positive: {self.orders}")
        if self.n < 1:
            raise InvalidTateModuleError(f"cyclic group order must be positive, got {self.n}")
        size = int(np.prod(self.orders, dtype=object)) if self.orders else 1
        if size > cap:
            raise TableCapExceededError(size, cap, what="Tate module")
        self.size = size
        for i, j in itertools.product(range(len(self.orders)), repeat=2):
            if (self.action[i, j] * self.orders[j]) % self.orders[i]:
                raise InvalidTateModuleError(
                    f"action entry ({i + 1}, {j + 1}) = {self.action[i, j]} is not a map "
                    f"Z/{self.orders[j]} -> Z/{self.orders[i]}"
                )

        self.modulus = np.array(self.orders, dtype=np.int64)
        self.elements = np.array(
            list(itertools.product(*(range(o) for o in self.orders))), dtype=np.int64
        ).reshape(size, len(self.orders))
        self.strides = np.array(
            [int(np.prod(self.orders[k + 1:], dtype=object)) for k in range(len(self.orders))], dtype=np.int64
        )
        self.sigma = self.index(self.apply(self.elements))
        if np.unique(self.sigma).size != size:
            raise InvalidTateModuleError("action matrix is not invertible on M")
        power = np.arange(size)
        for _ in range(self.n):
            power = self.sigma[power]
        if not np.array_equal(power, np.arange(size)):
            raise InvalidTateModuleError(f"action does not have order dividing {self.n}")

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        return (vectors @ self.action.T) % self.modulus

    def index(self, vectors: np.ndarray) -> np.ndarray:
        return (np.asarray(vectors, dtype=np.int64) % self.modulus) @ self.strides

    def norm(self) -> np.ndarray:
        """Image index of N = sum of sigma^i over i < n, for every element"""
        total = np.zeros_like(self.elements)
        current = np.arange(self.size)
        for _ in range(self.n):
            total = total + self.elements[current]
            current = self.sigma[current]
        return self.index(total)


class TateResult(NamedTuple):
    h0: List[int]
    h_minus1: List[int]
    h0_order: int
    h_minus1_order: int
    p_rank_h0: int


def quotient_invariants(m: TateModule, upper: np.ndarray, lower: np.ndarray) -> List[int]:
    """
    Elementary divisors of upper/lower, both given as boolean masks on M.

    For each prime q the number of cosets killed by q^k is q^(sum of
    min(k, e_i)); successive differences of those exponents give the e_i.
    """
    lower_order = int(lower.sum())
    quotient_order = int(upper.sum()) // lower_order
    members = m.elements[upper]
    divisors: List[int] = []
    for q, top in sorted(factorint(quotient_order).items()):
        counts = [0]
        for k in range(1, top + 1):
            killed = int(lower[m.index(members * q ** k)].sum()) // lower_order
            counts.append(log_p(killed, q))
        at_least = [counts[k] - counts[k - 1] for k in range(1, top + 1)] + [0]
        for k in range(1, top + 1):
            divisors.extend([q ** k] * (at_least[k - 1] - at_least[k]))
    return sorted(divisors)


def tate_h0_h1(m: TateModule) -> TateResult:
    """
    Tate cohomology in degrees 0 and -1.

    H^0 = M^C / N M and H^-1 = ker N / (sigma - 1) M.
    """
    everything = np.arange(m.size)
    norm = m.norm()
    fixed = m.sigma == everything
    norm_image = np.zeros(m.size, dtype=bool)
    norm_image[norm] = True
    norm_kernel = norm == 0
    augmentation = np.zeros(m.size, dtype=bool)
    augmentation[m.index(m.elements[m.sigma] - m.elements)] = True

    h0 = quotient_invariants(m, fixed, norm_image)
    h_minus1 = quotient_invariants(m, norm_kernel, augmentation)
    result = TateResult(
        h0=h0,
        h_minus1=h_minus1,
        h0_order=int(fixed.sum()) // int(norm_image.sum()),
        h_minus1_order=int(norm_kernel.sum()) // int(augmentation.sum()),
        p_rank_h0=sum(1 for q in h0 if q % m.p == 0),
    )
    logger.debug("tate_computed", size=m.size, n=m.n, h0=h0, h_minus1=h_minus1)
    return result


def _matrix_order(a: np.ndarray, modulus: int, limit: int = 10000) -> int:
    ident = np.eye(a.shape[0], dtype=np.int64)
    current = a % modulus
    for k in range(1, limit + 1):
        if np.array_equal(current, ident):
            return k
        current = (current @ a) % modulus
    raise InvalidTateModuleError(f"automorphism order exceeds {limit}")


def random_tate_module(rng: np.random.Generator, p: int, cap: int = DEFAULT_TATE_CAP) -> TateModule:
    """
    Homocyclic (Z/q)^r, q a power of p or a small prime, with a random
    automorphism; the cyclic group order is that automorphism's order,
    sometimes doubled.
    """
    moduli = [p, p * p, 2, 5 if p != 5 else 7]
    while True:
        q = int(rng.choice(moduli))
        r = int(rng.integers(1, 3))
        if q ** r > cap:
            continue
        a = rng.integers(0, q, size=(r, r))
        det = int(Matrix(a.tolist()).det())
        base = q if isprime(q) else p
        if det % base == 0:
            continue
        n = _matrix_order(a, q) * int(rng.choice([1, 2]))
        return TateModule([q] * r, a.tolist(), n, p, cap)
