"""
Involution - order-2 automorphisms given by generator images

Validation checks the images against every defining relation by collection,
then (when the group fits the table cap) bijectivity and sigma^2 = 1
elementwise. The induced linear actions on the p-central layers give the
d^+/d^- eigen splits.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel

from ..errors import (
    InputError,
    InvolutionNotBijectiveError,
    InvolutionOrderError,
    InvolutionRelationError,
)
from .linalg import MatFp, QuotientProjector, eigensplit_involution
from .pc_engine import Element, GroupTable, PcPresentation, Word, build_table, vector_to_word
from .structure import LayerCoordinates, layer_coordinates, p_central_series, power_map_matrix

logger = structlog.get_logger(__name__)

ELEMENTWISE = "elementwise"
RELATIONS_ONLY = "relations"


class EigenSplit(BaseModel):
    """Dimensions of the +1 and -1 eigenspaces on one layer"""
    d_plus: int
    d_minus: int

    @property
    def rank(self) -> int:
        return self.d_plus + self.d_minus


@dataclass(frozen=True, eq=False)
class InvolutionAction:
    """A validated involution and its induced linear actions"""

    images: tuple
    matrix_on_frattini: MatFp
    matrices_on_layers: List[MatFp] = field(default_factory=list)
    permutation: Optional[np.ndarray] = None
    validation_level: str = ELEMENTWISE
    table: Optional[GroupTable] = None
    layers: List[LayerCoordinates] = field(default_factory=list)

    @property
    def image_words(self) -> List[Word]:
        return [vector_to_word(img) for img in self.images]

    @property
    def is_identity(self) -> bool:
        return all(
            img == tuple(1 if k == i else 0 for k in range(len(img)))
            for i, img in enumerate(self.images)
        )


def apply_images(pres: PcPresentation, images: Sequence[Element], vec: Sequence[int]) -> Element:
    """sigma(g_1^e_1 ... g_n^e_n) = sigma(g_1)^e_1 ... sigma(g_n)^e_n"""
    result = pres.identity
    for img, e in zip(images, vec):
        if e:
            result = pres.multiply(result, pres.power_of(img, e))
    return result


def _check_relations(pres: PcPresentation, images: Sequence[Element]) -> None:
    for i in range(pres.n):
        left = pres.power_of(images[i], pres.p)
        right = apply_images(pres, images, pres.collect(pres.identity, pres.power[i]))
        if left != right:
            raise InvolutionRelationError(f"g{i + 1}^p", left, right)
    for j in range(pres.n):
        for i in range(j):
            left = pres.commutator(images[j], images[i])
            word = pres.commutators.get((j, i), ())
            right = apply_images(pres, images, pres.collect(pres.identity, word))
            if left != right:
                raise InvolutionRelationError(f"[g{j + 1}, g{i + 1}]", left, right)


def frattini_action(pres: PcPresentation, images: Sequence[Element]) -> MatFp:
    """
    Induced action on G/Phi(G) read off the presentation alone.

    G/Phi(G) is F_p^n modulo the exponent vectors of all relation words;
    coordinates are the free columns of that relation span.
    """
    relations = [pres.collect(pres.identity, w) for w in pres.power]
    relations += [pres.collect(pres.identity, w) for w in pres.commutators.values()]
    projector = QuotientProjector(np.array(relations, dtype=np.int64), pres.n, pres.p)
    columns = [projector.project(images[f])[0] for f in projector.free]
    entries = np.array(columns, dtype=np.int64).reshape(projector.dim, projector.dim).T
    return MatFp(pres.p, entries)


def _table_permutation(t: GroupTable, images: Sequence[Element], pres: PcPresentation) -> np.ndarray:
    labels = t.labels
    perm = np.full(t.order, t.identity, dtype=np.int64)
    for i, img in enumerate(images):
        powers = [t.identity]
        step = pres.index_of(img)
        for _ in range(1, pres.p):
            powers.append(int(t.mul[powers[-1], step]))
        perm = t.mul[perm, np.asarray(powers)[labels[:, i]]]
    return perm


def layer_matrices(t: GroupTable, perm: np.ndarray, layers: List[LayerCoordinates]) -> List[MatFp]:
    """Matrix of sigma on each layer; column k is the image of basis vector k"""
    matrices = []
    for layer in layers:
        columns = [layer.of(perm[b]) for b in layer.basis]
        entries = np.array(columns, dtype=np.int64).reshape(layer.rank, layer.rank).T
        matrices.append(MatFp(t.p, entries))
    return matrices


def validate_involution(
    pres: PcPresentation,
    images: Sequence[Word],
    table: Optional[GroupTable] = None,
    cap: Optional[int] = None,
) -> InvolutionAction:
    """
    Check that generator images define an automorphism of order at most 2.

    Args:
        pres: consistent presentation
        images: one word per generator (negative exponents allowed)
        table: materialized group, built here when absent and within cap
        cap: table cap; above it only relation-level validation is done

    Returns:
        InvolutionAction with the induced layer matrices
    """
    if len(images) != pres.n:
        raise InputError(f"sigma needs one image per generator: got {len(images)} for {pres.n}")
    elems = tuple(pres.evaluate(w) for w in images)
    _check_relations(pres, elems)
    frattini_matrix = frattini_action(pres, elems)

    if table is None and (cap is None or pres.order <= cap):
        table = build_table(pres, cap if cap is not None else pres.order)

    if table is None:
        for i, img in enumerate(elems):
            back = apply_images(pres, elems, img)
            if back != pres.generator(i):
                raise InvolutionOrderError(f"g{i + 1}", back)
        logger.info("involution_validated", level=RELATIONS_ONLY, order=pres.order)
        return InvolutionAction(elems, frattini_matrix, validation_level=RELATIONS_ONLY)

    perm = _table_permutation(table, elems, pres)
    if np.unique(perm).size != table.order:
        raise InvolutionNotBijectiveError(
            f"sigma is not bijective: image has {np.unique(perm).size} of {table.order} elements"
        )
    twice = perm[perm]
    moved = np.flatnonzero(twice != table.elements)
    if moved.size:
        x = int(moved[0])
        raise InvolutionOrderError(tuple(table.labels[x]), tuple(table.labels[twice[x]]))

    series = p_central_series(table)
    layers = layer_coordinates(table, series)
    matrices = layer_matrices(table, perm, layers)
    logger.info("involution_validated", level=ELEMENTWISE, order=table.order, layers=len(matrices))
    return InvolutionAction(
        elems,
        frattini_matrix,
        matrices,
        perm,
        ELEMENTWISE,
        table,
        layers,
    )


def eigen_ranks(act: InvolutionAction, layer: int = 1) -> EigenSplit:
    """
    (d^+, d^-) on layer G_i/G_{i+1}, layers numbered from 1.

    Layer 1 gives d(G)^+ and d(G)^-. Under relation-level validation only
    layer 1 is available, through the presentation's Frattini quotient.
    """
    if layer < 1:
        raise InputError("layers are numbered from 1")
    if act.validation_level == ELEMENTWISE:
        if layer > len(act.matrices_on_layers):
            return EigenSplit(d_plus=0, d_minus=0)
        matrix = act.matrices_on_layers[layer - 1]
    elif layer == 1:
        matrix = act.matrix_on_frattini
    else:
        raise InputError("layer splits beyond the first need elementwise validation")
    split = eigensplit_involution(matrix)
    return EigenSplit(d_plus=split.dim_plus, d_minus=split.dim_minus)


def layer_splits(act: InvolutionAction) -> List[EigenSplit]:
    count = len(act.matrices_on_layers) or 1
    return [eigen_ranks(act, i) for i in range(1, count + 1)]


def dual_split_matches(matrix: MatFp) -> bool:
    """The transpose of an involution has the same eigen split"""
    direct = eigensplit_involution(matrix)
    dual = eigensplit_involution(matrix.transpose())
    return (direct.dim_plus, direct.dim_minus) == (dual.dim_plus, dual.dim_minus)


def power_map_commutes(act: InvolutionAction) -> bool:
    """
    sigma commutes with the p-power maps between consecutive layers.

    Meaningful for powerful groups, where those maps are linear.
    """
    if act.table is None:
        raise InputError("commutation check needs elementwise validation")
    mats = act.matrices_on_layers
    for i in range(1, len(mats)):
        power = power_map_matrix(act.table, act.layers, i)
        if power @ mats[i - 1] != mats[i] @ power:
            return False
    return True
