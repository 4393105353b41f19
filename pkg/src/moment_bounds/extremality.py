"""Extreme points of moment sets {mu >= 0 : F mu = c} on finite spaces.

A nonzero feasible measure is extreme exactly when the vectors
``moment_vector(mu, table, A_i)`` over its atomic partition are linearly
independent (so there are at most k of them). When they are dependent, a
nonzero phi with sum_i phi_i v_i = 0 splits mu into the two feasible measures
sum_i (1 +- phi_i) mu_{A_i}.
"""
from __future__ import annotations
import itertools
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, EnumerationCapError, NoPerturbationError, NotInMomentSetError
from .measure import (
    AtomicPartition,
    DiscreteMeasure,
    Measure,
    MomentTable,
    atomic_partition,
    moment_vector,
)
from .normalize import null_vector, numeric_rank, split_exact
from .problem import MomentTarget


log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PerturbationWitness:
    phi: Tuple[float, ...]
    nu_plus: Measure
    nu_minus: Measure


@dataclass(frozen=True)
class ExtremalityCertificate:
    is_extreme: bool
    # None only for the zero measure
    partition: Optional[AtomicPartition]
    moment_vectors: Tuple[Tuple[float, ...], ...]
    rank: int
    feasibility_residual: float
    witness: Optional[PerturbationWitness] = None
    # box targets are certified against the attained moment vector only
    heuristic: bool = False

    @property
    def m(self) -> int:
        return len(self.moment_vectors)


def _cell_vectors(mu: Measure, table: MomentTable, partition: AtomicPartition) -> np.ndarray:
    """k x m matrix whose columns are the moment vectors of the cells."""
    return np.column_stack([moment_vector(mu, table, cell) for cell in partition.cells])


def perturbation_witness(
    mu: Measure,
    table: MomentTable,
    partition: AtomicPartition,
    rank_tol: float = 1e-9,
) -> PerturbationWitness:
    V = _cell_vectors(mu, table, partition)
    m = V.shape[1]
    # shortest dependent prefix: its null space is one-dimensional, giving a sparse phi
    prefix = next((j for j in range(1, m + 1) if numeric_rank(V[:, :j], rank_tol) < j), None)
    if prefix is None:
        raise NoPerturbationError("no perturbation exists: cell moment vectors are independent")
    v = null_vector(V[:, :prefix], rank_tol)
    phi = np.zeros(m)
    phi[:prefix] = v
    phi *= 0.5 / np.max(np.abs(phi))
    lead = np.flatnonzero(np.abs(phi) > 1e-12)
    if lead.size and phi[lead[0]] < 0:
        phi = -phi

    plus = np.array(mu.weights, dtype=float)
    minus = plus.copy()
    for i, cell in enumerate(partition.cells):
        for p in cell.ids():
            plus[p], minus[p] = split_exact(mu.weights[p], mu.weights[p] * phi[i])
    nu_plus = Measure(mu.space, plus)
    nu_minus = Measure(mu.space, minus)
    log.debug("witness phi=%s on %d cells", np.round(phi, 6).tolist(), m)
    return PerturbationWitness(tuple(float(p) for p in phi), nu_plus, nu_minus)


def certify_extreme(
    mu: Measure,
    table: MomentTable,
    c: Sequence[float],
    tol: float = 1e-9,
    rank_tol: float = 1e-9,
) -> ExtremalityCertificate:
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape[0] != table.k:
        raise DimensionError(f"target has {c.shape[0]} entries for {table.k} constraints")
    if table.n != mu.space.n:
        raise DimensionError(f"table has {table.n} columns for a {mu.space.n}-point space")
    residual = float(np.max(np.abs(moment_vector(mu, table) - c)))
    if residual > tol:
        raise NotInMomentSetError(f"not a member of Λ_{{f,c}}: moment residual {residual:.3e}", residual)

    if mu.is_zero():
        # 0 is never a strict midpoint of two distinct nonnegative measures
        return ExtremalityCertificate(True, None, (), 0, residual)

    partition = atomic_partition(mu)
    V = _cell_vectors(mu, table, partition)
    rank = numeric_rank(V, rank_tol)
    vectors = tuple(tuple(float(x) for x in V[:, i]) for i in range(partition.m))
    if partition.m <= table.k and rank == partition.m:
        return ExtremalityCertificate(True, partition, vectors, rank, residual)
    witness = perturbation_witness(mu, table, partition, rank_tol)
    return ExtremalityCertificate(False, partition, vectors, rank, residual, witness)


def certify_in_box(
    mu: Measure,
    table: MomentTable,
    target: MomentTarget,
    tol: float = 1e-9,
    rank_tol: float = 1e-9,
) -> ExtremalityCertificate:
    """Certify against the attained moment vector of a box target.

    A "not extreme" verdict holds for the box as well; an "extreme" verdict
    only covers the slice with the attained moments fixed.
    """
    attained = moment_vector(mu, table)
    residual = target.residual(attained)
    if residual > tol:
        raise NotInMomentSetError(f"not a member of Λ_{{f,C}}: box residual {residual:.3e}", residual)
    cert = certify_extreme(mu, table, attained, tol, rank_tol)
    return replace(cert, heuristic=not target.is_exact)


def enumerate_extreme(
    table: MomentTable,
    c: Sequence[float],
    tol: float = 1e-9,
    cap: int = 20,
    rank_tol: float = 1e-9,
) -> List[DiscreteMeasure]:
    """All extreme points of {mu >= 0 : F mu = c}, as basic feasible solutions."""
    if table.n > cap:
        raise EnumerationCapError(f"enumeration cap exceeded: {table.n} points > cap {cap}")
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape[0] != table.k:
        raise DimensionError(f"target has {c.shape[0]} entries for {table.k} constraints")

    found: List[Tuple[Tuple[int, ...], DiscreteMeasure]] = []
    if float(np.max(np.abs(c))) <= tol:
        found.append(((), DiscreteMeasure((), k=table.k, f_independent=True, rank_tol=rank_tol)))
    for m in range(1, min(table.k, table.n) + 1):
        for ids in itertools.combinations(range(table.n), m):
            cols = table.F[:, ids]
            if numeric_rank(cols, rank_tol) < m:
                continue
            lam = np.linalg.lstsq(cols, c, rcond=None)[0]
            if float(np.max(np.abs(cols @ lam - c))) > tol or np.any(lam <= tol):
                continue
            pairs = [(table.space.location(i), float(w)) for i, w in zip(ids, lam)]
            found.append((ids, DiscreteMeasure.from_pairs(pairs, k=table.k, f_independent=True, rank_tol=rank_tol)))
    found.sort(key=lambda item: item[0])
    log.debug("enumerated %d extreme points over %d points", len(found), table.n)
    return [dm for _, dm in found]


def extreme_bound(
    table: MomentTable,
    c: Sequence[float],
    sense: str = "max",
    tol: float = 1e-9,
    cap: int = 20,
    rank_tol: float = 1e-9,
) -> Tuple[Optional[float], Optional[DiscreteMeasure]]:
    """Optimum of the objective over the enumerated extreme points."""
    best: Tuple[Optional[float], Optional[DiscreteMeasure]] = (None, None)
    for dm in enumerate_extreme(table, c, tol, cap, rank_tol):
        ids = [table.space.index_of(loc) for loc in dm.locations]
        value = math.fsum(w * table.g[i] for i, w in zip(ids, dm.weights))
        if best[0] is None or (value > best[0] if sense == "max" else value < best[0]):
            best = (value, dm)
    return best
