"""Finite measure spaces, measures, truncation, atoms and atomic partitions.

Every subset of a finite space is measurable, so a measure is a nonnegative
weight per point and a set is a boolean mask. Integrals are taken with
``math.fsum`` so that summing extra zero terms never changes a result.
"""
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionError, MomentError, NotAnAtomError, NullAtomError, ZeroMeasureError
from .normalize import frozen_array, numeric_rank, positive_ids, ZERO_REL

Location = Union[int, float]


@dataclass(frozen=True)
class Point:
    id: int
    coord: Optional[float] = None


@dataclass(frozen=True)
class FiniteSpace:
    n: int
    coords: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionError("a finite space needs at least one point")
        if self.coords is None:
            return
        coords = tuple(float(c) for c in self.coords)
        if len(coords) != self.n:
            raise DimensionError(f"space has {self.n} points but {len(coords)} coords")
        if not all(math.isfinite(c) for c in coords):
            raise MomentError("coords must be finite")
        if any(b <= a for a, b in zip(coords, coords[1:])):
            raise MomentError("coords must be strictly increasing")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_coords(cls, coords: Sequence[float]) -> "FiniteSpace":
        return cls(len(coords), tuple(coords))

    @property
    def points(self) -> List[Point]:
        if self.coords is None:
            return [Point(i) for i in range(self.n)]
        return [Point(i, c) for i, c in enumerate(self.coords)]

    def location(self, i: int) -> Location:
        return self.coords[i] if self.coords is not None else int(i)

    def index_of(self, location: Location) -> int:
        if self.coords is None:
            i = int(location)
            if i != location or not 0 <= i < self.n:
                raise DimensionError(f"location {location!r} is not a point id of the space")
            return i
        x = float(location)
        j = int(np.searchsorted(self.coords, x))
        for cand in (j - 1, j):
            if 0 <= cand < self.n and abs(self.coords[cand] - x) <= 1e-12 * max(1.0, abs(x)):
                return cand
        raise DimensionError(f"location {location!r} is not a point of the space")


@dataclass(frozen=True)
class SubsetMask:
    bits: Tuple[bool, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @classmethod
    def full(cls, n: int) -> "SubsetMask":
        return cls((True,) * n)

    @classmethod
    def empty(cls, n: int) -> "SubsetMask":
        return cls((False,) * n)

    @classmethod
    def of(cls, n: int, ids: Iterable[int]) -> "SubsetMask":
        chosen = set(ids)
        if any(not 0 <= i < n for i in chosen):
            raise DimensionError(f"mask ids out of range for a {n}-point space")
        return cls(tuple(i in chosen for i in range(n)))

    def __len__(self) -> int:
        return len(self.bits)

    def __contains__(self, i: int) -> bool:
        return 0 <= i < len(self.bits) and self.bits[i]

    def __or__(self, other: "SubsetMask") -> "SubsetMask":
        _same_length(self, other)
        return SubsetMask(tuple(a or b for a, b in zip(self.bits, other.bits)))

    def __and__(self, other: "SubsetMask") -> "SubsetMask":
        _same_length(self, other)
        return SubsetMask(tuple(a and b for a, b in zip(self.bits, other.bits)))

    def ids(self) -> List[int]:
        return [i for i, b in enumerate(self.bits) if b]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=bool)


def _same_length(a: SubsetMask, b: SubsetMask) -> None:
    if len(a) != len(b):
        raise DimensionError(f"mask lengths differ: {len(a)} vs {len(b)}")


@dataclass(frozen=True, eq=False)
class Measure:
    space: FiniteSpace
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != self.space.n:
            raise DimensionError(f"measure has {w.shape[0]} weights for a {self.space.n}-point space")
        if not np.all(np.isfinite(w)):
            raise MomentError("measure weights must be finite")
        if np.any(w < 0):
            raise MomentError("measure weights must be nonnegative")
        object.__setattr__(self, "weights", frozen_array(w))

    @classmethod
    def zero(cls, space: FiniteSpace) -> "Measure":
        return cls(space, np.zeros(space.n))

    @classmethod
    def dirac(cls, space: FiniteSpace, i: int, mass: float = 1.0) -> "Measure":
        w = np.zeros(space.n)
        w[i] = mass
        return cls(space, w)

    @classmethod
    def from_atoms(cls, space: FiniteSpace, atoms: Iterable[Tuple[Location, float]]) -> "Measure":
        w = np.zeros(space.n)
        for loc, weight in atoms:
            w[space.index_of(loc)] += float(weight)
        return cls(space, w)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Measure):
            return NotImplemented
        return self.space == other.space and bool(np.array_equal(self.weights, other.weights))

    def scaled(self, t: float) -> "Measure":
        if t < 0:
            raise MomentError("measures can only be scaled by t >= 0")
        return Measure(self.space, self.weights * t)

    @property
    def mass(self) -> float:
        return math.fsum(self.weights)

    def of(self, A: SubsetMask) -> float:
        """mu(A)."""
        _check_mask(self, A)
        return math.fsum(self.weights[A.array])

    def positive_ids(self, zero_rel: float = ZERO_REL) -> List[int]:
        return positive_ids(self.weights, zero_rel)

    def is_zero(self, zero_rel: float = ZERO_REL) -> bool:
        return not self.positive_ids(zero_rel)


@dataclass(frozen=True)
class Atom:
    location: Location
    weight: float


@dataclass(frozen=True)
class DiscreteMeasure:
    """sum_i weight_i * delta_{location_i}.

    ``k`` set means the measure is tagged as a member of D^(k); with
    ``f_independent`` it is tagged as a member of D_f^(k), which
    ``tag_independent`` verifies against a moment table.
    """

    atoms: Tuple[Atom, ...] = ()
    k: Optional[int] = None
    f_independent: bool = False
    rank_tol: float = 1e-9

    def __post_init__(self) -> None:
        atoms = tuple(a if isinstance(a, Atom) else Atom(*a) for a in self.atoms)
        for a in atoms:
            if not (math.isfinite(a.weight) and a.weight > 0):
                raise MomentError(f"atom at {a.location!r} has non-positive weight {a.weight!r}")
        locs = [a.location for a in atoms]
        if len(set(locs)) != len(locs):
            raise MomentError("atom locations must be pairwise distinct")
        if self.k is not None and len(atoms) > self.k:
            raise MomentError(f"{len(atoms)} atoms exceed the D^({self.k}) bound")
        if self.f_independent and self.k is None:
            raise MomentError("a D_f^(k) tag needs k")
        object.__setattr__(self, "atoms", tuple(sorted(atoms, key=lambda a: a.location)))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[Location, float]], **kw) -> "DiscreteMeasure":
        return cls(tuple(Atom(loc, float(w)) for loc, w in pairs), **kw)

    @property
    def locations(self) -> Tuple[Location, ...]:
        return tuple(a.location for a in self.atoms)

    @property
    def weights(self) -> Tuple[float, ...]:
        return tuple(a.weight for a in self.atoms)

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def mass(self) -> float:
        return math.fsum(self.weights)

    def to_measure(self, space: FiniteSpace) -> Measure:
        return Measure.from_atoms(space, ((a.location, a.weight) for a in self.atoms))

    def tag_independent(self, table: "MomentTable", rank_tol: float = 1e-9) -> "DiscreteMeasure":
        ids = [table.space.index_of(loc) for loc in self.locations]
        if ids and numeric_rank(table.F[:, ids], rank_tol) < len(ids):
            raise MomentError("f(s_1), ..., f(s_m) are linearly dependent")
        return DiscreteMeasure(self.atoms, k=table.k, f_independent=True, rank_tol=rank_tol)


@dataclass(frozen=True, eq=False)
class MomentTable:
    """F[j][i] = f_j(s_i) and g[i] = g(s_i) over a finite space."""

    F: np.ndarray
    g: Optional[np.ndarray] = None
    space: Optional[FiniteSpace] = None

    def __post_init__(self) -> None:
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if F.ndim != 2 or F.shape[0] < 1 or F.shape[1] < 1:
            raise DimensionError("F must be a non-empty k x n matrix")
        if not np.all(np.isfinite(F)):
            raise MomentError("F entries must be finite")
        k, n = F.shape
        g = np.zeros(n) if self.g is None else np.asarray(self.g, dtype=float).reshape(-1)
        if g.shape[0] != n:
            raise DimensionError(f"g has {g.shape[0]} entries, F has {n} columns")
        if not np.all(np.isfinite(g)):
            raise MomentError("g entries must be finite")
        space = self.space if self.space is not None else FiniteSpace(n)
        if space.n != n:
            raise DimensionError(f"table has {n} columns for a {space.n}-point space")
        object.__setattr__(self, "F", frozen_array(F))
        object.__setattr__(self, "g", frozen_array(g))
        object.__setattr__(self, "space", space)

    @property
    def k(self) -> int:
        return int(self.F.shape[0])

    @property
    def n(self) -> int:
        return int(self.F.shape[1])

    def with_objective(self, g: Sequence[float]) -> "MomentTable":
        return MomentTable(self.F, g, self.space)


@dataclass(frozen=True)
class AtomicPartition:
    cells: Tuple[SubsetMask, ...]
    # support point carried by each cell
    points: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.cells:
            return
        n = len(self.cells[0])
        seen = [0] * n
        for cell in self.cells:
            if len(cell) != n:
                raise DimensionError("partition cells have different lengths")
            for i in cell.ids():
                seen[i] += 1
        if any(c != 1 for c in seen):
            raise MomentError("partition cells must be disjoint and cover the space")

    @property
    def m(self) -> int:
        return len(self.cells)

    def is_valid_for(self, mu: Measure) -> bool:
        """Non-null and atomic with respect to mu."""
        thr_ids = set(mu.positive_ids())
        return all(
            is_atom(mu, cell) and any(i in thr_ids for i in cell.ids())
            for cell in self.cells
        )


def _check_mask(mu: Measure, A: SubsetMask) -> None:
    if len(A) != mu.space.n:
        raise DimensionError(f"mask of length {len(A)} for a {mu.space.n}-point space")


def _check_values(mu: Measure, values: Sequence[float]) -> np.ndarray:
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.shape[0] != mu.space.n:
        raise DimensionError(f"{v.shape[0]} values for a {mu.space.n}-point space")
    return v


def truncate(mu: Measure, A: SubsetMask) -> Measure:
    _check_mask(mu, A)
    return Measure(mu.space, np.where(A.array, mu.weights, 0.0))


def integrate(mu: Measure, values: Sequence[float]) -> float:
    v = _check_values(mu, values)
    return math.fsum(mu.weights * v)


def moment_vector(mu: Measure, table: MomentTable, A: Optional[SubsetMask] = None) -> np.ndarray:
    if table.n != mu.space.n:
        raise DimensionError(f"table has {table.n} columns for a {mu.space.n}-point space")
    part = mu if A is None else truncate(mu, A)
    return np.array([math.fsum(part.weights * row) for row in table.F])


def support(mu: Measure) -> SubsetMask:
    return SubsetMask.of(mu.space.n, mu.positive_ids())


def is_atom(mu: Measure, A: SubsetMask) -> bool:
    _check_mask(mu, A)
    inside = [i for i in mu.positive_ids() if A.bits[i]]
    return len(inside) <= 1


def atomic_partition(mu: Measure) -> AtomicPartition:
    ids = mu.positive_ids()
    if not ids:
        raise ZeroMeasureError("zero measure has no non-null partition")
    n = mu.space.n
    nulls = [i for i in range(n) if i not in set(ids)]
    cells = []
    for j, p in enumerate(ids):
        members = [p] + (nulls if j == 0 else [])
        cells.append(SubsetMask.of(n, members))
    return AtomicPartition(tuple(cells), tuple(ids))


def atom_value(mu: Measure, A: SubsetMask, values: Sequence[float]) -> float:
    v = _check_values(mu, values)
    _check_mask(mu, A)
    inside = [i for i in mu.positive_ids() if A.bits[i]]
    if len(inside) > 1:
        raise NotAnAtomError("not an atom")
    if not inside:
        raise NullAtomError("null atom has no canonical value")
    return float(v[inside[0]])


def dirac_representation(mu: Measure, table: MomentTable, rank_tol: float = 1e-9) -> DiscreteMeasure:
    """Replace each atomic cell by a Dirac mass of the cell's measure at its support point."""
    part = atomic_partition(mu)
    locs = [float(i) for i in range(mu.space.n)]
    pairs = []
    for cell in part.cells:
        p = int(atom_value(mu, cell, locs))
        pairs.append((mu.space.location(p), mu.of(cell)))
    vectors = table.F[:, list(part.points)] * np.array([w for _, w in pairs])
    if numeric_rank(vectors, rank_tol) == part.m and part.m <= table.k:
        return DiscreteMeasure.from_pairs(pairs, k=table.k, f_independent=True, rank_tol=rank_tol)
    return DiscreteMeasure.from_pairs(pairs, k=part.m)


def is_zero_one(mu: Measure) -> bool:
    """Every mu(B) is 0 or 1: a unit Dirac mass, on a finite space."""
    ids = mu.positive_ids()
    return len(ids) == 1 and mu.weights[ids[0]] == 1.0 and mu.mass == 1.0
