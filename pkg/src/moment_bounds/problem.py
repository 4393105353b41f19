from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionError, MomentError
from .expr import Expr
from .measure import FiniteSpace


@dataclass(frozen=True)
class MomentTarget:
    """Box target: lo_j <= (F lambda)_j <= hi_j; exact rows have lo_j == hi_j."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if not lo or len(lo) != len(hi):
            raise DimensionError("a target needs at least one constraint and matching bounds")
        for j, (a, b) in enumerate(zip(lo, hi)):
            if math.isnan(a) or math.isnan(b):
                raise MomentError(f"target {j} has a NaN bound")
            if a > b or a == math.inf or b == -math.inf:
                raise MomentError(f"target {j} is the empty interval [{a}, {b}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def exact(cls, c: Sequence[float]) -> "MomentTarget":
        return cls(tuple(c), tuple(c))

    @classmethod
    def box(cls, bounds: Sequence[Tuple[float, float]]) -> "MomentTarget":
        return cls(tuple(b[0] for b in bounds), tuple(b[1] for b in bounds))

    @property
    def k(self) -> int:
        return len(self.lo)

    @property
    def is_exact(self) -> bool:
        return all(a == b for a, b in zip(self.lo, self.hi))

    def exact_vector(self) -> np.ndarray:
        if not self.is_exact:
            raise MomentError("target is a box, not a single moment vector")
        return np.array(self.lo)

    def residual(self, v: Sequence[float]) -> float:
        """Largest distance of v outside the box (0 inside)."""
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.k:
            raise DimensionError(f"moment vector of length {v.shape[0]} for a {self.k}-row target")
        below = np.array(self.lo) - v
        above = v - np.array(self.hi)
        worst = np.maximum(np.maximum(below, above), 0.0)
        return float(np.max(worst)) if worst.size else 0.0

    def contains(self, v: Sequence[float], tol: float = 0.0) -> bool:
        return self.residual(v) <= tol


@dataclass(frozen=True)
class IntervalDomain:
    lo: float
    hi: float
    grid_step: Optional[float] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo >= self.hi:
            raise MomentError(f"interval domain needs finite lo < hi, got [{self.lo}, {self.hi}]")
        if self.grid_step is not None and not self.grid_step > 0:
            raise MomentError("grid_step must be > 0")


@dataclass(frozen=True, eq=False)
class FiniteDomain:
    space: FiniteSpace
    # optional per-point tables supplied with the domain
    F: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None


Domain = Union[IntervalDomain, FiniteDomain]
# A constraint or objective is either an expression in x or a row of values.
Func = Union[Expr, Tuple[float, ...], None]


@dataclass(frozen=True)
class Constraint:
    f: Func
    target: Tuple[float, float]


@dataclass(frozen=True)
class Options:
    refine: bool = True
    tol: float = 1e-9


@dataclass(frozen=True, eq=False)
class MomentProblem:
    domain: Domain
    constraints: Tuple[Constraint, ...]
    objective: Func = None
    sense: str = "max"
    options: Options = field(default_factory=Options)

    def __post_init__(self) -> None:
        if not self.constraints:
            raise MomentError("a moment problem needs at least one constraint")
        if self.sense not in ("max", "min"):
            raise MomentError(f"sense must be 'max' or 'min', got {self.sense!r}")

    @property
    def k(self) -> int:
        return len(self.constraints)

    @property
    def target(self) -> MomentTarget:
        return MomentTarget.box([c.target for c in self.constraints])
