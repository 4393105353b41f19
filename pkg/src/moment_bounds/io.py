"""Problem and measure files (JSON) in, results out.

Problem file::

    {"domain": {"type": "interval", "lo": 0, "hi": 10, "grid_step": 0.01},
     "constraints": [{"f": "1", "target": [1, 1]}, {"f": "x", "target": [1, 1]}],
     "objective": "(x >= 2)", "sense": "max",
     "options": {"refine": true, "tol": 1e-9}}

A finite domain lists its points and may carry value tables::

    {"type": "finite", "points": [{"id": 0, "coord": 0.0}, ...],
     "F": [[...], ...], "g": [...]}

A constraint's ``f`` is an expression, a row of values (finite domains), or
null to take row j of the domain's ``F``. ``null`` target endpoints mean
-inf / +inf. The objective is required; null takes the domain's ``g``.
"""
from __future__ import annotations
import json
import math
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ExprSyntaxError, MomentError, SchemaError
from .expr import parse_expr
from .extremality import ExtremalityCertificate
from .measure import DiscreteMeasure, FiniteSpace, Location, Measure
from .normalize import fmt17
from .problem import Constraint, FiniteDomain, IntervalDomain, MomentProblem, Options
from .settings import get_settings
from .solver import BoundResult


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PointModel(_Model):
    id: int = Field(ge=0)
    coord: Optional[float] = None


class IntervalDomainModel(_Model):
    type: Literal["interval"]
    lo: float
    hi: float
    grid_step: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("lo and hi must be finite")
        if self.lo >= self.hi:
            raise ValueError("lo must be < hi")
        return self


class FiniteDomainModel(_Model):
    type: Literal["finite"]
    points: List[PointModel] = Field(min_length=1)
    F: Optional[List[List[float]]] = None
    g: Optional[List[float]] = None

    @field_validator("points")
    @classmethod
    def _ids_in_order(cls, points: List[PointModel]) -> List[PointModel]:
        if [p.id for p in points] != list(range(len(points))):
            raise ValueError("point ids must be 0, 1, ..., n-1 in order")
        with_coord = [p.coord is not None for p in points]
        if any(with_coord) and not all(with_coord):
            raise ValueError("either every point has a coord or none does")
        return points


DomainModel = Annotated[Union[IntervalDomainModel, FiniteDomainModel], Field(discriminator="type")]
FuncModel = Union[str, List[float], None]


class ConstraintModel(_Model):
    f: FuncModel = None
    target: Tuple[Optional[float], Optional[float]]


class OptionsModel(_Model):
    refine: bool = True
    # None: the configured default tolerance
    tol: Optional[float] = Field(default=None, gt=0)


class ProblemModel(_Model):
    domain: DomainModel
    constraints: List[ConstraintModel] = Field(min_length=1)
    objective: FuncModel
    sense: Literal["max", "min"] = "max"
    options: OptionsModel = Field(default_factory=OptionsModel)


class AtomModel(_Model):
    coord: Optional[float] = None
    id: Optional[int] = Field(default=None, ge=0)
    weight: float = Field(ge=0)

    @model_validator(mode="after")
    def _one_location(self):
        if (self.coord is None) == (self.id is None):
            raise ValueError("give exactly one of coord or id")
        return self


class MeasureModel(_Model):
    atoms: List[AtomModel]


def _path(loc: Sequence[Any]) -> str:
    parts = list(loc)
    # drop the discriminator tag pydantic inserts for union members
    if len(parts) > 1 and parts[0] == "domain" and parts[1] in ("interval", "finite"):
        del parts[1]
    return ".".join(str(p) for p in parts) or "<root>"


def _validate(model, text: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("<root>", f"invalid JSON: {e}") from e
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise SchemaError(_path(first["loc"]), first["msg"]) from e


def _func(raw: FuncModel, path: str, n: Optional[int], has_coords: bool = True):
    if raw is None:
        return None
    if isinstance(raw, str):
        if not has_coords:
            raise SchemaError(path, "expressions need point coordinates")
        try:
            return parse_expr(raw)
        except ExprSyntaxError as e:
            raise SchemaError(path, str(e)) from e
    if n is None:
        raise SchemaError(path, "value rows need a finite domain")
    if len(raw) != n:
        raise SchemaError(path, f"value row has {len(raw)} entries for {n} points")
    return tuple(float(v) for v in raw)


def _bound(v: Optional[float], default: float) -> float:
    return default if v is None else float(v)


def load_problem(text: str) -> MomentProblem:
    m: ProblemModel = _validate(ProblemModel, text)
    k = len(m.constraints)
    n: Optional[int] = None
    has_coords = True
    if isinstance(m.domain, IntervalDomainModel):
        domain = IntervalDomain(m.domain.lo, m.domain.hi, m.domain.grid_step)
    else:
        n = len(m.domain.points)
        coords = None if m.domain.points[0].coord is None else tuple(p.coord for p in m.domain.points)
        has_coords = coords is not None
        try:
            space = FiniteSpace(n, coords)
        except MomentError as e:
            raise SchemaError("domain.points", str(e)) from e
        F = g = None
        if m.domain.F is not None:
            F = np.asarray(m.domain.F, dtype=float)
            if F.ndim != 2 or F.shape != (k, n):
                raise SchemaError("domain.F", f"expected {k} rows of {n} values")
        if m.domain.g is not None:
            if len(m.domain.g) != n:
                raise SchemaError("domain.g", f"expected {n} values")
            g = np.asarray(m.domain.g, dtype=float)
        domain = FiniteDomain(space, F, g)

    constraints = []
    for j, c in enumerate(m.constraints):
        f = _func(c.f, f"constraints.{j}.f", n, has_coords)
        if f is None and (n is None or domain.F is None):
            raise SchemaError(f"constraints.{j}.f", "no function given and the domain has no F table")
        lo, hi = _bound(c.target[0], -math.inf), _bound(c.target[1], math.inf)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise SchemaError(f"constraints.{j}.target", f"empty target interval [{lo}, {hi}]")
        constraints.append(Constraint(f, (lo, hi)))

    objective = _func(m.objective, "objective", n, has_coords)
    tol = m.options.tol if m.options.tol is not None else float(get_settings()["tol"])
    if objective is None and (n is None or domain.g is None):
        raise SchemaError("objective", "no objective given and the domain has no g table")
    return MomentProblem(
        domain,
        tuple(constraints),
        objective,
        m.sense,
        Options(refine=m.options.refine, tol=tol),
    )


def load_measure(text: str) -> List[Tuple[Location, float]]:
    m: MeasureModel = _validate(MeasureModel, text)
    return [(a.coord if a.coord is not None else a.id, a.weight) for a in m.atoms]


def _atom(loc: Location, weight: float) -> Dict[str, Any]:
    key = "id" if isinstance(loc, (int, np.integer)) else "coord"
    return {key: loc, "weight": weight}


def measure_to_dict(dm: Optional[DiscreteMeasure]) -> Optional[Dict[str, Any]]:
    if dm is None:
        return None
    return {
        "atoms": [_atom(a.location, a.weight) for a in dm.atoms],
        "k": dm.k,
        "f_independent": dm.f_independent,
    }


def _weights(mu: Measure) -> Dict[str, Any]:
    return {"atoms": [_atom(mu.space.location(i), float(mu.weights[i])) for i in range(mu.space.n)
                      if mu.weights[i] != 0.0]}


def certificate_to_dict(cert: Optional[ExtremalityCertificate]) -> Optional[Dict[str, Any]]:
    if cert is None:
        return None
    out: Dict[str, Any] = {
        "is_extreme": cert.is_extreme,
        "heuristic": cert.heuristic,
        "m": cert.m,
        "rank": cert.rank,
        "feasibility_residual": cert.feasibility_residual,
        "cells": None if cert.partition is None else [c.ids() for c in cert.partition.cells],
        "moment_vectors": [list(v) for v in cert.moment_vectors],
        "witness": None,
    }
    if cert.witness is not None:
        out["witness"] = {
            "phi": list(cert.witness.phi),
            "nu_plus": _weights(cert.witness.nu_plus),
            "nu_minus": _weights(cert.witness.nu_minus),
        }
    return out


def result_to_dict(result: BoundResult) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "status": result.status,
        "value": result.value,
        "lp_value": result.lp_value,
        "grid_size": result.grid_size,
        "refined": result.refined,
        "iterations": result.iterations,
        "unique": result.unique,
        "measure": measure_to_dict(result.measure),
        "dual": None if result.dual is None else list(result.dual),
        "dual_lower": None if result.dual_lower is None else list(result.dual_lower),
        "dual_upper": None if result.dual_upper is None else list(result.dual_upper),
    }
    if result.ray is not None:
        out["ray"] = [_atom(loc, amount) for loc, amount in result.ray]
    if result.phase1_residual is not None:
        out["phase1_residual"] = list(result.phase1_residual)
    if result.dual_report is not None:
        r = result.dual_report
        out["certificate"] = {
            "accepted": r.accepted,
            "max_violation": r.max_violation,
            "worst_point": r.worst_point,
            "dual_value": r.dual_value,
            "gap": r.gap,
            "signs_ok": r.signs_ok,
        }
    out["extremality"] = certificate_to_dict(result.extremality)
    return out


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return json.dumps(obj if not isinstance(obj, np.bool_) else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt17(float(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dump_json(obj: Any, indent: int = 2) -> str:
    """json.dumps with every float printed to 17 significant digits."""
    return _encode(obj, indent, 0)
