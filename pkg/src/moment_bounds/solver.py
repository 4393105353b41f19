"""Sharp bounds on the integral of g over measures with prescribed moments.

The domain is tabulated on a grid that contains every jump of the indicator
expressions, the resulting LP is solved with the two-phase simplex, and an
optimal basic solution is read back as a discrete measure with at most k
atoms. On interval domains the atoms can then be polished off the grid.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import simplex
from .errors import MomentError, NotInMomentSetError, SeedInfeasibleError
from .expr import Expr, collect_breakpoints, eval_expr, eval_many
from .extremality import ExtremalityCertificate, certify_extreme
from .measure import DiscreteMeasure, FiniteSpace, Location, Measure, MomentTable
from .normalize import clean_weights, merge_points, numeric_rank, positive_ids
from .problem import FiniteDomain, IntervalDomain, MomentProblem, MomentTarget
from .settings import get_settings


log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class DualCertificate:
    y: Tuple[float, ...]
    value: float
    max_violation: float = math.nan
    worst_point: Optional[Location] = None


@dataclass(frozen=True)
class DualReport:
    max_violation: float
    worst_point: Optional[Location]
    dual_value: float
    gap: float
    signs_ok: bool
    accepted: bool


@dataclass(frozen=True)
class BoundResult:
    status: str
    value: float
    measure: Optional[DiscreteMeasure] = None
    dual: Optional[Tuple[float, ...]] = None
    # multipliers of the lower / upper side of each box row
    dual_lower: Optional[Tuple[float, ...]] = None
    dual_upper: Optional[Tuple[float, ...]] = None
    grid_size: int = 0
    refined: bool = False
    iterations: int = 0
    lp_value: Optional[float] = None
    # no nonbasic column with zero reduced cost on the grid
    unique: Optional[bool] = None
    # unbounded: nonnegative improving direction as (location, amount)
    ray: Optional[Tuple[Tuple[Location, float], ...]] = None
    # infeasible: b - F lambda per constraint at the end of phase I
    phase1_residual: Optional[Tuple[float, ...]] = None
    certificate: Optional[DualCertificate] = None
    dual_report: Optional[DualReport] = None
    extremality: Optional[ExtremalityCertificate] = None


def _standard_form(table: MomentTable, target: MomentTarget):
    """Rows lo <= F lambda <= hi as equalities with slack columns.

    Returns (A, b, rows) where rows[r] = (constraint index, side) and side is
    'eq', 'lo' or 'hi'.
    """
    if target.k != table.k:
        raise MomentError(f"target has {target.k} rows for {table.k} constraints")
    n = table.n
    rows: List[Tuple[int, str]] = []
    coeffs: List[np.ndarray] = []
    rhs: List[float] = []
    slack_sign: List[float] = []
    for j, (lo, hi) in enumerate(zip(target.lo, target.hi)):
        if lo == hi:
            rows.append((j, "eq"))
            coeffs.append(table.F[j])
            rhs.append(lo)
            slack_sign.append(0.0)
            continue
        if math.isfinite(lo):
            rows.append((j, "lo"))
            coeffs.append(table.F[j])
            rhs.append(lo)
            slack_sign.append(-1.0)
        if math.isfinite(hi):
            rows.append((j, "hi"))
            coeffs.append(table.F[j])
            rhs.append(hi)
            slack_sign.append(1.0)
    slack_rows = [r for r, s in enumerate(slack_sign) if s != 0.0]
    A = np.zeros((len(rows), n + len(slack_rows)))
    for r, row in enumerate(coeffs):
        A[r, :n] = row
    for col, r in enumerate(slack_rows):
        A[r, n + col] = slack_sign[r]
    return A, np.array(rhs, dtype=float), rows


def _solve_max(table: MomentTable, target: MomentTarget, tol: float) -> Tuple[simplex.LPResult, List[Tuple[int, str]]]:
    A, b, rows = _standard_form(table, target)
    c = np.zeros(A.shape[1])
    c[:table.n] = table.g
    return simplex.maximize(A, b, c, feas_tol=tol), rows


def _to_measure(table: MomentTable, weights: np.ndarray, rank_tol: float = 1e-9) -> DiscreteMeasure:
    lam = clean_weights(weights)
    ids = positive_ids(lam)
    pairs = [(table.space.location(i), float(lam[i])) for i in ids]
    if ids and numeric_rank(table.F[:, ids], rank_tol) == len(ids) and len(ids) <= table.k:
        return DiscreteMeasure.from_pairs(pairs, k=table.k, f_independent=True, rank_tol=rank_tol)
    return DiscreteMeasure.from_pairs(pairs, k=max(len(ids), 1) if ids else None)


def solve_lp(
    table: MomentTable,
    target: MomentTarget,
    sense: str = "max",
    tol: float = 1e-9,
    rank_tol: float = 1e-9,
) -> BoundResult:
    if sense not in ("max", "min"):
        raise MomentError(f"sense must be 'max' or 'min', got {sense!r}")
    if sense == "min":
        flipped = solve_lp(table.with_objective(-table.g), target, "max", tol, rank_tol)
        return _negate(flipped)

    lp, rows = _solve_max(table, target, tol)
    n = table.n
    if lp.status == "infeasible":
        residual = np.zeros(table.k)
        for (j, _), r in zip(rows, lp.phase1_residual):
            if abs(r) > abs(residual[j]):
                residual[j] = r
        log.info("infeasible: phase I residual %s", residual.tolist())
        return BoundResult(INFEASIBLE, math.nan, iterations=lp.iterations,
                           phase1_residual=tuple(float(r) for r in residual))
    if lp.status == "unbounded":
        ray = clean_weights(lp.ray[:n])
        ray_atoms = tuple((table.space.location(i), float(ray[i])) for i in positive_ids(ray))
        log.info("unbounded along a ray with support %s", [loc for loc, _ in ray_atoms])
        return BoundResult(UNBOUNDED, math.inf, iterations=lp.iterations, ray=ray_atoms)

    dual = np.zeros(table.k)
    lower = np.zeros(table.k)
    upper = np.zeros(table.k)
    # lstsq leaves round-off on inactive rows; its sign must not reach the box split
    y_rows = np.where(np.abs(lp.y) <= tol, 0.0, lp.y)
    for (j, side), y in zip(rows, y_rows):
        dual[j] += y
        if side == "lo":
            lower[j] += y
        elif side == "hi":
            upper[j] += y
    basic = set(lp.basis)
    nonbasic = [i for i in range(len(lp.reduced_costs)) if i not in basic]
    unique = not any(abs(lp.reduced_costs[i]) <= 1e-9 for i in nonbasic)
    measure = _to_measure(table, lp.z[:n], rank_tol)
    log.info("optimal value %.12g with %d atoms after %d pivots", lp.objective, measure.size, lp.iterations)
    return BoundResult(
        OPTIMAL,
        lp.objective,
        measure=measure,
        dual=tuple(float(v) for v in dual),
        dual_lower=tuple(float(v) for v in lower),
        dual_upper=tuple(float(v) for v in upper),
        grid_size=n,
        iterations=lp.iterations,
        lp_value=lp.objective,
        unique=unique,
    )


def _negate(result: BoundResult) -> BoundResult:
    def neg(values):
        return None if values is None else tuple(-v for v in values)

    value = -result.value if not math.isnan(result.value) else result.value
    lp_value = None if result.lp_value is None else -result.lp_value
    return replace(result, value=value, lp_value=lp_value, dual=neg(result.dual),
                   dual_lower=neg(result.dual_lower), dual_upper=neg(result.dual_upper))


def verify_dual(
    table: MomentTable,
    gvec: Sequence[float],
    target: MomentTarget,
    cert: DualCertificate,
    sense: str = "max",
    tol: float = 1e-7,
) -> DualReport:
    """Weak-duality check of y on every point of the table.

    Multipliers with |y_j| <= tol count as zero. The report is accepted only
    when y dominates g everywhere, every used side of the box is finite and
    the claimed value sits within tol of y.c (so it never exceeds the bound).
    """
    y = np.asarray(cert.y, dtype=float)
    g = np.asarray(gvec, dtype=float)
    majorant = y @ table.F
    violation = g - majorant if sense == "max" else majorant - g
    worst = int(np.argmax(violation))
    signs_ok = True
    terms = []
    for yj, lo, hi in zip(y, target.lo, target.hi):
        if abs(yj) <= tol:
            continue
        # the bound uses the side of the box that y_j pushes against
        use_hi = (yj > 0) == (sense == "max")
        bound = hi if use_hi else lo
        if not math.isfinite(bound):
            signs_ok = False
            continue
        terms.append(yj * bound)
    dual_value = math.fsum(terms)
    gap = abs(dual_value - cert.value)
    max_violation = float(violation[worst])
    accepted = signs_ok and max_violation <= tol and gap <= tol
    return DualReport(max_violation, table.space.location(worst), dual_value, gap, signs_ok, accepted)


def _is_expr(f) -> bool:
    return f is not None and not isinstance(f, tuple)


def _function_exprs(problem: MomentProblem) -> List[Expr]:
    funcs = [c.f for c in problem.constraints] + [problem.objective]
    return [f for f in funcs if _is_expr(f)]


def build_grid(domain: IntervalDomain, exprs: Sequence[Expr], divisions: int = 2000) -> Tuple[List[float], bool]:
    """Uniform grid over the interval plus every comparison breakpoint inside it."""
    span = domain.hi - domain.lo
    step = domain.grid_step or span / divisions
    count = max(1, int(math.ceil(span / step - 1e-9)))
    if abs(count * step - span) <= 1e-9 * span:
        xs = np.linspace(domain.lo, domain.hi, count + 1)
    else:
        xs = domain.lo + step * np.arange(count)
        xs = np.append(xs[xs < domain.hi], domain.hi)
    pinned: List[float] = []
    warning = False
    for e in exprs:
        scan = collect_breakpoints(e)
        warning = warning or scan.warning
        pinned.extend(p for p in scan.points if domain.lo <= p <= domain.hi)
    return merge_points(xs.tolist(), pinned), warning


def _row(f, coords: Optional[Sequence[float]], fallback: Optional[np.ndarray], n: int, what: str) -> np.ndarray:
    if isinstance(f, tuple):
        row = np.asarray(f, dtype=float)
        if row.shape[0] != n:
            raise MomentError(f"{what}: value row has {row.shape[0]} entries for {n} points")
        return row
    if f is None:
        if fallback is None:
            raise MomentError(f"{what}: no function and no domain table to fall back on")
        return np.asarray(fallback, dtype=float)
    if coords is None:
        raise MomentError(f"{what}: expressions need point coordinates")
    return eval_many(f, coords)


def tabulate(problem: MomentProblem, settings: Optional[Dict] = None) -> Tuple[MomentTable, MomentTarget]:
    """Evaluate constraint functions and objective on the problem's point set."""
    s = settings or get_settings()
    domain = problem.domain
    if isinstance(domain, IntervalDomain):
        funcs = [c.f for c in problem.constraints] + [problem.objective]
        if not all(_is_expr(f) for f in funcs):
            raise MomentError("interval domains need an expression for every constraint and the objective")
        coords, warning = build_grid(domain, _function_exprs(problem), int(s["grid_divisions"]))
        if warning:
            log.warning("some comparisons have no extractable breakpoint; indicators may be mis-sampled")
        space = FiniteSpace.from_coords(coords)
        F_dom = g_dom = None
    else:
        space = domain.space
        coords = space.coords
        F_dom, g_dom = domain.F, domain.g
    n = space.n
    F = np.vstack([
        _row(c.f, coords, None if F_dom is None else F_dom[j], n, f"constraints.{j}.f")
        for j, c in enumerate(problem.constraints)
    ])
    g = _row(problem.objective, coords, g_dom, n, "objective")
    log.debug("tabulated %d constraints on %d points", problem.k, n)
    return MomentTable(F, g, space), problem.target


def atoms_table(problem: MomentProblem, locations: Sequence[Location], table: Optional[MomentTable] = None) -> MomentTable:
    """Moment table restricted to (or evaluated at) the given locations."""
    if isinstance(problem.domain, IntervalDomain):
        xs = [float(x) for x in locations]
        F = np.array([[eval_expr(c.f, x) for x in xs] for c in problem.constraints])
        g = np.array([eval_expr(problem.objective, x) for x in xs])
        return MomentTable(F, g, FiniteSpace.from_coords(xs))
    if table is None:
        table, _ = tabulate(problem)
    ids = [table.space.index_of(loc) for loc in locations]
    coords = None if table.space.coords is None else tuple(table.space.coords[i] for i in ids)
    return MomentTable(table.F[:, ids], table.g[ids], FiniteSpace(len(ids), coords))


def refine_atoms(
    problem: MomentProblem,
    seed: DiscreteMeasure,
    settings: Optional[Dict] = None,
) -> Tuple[DiscreteMeasure, float]:
    """Move atoms off the grid while the objective keeps improving.

    Each sweep tries, atom by atom, a scan plus golden-section search for a new
    location between the neighbouring atoms (or the domain ends); a candidate is
    scored by re-solving the weight LP over the current atoms plus the candidate,
    so the current measure always stays feasible and the objective never drops.
    """
    s = settings or get_settings()
    domain = problem.domain
    if not isinstance(domain, IntervalDomain):
        raise MomentError("refinement needs an interval domain")
    if not all(_is_expr(f) for f in [c.f for c in problem.constraints] + [problem.objective]):
        raise MomentError("refinement needs expressions for every function")
    target = problem.target
    sign = 1.0 if problem.sense == "max" else -1.0
    tol = problem.options.tol

    def columns(xs: Sequence[float]) -> MomentTable:
        F = np.array([[eval_expr(c.f, x) for x in xs] for c in problem.constraints])
        g = sign * np.array([eval_expr(problem.objective, x) for x in xs])
        return MomentTable(F, g, FiniteSpace.from_coords(xs))

    def weight_lp(xs: Sequence[float]) -> Optional[Tuple[float, List[float], List[float]]]:
        xs = sorted(set(xs))
        lp, _ = _solve_max(columns(xs), target, tol)
        if lp.status != "optimal":
            return None
        lam = clean_weights(lp.z[:len(xs)])
        keep = positive_ids(lam)
        return lp.objective, [xs[i] for i in keep], [float(lam[i]) for i in keep]

    locs = [float(x) for x in seed.locations]
    weights = list(seed.weights)
    if locs:
        seed_table = columns(locs)
        attained = seed_table.F @ np.array(weights)
        if not target.contains(attained, float(s["feas_tol"]) * max(1.0, float(np.max(np.abs(attained))))):
            raise SeedInfeasibleError("seed infeasible")
        current = math.fsum(np.array(weights) * seed_table.g)
        solved = weight_lp(locs)
        if solved is not None and solved[0] >= current:
            current, locs, weights = solved
    elif not target.contains(np.zeros(target.k), float(s["feas_tol"])):
        raise SeedInfeasibleError("seed infeasible")
    else:
        current = 0.0

    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    for sweep in range(int(s["max_sweeps"])):
        start = current
        for idx in range(len(locs)):
            a = locs[idx - 1] if idx > 0 else domain.lo
            b = locs[idx + 1] if idx + 1 < len(locs) else domain.hi
            best = (current, locs, weights)

            def score(t: float) -> float:
                nonlocal best
                if t in locs:
                    return current
                try:
                    solved = weight_lp(locs + [t])
                except MomentError:
                    return -math.inf
                if solved is None:
                    return -math.inf
                if solved[0] > best[0]:
                    best = solved
                return solved[0]

            # coarse scan first; golden-section then runs inside the best bracket
            ts = np.linspace(a, b, int(s["scan_points"]) + 2)
            i = int(np.argmax([score(float(t)) for t in ts]))
            lo_t, hi_t = float(ts[max(i - 1, 0)]), float(ts[min(i + 1, ts.size - 1)])
            c_t = hi_t - ratio * (hi_t - lo_t)
            d_t = lo_t + ratio * (hi_t - lo_t)
            fc, fd = score(c_t), score(d_t)
            for _ in range(int(s["golden_iterations"])):
                if fc >= fd:
                    hi_t, d_t, fd = d_t, c_t, fc
                    c_t = hi_t - ratio * (hi_t - lo_t)
                    fc = score(c_t)
                else:
                    lo_t, c_t, fc = c_t, d_t, fd
                    d_t = lo_t + ratio * (hi_t - lo_t)
                    fd = score(d_t)
            if best[0] > current:
                current, locs, weights = best
                break
        gain = current - start
        log.debug("refine sweep %d: value %.12g gain %.3e", sweep, sign * current, gain)
        if gain < float(s["sweep_gain"]):
            break

    pairs = list(zip(locs, weights))
    return DiscreteMeasure.from_pairs(pairs, k=target.k), sign * current


def moment_bound(problem: MomentProblem, settings: Optional[Dict] = None) -> BoundResult:
    s = settings or get_settings()
    table, target = tabulate(problem, s)
    result = solve_lp(table, target, problem.sense, problem.options.tol, float(s["rank_tol"]))
    result = replace(result, grid_size=table.n)
    if result.status != OPTIMAL:
        return result

    cert = DualCertificate(result.dual, result.value)
    report = verify_dual(table, table.g, target, cert, problem.sense, float(s["dual_tol"]))
    cert = replace(cert, max_violation=report.max_violation, worst_point=report.worst_point)
    result = replace(result, certificate=cert, dual_report=report)
    if not report.accepted:
        log.warning("dual certificate rejected: violation %.3e gap %.3e", report.max_violation, report.gap)

    if problem.options.refine and isinstance(problem.domain, IntervalDomain):
        measure, value = refine_atoms(problem, result.measure, s)
        better = value > result.value if problem.sense == "max" else value < result.value
        if better:
            log.info("refinement moved the bound from %.12g to %.12g", result.value, value)
            result = _recertify(problem, table, target, result, measure, value, s)
        result = replace(result, refined=True)

    if target.is_exact:
        result = replace(result, extremality=_certify(problem, table, target, result.measure, s))
    return result


def _with_points(problem: MomentProblem, table: MomentTable, xs: Sequence[float]) -> MomentTable:
    """Grid table extended by the columns of extra off-grid points."""
    extra = [float(x) for x in xs if x not in table.space.coords]
    if not extra:
        return table
    coords = merge_points(table.space.coords, extra, rel=0.0)
    F = np.array([[eval_expr(c.f, x) for x in coords] for c in problem.constraints])
    g = np.array([eval_expr(problem.objective, x) for x in coords])
    return MomentTable(F, g, FiniteSpace.from_coords(coords))


def _recertify(problem: MomentProblem, table: MomentTable, target: MomentTarget, result: BoundResult,
               measure: DiscreteMeasure, value: float, s: Dict) -> BoundResult:
    """Attach a dual that covers the refined atoms as well as the grid."""
    wide = _with_points(problem, table, measure.locations)
    lp = solve_lp(wide, target, problem.sense, problem.options.tol, float(s["rank_tol"]))
    if lp.status == OPTIMAL:
        ahead = lp.value > value if problem.sense == "max" else lp.value < value
        if ahead:
            measure, value = lp.measure, lp.value
        result = replace(result, dual=lp.dual, dual_lower=lp.dual_lower, dual_upper=lp.dual_upper,
                         unique=lp.unique)
    cert = DualCertificate(result.dual, value)
    report = verify_dual(wide, wide.g, target, cert, problem.sense, float(s["dual_tol"]))
    cert = replace(cert, max_violation=report.max_violation, worst_point=report.worst_point)
    if not report.accepted:
        log.warning("dual certificate rejected after refinement: violation %.3e gap %.3e",
                    report.max_violation, report.gap)
    return replace(result, measure=measure, value=value, certificate=cert, dual_report=report)


def _certify(problem: MomentProblem, table: MomentTable, target: MomentTarget,
             measure: DiscreteMeasure, s: Dict) -> Optional[ExtremalityCertificate]:
    c = target.exact_vector()
    tol = float(s["feas_tol"]) * max(1.0, float(np.max(np.abs(c))))
    try:
        if not measure.size:
            return certify_extreme(Measure.zero(table.space), table, c, tol, float(s["rank_tol"]))
        atoms = atoms_table(problem, measure.locations, table)
        mu = Measure(atoms.space, np.array(measure.weights))
        return certify_extreme(mu, atoms, c, tol, float(s["rank_tol"]))
    except NotInMomentSetError as e:
        log.warning("returned measure not certified: %s", e)
        return None
