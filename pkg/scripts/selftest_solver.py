#!/usr/bin/env python3
"""Self-test for the bound solver: classical inequalities, duals, refinement.

Markov and Cantelli bounds are solved on grids and compared with their closed
forms; random finite instances are cross-checked against vertex enumeration
and scipy's linprog.
"""
from pathlib import Path
import math
import sys

import numpy as np
from scipy.optimize import linprog

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / 'src'))

from moment_bounds.errors import MomentError, SeedInfeasibleError  # type: ignore
from moment_bounds.expr import parse_expr  # type: ignore
from moment_bounds.extremality import extreme_bound  # type: ignore
from moment_bounds.measure import DiscreteMeasure, FiniteSpace, MomentTable  # type: ignore
from moment_bounds.problem import (  # type: ignore
    Constraint,
    FiniteDomain,
    IntervalDomain,
    MomentProblem,
    MomentTarget,
    Options,
)
from moment_bounds.settings import default_settings  # type: ignore
from moment_bounds.solver import (  # type: ignore
    DualCertificate,
    atoms_table,
    build_grid,
    moment_bound,
    refine_atoms,
    solve_lp,
    tabulate,
    verify_dual,
)

S = default_settings()


def _problem(lo, hi, fs, targets, objective, sense='max', step=0.01, refine=False):
    return MomentProblem(
        IntervalDomain(lo, hi, step),
        tuple(Constraint(parse_expr(f), t) for f, t in zip(fs, targets)),
        parse_expr(objective),
        sense,
        Options(refine=refine),
    )


def _markov(**kw):
    return _problem(0.0, 10.0, ['1', 'x'], [(1.0, 1.0), (1.0, 1.0)], '(x >= 2)', **kw)


def _cantelli(**kw):
    return _problem(-10.0, 10.0, ['1', 'x', 'x^2'], [(1.0, 1.0), (0.0, 0.0), (1.0, 1.0)], '(x >= 1)', **kw)


def _raises(exc, fn, *args):
    try:
        fn(*args)
    except exc as e:
        return e
    raise AssertionError(f'{exc.__name__} not raised')


def test_markov():
    res = moment_bound(_markov(), S)
    assert res.status == 'optimal'
    assert abs(res.value - 0.5) <= 1e-6
    assert res.grid_size == 1001
    assert np.allclose(res.measure.locations, [0.0, 2.0], atol=1e-12)
    assert np.allclose(res.measure.weights, [0.5, 0.5], atol=1e-9)
    assert np.allclose(res.dual, [0.0, 0.5], atol=1e-6)
    assert res.dual_report.accepted and res.dual_report.gap <= 1e-7
    assert res.unique
    assert res.extremality is not None and res.extremality.is_extreme
    assert not res.refined


def test_markov_refined_keeps_optimum():
    res = moment_bound(_markov(refine=True), S)
    assert res.refined
    assert abs(res.value - 0.5) <= 1e-6
    assert np.allclose(res.measure.locations, [0.0, 2.0], atol=1e-9)


def test_markov_min_sense():
    res = moment_bound(_markov(sense='min'), S)
    assert res.status == 'optimal'
    assert abs(res.value) <= 1e-9
    assert res.dual_report.accepted


def test_cantelli():
    res = moment_bound(_cantelli(), S)
    assert res.status == 'optimal'
    assert abs(res.value - 0.5) <= 1e-6
    assert res.measure.size <= 3
    assert np.allclose(res.measure.locations, [-1.0, 1.0], atol=1e-9)
    assert res.dual_report.accepted
    assert res.dual_report.max_violation <= 1e-7


def test_cantelli_coarse_grid_refined():
    res = moment_bound(_cantelli(step=0.3, refine=True), S)
    assert res.refined
    assert res.value >= res.lp_value - 1e-12
    assert abs(res.value - 0.5) <= 1e-4


def test_refinement_moves_atom_off_grid():
    problem = _problem(0.0, 1.0, ['1'], [(1.0, 1.0)], '-((x - 0.37)^2)', step=0.1, refine=True)
    res = moment_bound(problem, S)
    assert abs(res.lp_value + 0.0009) <= 1e-12
    assert res.value >= -1e-9
    assert abs(res.measure.locations[0] - 0.37) <= 1e-4
    assert res.extremality.is_extreme


def test_refined_value_stays_under_dual_bound():
    problem = _problem(0.0, 1.0, ['1'], [(1.0, 1.0)], '-((x - 0.37)^2)', step=0.1, refine=True)
    res = moment_bound(problem, S)
    report = res.dual_report
    assert res.certificate.value == res.value
    assert report.accepted
    assert res.value <= report.dual_value + 1e-9
    assert report.dual_value >= -1e-9
    # the grid dual no longer bounds the refined measure
    xs = [0.3, float(res.measure.locations[0]), 0.4]
    stale = verify_dual(atoms_table(problem, xs), atoms_table(problem, xs).g, problem.target,
                        DualCertificate((-0.0009,), res.value))
    assert not stale.accepted and stale.gap >= 0.0009 - 1e-9


def test_tail_bound():
    res = moment_bound(
        _problem(-10.0, 10.0, ['1', 'x^2'], [(1.0, 1.0), (1.0, 1.0)], '(x >= 2) + (x <= -2)'), S)
    assert abs(res.value - 0.25) <= 1e-6
    assert res.measure.size <= 2
    assert not res.unique
    folded = moment_bound(
        _problem(-10.0, 10.0, ['1', 'x^2'], [(1.0, 1.0), (1.0, 1.0)], '(abs(x) >= 2)'), S)
    assert abs(folded.value - 0.25) <= 1e-6


def test_objective_equal_to_a_constraint():
    res = moment_bound(_problem(0.0, 1.0, ['1', 'x'], [(1.0, 1.0), (0.3, 0.3)], 'x'), S)
    assert abs(res.value - 0.3) <= 1e-12
    res = moment_bound(_problem(0.0, 1.0, ['1'], [(1.0, 1.0)], '1'), S)
    assert abs(res.value - 1.0) <= 1e-12 and res.measure.size == 1


def test_infeasible_mean():
    res = moment_bound(_problem(0.0, 1.0, ['1', 'x'], [(1.0, 1.0), (2.0, 2.0)], 'x'), S)
    assert res.status == 'infeasible'
    assert math.isnan(res.value)
    assert res.phase1_residual is not None and len(res.phase1_residual) == 2
    assert max(abs(r) for r in res.phase1_residual) >= 0.5 - 1e-9
    assert res.measure is None


def test_unbounded_ray():
    domain = FiniteDomain(FiniteSpace(2))
    problem = MomentProblem(domain, (Constraint((1.0, -1.0), (0.0, 0.0)),), (1.0, 0.0))
    res = moment_bound(problem, S)
    assert res.status == 'unbounded' and res.value == math.inf
    assert sorted(loc for loc, _ in res.ray) == [0, 1]
    assert all(amount > 0 for _, amount in res.ray)


def test_box_target_duals():
    problem = _problem(0.0, 1.0, ['1', 'x'], [(1.0, 1.0), (0.2, 0.4)], 'x^2')
    res = moment_bound(problem, S)
    assert abs(res.value - 0.4) <= 1e-9
    assert np.allclose(res.measure.locations, [0.0, 1.0])
    assert abs(res.dual_upper[1] - 1.0) <= 1e-9 and abs(res.dual_lower[1]) <= 1e-9
    assert res.dual_report.accepted and res.dual_report.signs_ok
    assert res.extremality is None


def test_verify_dual_examples():
    table, target = tabulate(_markov(), S)
    good = verify_dual(table, table.g, target, DualCertificate((0.0, 0.5), 0.5))
    assert good.accepted and abs(good.max_violation) <= 1e-12
    bad = verify_dual(table, table.g, target, DualCertificate((0.0, 0.4), 0.5))
    assert not bad.accepted
    assert abs(bad.max_violation - 0.2) <= 1e-12 and bad.worst_point == 2.0
    low = verify_dual(table, table.g, target, DualCertificate((0.0, 0.0), 0.0), sense='min')
    assert low.accepted
    # g = f_1: y = e_1 is a certificate with zero gap
    same = verify_dual(table, table.F[0], target, DualCertificate((1.0, 0.0), 1.0))
    assert same.accepted and same.gap == 0.0


def test_verify_dual_flags_unbounded_side():
    table = MomentTable(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([0.0, 1.0]))
    target = MomentTarget.box([(1.0, 1.0), (0.0, math.inf)])
    report = verify_dual(table, table.g, target, DualCertificate((0.0, 1.0), 1.0))
    assert not report.signs_ok and not report.accepted


def _random_table(rng, n, k):
    F = np.vstack([np.ones(n), rng.uniform(-1, 1, size=(k - 1, n))])
    lam0 = rng.uniform(0.0, 1.0, size=n)
    lam0 /= lam0.sum()
    return MomentTable(F, rng.uniform(-1, 1, size=n)), F @ lam0


def test_sense_symmetry():
    rng = np.random.default_rng(17)
    for _ in range(50):
        table, c = _random_table(rng, int(rng.integers(2, 12)), int(rng.integers(1, 4)))
        target = MomentTarget.exact(c)
        low = solve_lp(table, target, 'min')
        high = solve_lp(table.with_objective(-table.g), target, 'max')
        assert low.status == high.status == 'optimal'
        assert abs(low.value + high.value) <= 1e-10
        ref = linprog(table.g, A_eq=table.F, b_eq=c, bounds=[(0, None)] * table.n, method='highs')
        assert abs(low.value - ref.fun) <= 1e-8


def test_lp_agrees_with_enumeration():
    rng = np.random.default_rng(23)
    for _ in range(50):
        table, c = _random_table(rng, int(rng.integers(2, 10)), int(rng.integers(1, 4)))
        target = MomentTarget.exact(c)
        res = solve_lp(table, target)
        value, _ = extreme_bound(table, c, tol=1e-8)
        assert res.status == 'optimal' and value is not None
        assert abs(res.value - value) <= 1e-8
        assert res.measure.size <= table.k
        report = verify_dual(table, table.g, target, DualCertificate(res.dual, res.value))
        assert report.accepted, report


def test_box_targets_match_linprog():
    rng = np.random.default_rng(31)
    for _ in range(30):
        table, c = _random_table(rng, int(rng.integers(3, 12)), int(rng.integers(2, 4)))
        bounds = [(1.0, 1.0)] + [(v - 0.1, v + 0.1) for v in c[1:]]
        target = MomentTarget.box(bounds)
        res = solve_lp(table, target)
        rows = table.F[1:]
        ref = linprog(
            -table.g,
            A_eq=table.F[:1],
            b_eq=[1.0],
            A_ub=np.vstack([rows, -rows]),
            b_ub=np.concatenate([[b[1] for b in bounds[1:]], [-b[0] for b in bounds[1:]]]),
            bounds=[(0, None)] * table.n,
            method='highs',
        )
        assert abs(res.value + ref.fun) <= 1e-8
        assert all(v >= -1e-9 for v in res.dual_upper) and all(v <= 1e-9 for v in res.dual_lower)
        report = verify_dual(table, table.g, target, DualCertificate(res.dual, res.value))
        assert report.accepted, report


def test_open_box_ends_keep_certificate():
    rng = np.random.default_rng(41)
    for _ in range(60):
        table, c = _random_table(rng, int(rng.integers(3, 12)), int(rng.integers(2, 4)))
        bounds = [(1.0, 1.0)] + [(v - 0.1, math.inf) if rng.random() < 0.5 else (-math.inf, v + 0.1) for v in c[1:]]
        target = MomentTarget.box(bounds)
        upper = [(row, hi) for row, (_, hi) in zip(table.F[1:], bounds[1:]) if math.isfinite(hi)]
        lower = [(-row, -lo) for row, (lo, _) in zip(table.F[1:], bounds[1:]) if math.isfinite(lo)]
        ub = upper + lower
        for sense, sign in (('max', -1.0), ('min', 1.0)):
            res = solve_lp(table, target, sense)
            ref = linprog(
                sign * table.g,
                A_eq=table.F[:1],
                b_eq=[1.0],
                A_ub=np.vstack([r for r, _ in ub]),
                b_ub=[b for _, b in ub],
                bounds=[(0, None)] * table.n,
                method='highs',
            )
            assert res.status == 'optimal'
            assert abs(res.value - sign * ref.fun) <= 1e-8
            for (lo, hi), y_lo, y_hi in zip(bounds[1:], res.dual_lower[1:], res.dual_upper[1:]):
                if not math.isfinite(lo):
                    assert y_lo == 0.0
                if not math.isfinite(hi):
                    assert y_hi == 0.0
                if sense == 'max':
                    assert y_hi >= 0.0 and y_lo <= 0.0
                else:
                    assert y_hi <= 0.0 and y_lo >= 0.0
            report = verify_dual(table, table.g, target, DualCertificate(res.dual, res.value), sense)
            assert report.signs_ok and report.accepted, (sense, bounds, res.dual, report)


def test_verify_dual_ignores_round_off_on_open_side():
    table = MomentTable(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([0.0, 1.0]))
    active = MomentTarget.box([(1.0, 1.0), (-math.inf, 0.5)])
    report = verify_dual(table, table.g, active, DualCertificate((0.0, 1.0), 0.5))
    assert report.accepted and report.dual_value == 0.5
    # hi side inactive: a -1e-17 multiplier would otherwise point at lo = -inf
    slack = MomentTarget.box([(1.0, 1.0), (-math.inf, 2.0)])
    report = verify_dual(table, table.g, slack, DualCertificate((1.0, -6.77e-17), 1.0))
    assert report.signs_ok and report.accepted
    report = verify_dual(table, table.g, slack, DualCertificate((1.0, -0.25), 1.0))
    assert not report.signs_ok and not report.accepted


def test_finer_grid_never_worse():
    def value(step):
        problem = _problem(-2.0, 3.0, ['1', 'x', 'x^2'], [(1.0, 1.0), (0.0, 0.0), (1.0, 1.0)], 'x^3', step=step)
        return moment_bound(problem, S).value

    assert value(0.05) >= value(0.1) - 1e-9


def test_build_grid():
    coords, warning = build_grid(IntervalDomain(0.0, 1.0, 0.25), [])
    assert coords == [0.0, 0.25, 0.5, 0.75, 1.0] and not warning
    coords, _ = build_grid(IntervalDomain(0.0, 1.0, 0.25), [parse_expr('(x >= 0.3)')])
    assert len(coords) == 6 and 0.3 in coords
    coords, _ = build_grid(IntervalDomain(0.0, 1.0, 0.3), [])
    assert np.allclose(coords, [0.0, 0.3, 0.6, 0.9, 1.0]) and coords[-1] == 1.0
    coords, warning = build_grid(IntervalDomain(0.0, 1.0), [parse_expr('(abs(x) >= 1)')], divisions=4)
    assert len(coords) == 5 and warning
    # breakpoints outside the domain are ignored
    coords, _ = build_grid(IntervalDomain(0.0, 1.0, 0.5), [parse_expr('(x >= 7)')])
    assert coords == [0.0, 0.5, 1.0]


def test_tabulate_finite_domain():
    space = FiniteSpace.from_coords([0.0, 1.0, 2.0])
    F = np.array([[1.0, 1.0, 1.0], [0.0, 1.0, 2.0]])
    g = np.array([0.0, 0.0, 1.0])
    problem = MomentProblem(FiniteDomain(space, F, g), (Constraint(None, (1.0, 1.0)), Constraint(None, (1.0, 1.0))))
    table, target = tabulate(problem, S)
    assert np.array_equal(table.F, F) and np.array_equal(table.g, g)
    assert target.is_exact and target.k == 2
    mixed = MomentProblem(
        FiniteDomain(space, F, g),
        (Constraint(parse_expr('1'), (1.0, 1.0)), Constraint((0.0, 1.0, 2.0), (1.0, 1.0))),
        parse_expr('(x >= 2)'),
    )
    table, _ = tabulate(mixed, S)
    assert np.array_equal(table.F, F) and np.array_equal(table.g, g)
    res = moment_bound(mixed, S)
    assert abs(res.value - 0.5) <= 1e-12 and not res.refined
    sub = atoms_table(mixed, [0.0, 2.0], table)
    assert np.array_equal(sub.F, F[:, [0, 2]]) and sub.space.coords == (0.0, 2.0)


def test_tabulate_rejects_bad_functions():
    bare = FiniteDomain(FiniteSpace(3))
    problem = MomentProblem(bare, (Constraint(parse_expr('x'), (1.0, 1.0)),), (0.0, 1.0, 2.0))
    _raises(MomentError, tabulate, problem, S)
    rows_on_interval = MomentProblem(IntervalDomain(0.0, 1.0), (Constraint((1.0, 1.0), (1.0, 1.0)),), parse_expr('x'))
    _raises(MomentError, tabulate, rows_on_interval, S)


def test_atoms_table_on_interval():
    table = atoms_table(_markov(), [0.5, 3.0])
    assert np.array_equal(table.F, [[1.0, 1.0], [0.5, 3.0]])
    assert np.array_equal(table.g, [0.0, 1.0])


def test_refine_examples():
    problem = _problem(0.0, 1.0, ['1', 'x'], [(1.0, 1.0), (0.7, 0.7)], 'x^2', refine=True)
    res = moment_bound(problem, S)
    assert abs(res.value - 0.7) <= 1e-9
    assert np.allclose(res.measure.locations, [0.0, 1.0])
    assert np.allclose(res.measure.weights, [0.3, 0.7], atol=1e-9)


def test_refine_keeps_optimal_seed():
    seed = DiscreteMeasure.from_pairs([(0.0, 0.5), (2.0, 0.5)])
    dm, value = refine_atoms(_markov(), seed, S)
    assert dm.locations == (0.0, 2.0)
    assert abs(value - 0.5) <= 1e-12


def test_refine_rejects_infeasible_seed():
    seed = DiscreteMeasure.from_pairs([(0.0, 1.0)])
    e = _raises(SeedInfeasibleError, refine_atoms, _markov(), seed, S)
    assert 'seed infeasible' in str(e)


def main() -> int:
    for name, fn in sorted(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
    print('Self-test ok: bound solver checks pass')
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
