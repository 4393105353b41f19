#!/usr/bin/env python3
"""Self-test for the dense two-phase simplex (statuses, duals, anti-cycling)."""
from pathlib import Path
import sys

import numpy as np
from scipy.optimize import linprog

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / 'src'))

from moment_bounds.errors import SolverStalledError  # type: ignore
from moment_bounds.simplex import maximize  # type: ignore


def test_small_optimum_and_duals():
    # max 3a + 2b  s.t.  a + b + s1 = 4,  a + 3b + s2 = 6
    A = np.array([[1.0, 1.0, 1.0, 0.0], [1.0, 3.0, 0.0, 1.0]])
    b = np.array([4.0, 6.0])
    c = np.array([3.0, 2.0, 0.0, 0.0])
    res = maximize(A, b, c)
    assert res.status == 'optimal'
    assert abs(res.objective - 12.0) <= 1e-12
    assert np.allclose(res.z[:2], [4.0, 0.0])
    assert abs(float(b @ res.y) - res.objective) <= 1e-9
    assert np.all(res.reduced_costs >= -1e-9)


def test_degenerate_cycling_example():
    # classic example that cycles under textbook Dantzig pricing
    A = np.array([
        [0.5, -5.5, -2.5, 9.0, 1.0, 0.0, 0.0],
        [0.5, -1.5, -0.5, 1.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ])
    b = np.array([0.0, 0.0, 1.0])
    c = np.array([10.0, -57.0, -9.0, -24.0, 0.0, 0.0, 0.0])
    res = maximize(A, b, c)
    assert res.status == 'optimal'
    assert abs(res.objective - 1.0) <= 1e-12
    assert np.allclose(res.z[:4], [1.0, 0.0, 1.0, 0.0])


def test_infeasible_reports_residual():
    A = np.array([[1.0, 1.0]])
    b = np.array([-1.0])
    res = maximize(A, b, np.array([1.0, 0.0]))
    assert res.status == 'infeasible'
    assert res.phase1_residual is not None and abs(res.phase1_residual[0] + 1.0) <= 1e-12


def test_unbounded_ray():
    A = np.array([[1.0, -1.0]])
    b = np.array([0.0])
    c = np.array([1.0, 0.0])
    res = maximize(A, b, c)
    assert res.status == 'unbounded'
    ray = res.ray
    assert np.all(ray >= -1e-12)
    assert np.allclose(A @ ray, 0.0)
    assert float(c @ ray) > 0


def test_redundant_rows():
    A = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])
    b = np.array([1.0, 2.0])
    res = maximize(A, b, np.array([0.0, 1.0, 0.5]))
    assert res.status == 'optimal'
    assert abs(res.objective - 1.0) <= 1e-12
    assert res.y.shape == (2,)


def test_stall_raises_with_diagnostics():
    A = np.array([[1.0, 1.0, 1.0, 0.0], [1.0, 3.0, 0.0, 1.0]])
    b = np.array([4.0, 6.0])
    try:
        maximize(A, b, np.array([3.0, 2.0, 0.0, 0.0]), max_iter=0)
    except SolverStalledError as e:
        assert 'solver stalled' in str(e)
        assert e.diagnostics['iterations'] == 0
    else:
        raise AssertionError('SolverStalledError not raised')


def test_matches_linprog_on_random_polytopes():
    rng = np.random.default_rng(42)
    for _ in range(50):
        m, n = int(rng.integers(1, 5)), int(rng.integers(2, 12))
        A = rng.uniform(-1, 1, size=(m, n))
        A = np.vstack([A, np.ones(n)])  # bounded: total mass fixed
        x0 = rng.uniform(0, 1, size=n) * (rng.uniform(size=n) < 0.5)
        x0[0] += 0.1
        b = A @ x0
        c = rng.uniform(-1, 1, size=n)
        ours = maximize(A, b, c)
        ref = linprog(-c, A_eq=A, b_eq=b, bounds=[(0, None)] * n, method='highs')
        assert ref.status == 0 and ours.status == 'optimal'
        assert abs(ours.objective + ref.fun) <= 1e-8
        assert np.max(np.abs(A @ ours.z - b)) <= 1e-9
        assert np.count_nonzero(ours.z > 1e-12) <= A.shape[0]
        # weak duality holds with equality at the optimum
        assert abs(float(b @ ours.y) - ours.objective) <= 1e-8
        assert np.all(ours.reduced_costs >= -1e-8)


def main() -> int:
    for name, fn in sorted(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
    print('Self-test ok: simplex checks pass')
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
