#!/usr/bin/env python3
"""Self-test for extremality certificates, perturbation witnesses and vertex enumeration.

Cross-checks enumerate_extreme and certify_extreme against a definition-based
vertex test solved with scipy's linprog.
"""
from pathlib import Path
import itertools
import sys

import numpy as np
from scipy.optimize import linprog

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / 'src'))

from moment_bounds.errors import EnumerationCapError, NoPerturbationError, NotInMomentSetError  # type: ignore
from moment_bounds.extremality import (  # type: ignore
    certify_extreme,
    certify_in_box,
    enumerate_extreme,
    extreme_bound,
    perturbation_witness,
)
from moment_bounds.measure import (  # type: ignore
    FiniteSpace,
    Measure,
    MomentTable,
    atomic_partition,
    dirac_representation,
    integrate,
    is_zero_one,
    moment_vector,
)
from moment_bounds.problem import MomentTarget  # type: ignore


def _raises(exc, fn, *args, **kw):
    try:
        fn(*args, **kw)
    except exc as e:
        return e
    raise AssertionError(f'{exc.__name__} not raised')


def _mass_table(n):
    return MomentTable(np.ones((1, n)))


def _mean_table(coords):
    space = FiniteSpace.from_coords(coords)
    return MomentTable(np.vstack([np.ones(len(coords)), np.array(coords)]), space=space)


def _key(table, dm):
    ids = tuple(table.space.index_of(loc) for loc in dm.locations)
    return ids, np.array(dm.weights)


def _same(a, b, tol=1e-8):
    if len(a) != len(b):
        return False
    a = sorted(a, key=lambda t: t[0])
    b = sorted(b, key=lambda t: t[0])
    return all(x[0] == y[0] and np.allclose(x[1], y[1], atol=tol, rtol=0) for x, y in zip(a, b))


def test_dirac_is_extreme_for_mass_one():
    table = _mass_table(3)
    cert = certify_extreme(Measure.dirac(FiniteSpace(3), 1), table, [1.0])
    assert cert.is_extreme and cert.m == 1 and cert.rank == 1 and cert.witness is None


def test_split_mass_is_not_extreme():
    table = _mass_table(2)
    mu = Measure(FiniteSpace(2), np.array([0.5, 0.5]))
    cert = certify_extreme(mu, table, [1.0])
    assert not cert.is_extreme
    w = cert.witness
    assert np.allclose(w.phi, [0.5, -0.5])
    assert np.allclose(w.nu_plus.weights, [0.75, 0.25], rtol=0, atol=1e-15)
    assert np.allclose(w.nu_minus.weights, [0.25, 0.75], rtol=0, atol=1e-15)


def test_two_point_mean_is_extreme():
    table = _mean_table([0.0, 1.0])
    mu = Measure(table.space, np.array([0.5, 0.5]))
    cert = certify_extreme(mu, table, [1.0, 0.5])
    assert cert.is_extreme and cert.rank == 2
    assert len(enumerate_extreme(table, [1.0, 0.5])) == 1


def test_witness_three_thirds():
    table = _mass_table(3)
    mu = Measure(FiniteSpace(3), np.full(3, 1.0 / 3.0))
    w = perturbation_witness(mu, table, atomic_partition(mu))
    assert np.allclose(w.phi, [0.5, -0.5, 0.0], atol=1e-15)
    assert np.allclose(w.nu_plus.weights, [0.5, 1.0 / 6.0, 1.0 / 3.0], atol=1e-15)
    assert np.allclose(w.nu_minus.weights, [1.0 / 6.0, 0.5, 1.0 / 3.0], atol=1e-15)
    assert abs(w.nu_plus.mass - 1.0) <= 1e-15 and abs(w.nu_minus.mass - 1.0) <= 1e-15
    assert np.array_equal((w.nu_plus.weights + w.nu_minus.weights) / 2, mu.weights)


def test_witness_refuses_independent_vectors():
    table = _mean_table([0.0, 1.0])
    mu = Measure(table.space, np.array([0.5, 0.5]))
    e = _raises(NoPerturbationError, perturbation_witness, mu, table, atomic_partition(mu))
    assert 'no perturbation exists' in str(e)


def test_infeasible_measure_rejected():
    table = _mass_table(2)
    mu = Measure(FiniteSpace(2), np.array([0.5, 0.25]))
    e = _raises(NotInMomentSetError, certify_extreme, mu, table, [1.0])
    assert 'not a member' in str(e)


def test_zero_measure():
    table = MomentTable(np.array([[1.0, 1.0], [0.0, 1.0]]))
    cert = certify_extreme(Measure.zero(FiniteSpace(2)), table, [0.0, 0.0])
    assert cert.is_extreme and cert.m == 0
    found = enumerate_extreme(table, [0.0, 0.0])
    assert len(found) == 1 and found[0].size == 0


def test_enumerate_examples():
    two = enumerate_extreme(_mass_table(2), [1.0])
    assert [dm.locations for dm in two] == [(0,), (1,)]
    table = _mean_table([0.0, 0.5, 1.0])
    found = enumerate_extreme(table, [1.0, 0.5])
    got = sorted((dm.locations, dm.weights) for dm in found)
    assert len(got) == 2
    assert got[0][0] == (0.0, 1.0) and np.allclose(got[0][1], [0.5, 0.5])
    assert got[1][0] == (0.5,) and np.allclose(got[1][1], [1.0])
    assert enumerate_extreme(_mean_table([0.0, 1.0]), [1.0, 2.0]) == []


def test_enumeration_cap():
    e = _raises(EnumerationCapError, enumerate_extreme, _mass_table(21), [1.0])
    assert 'enumeration cap exceeded' in str(e)
    assert len(enumerate_extreme(_mass_table(21), [1.0], cap=30)) == 21


def test_zero_one_corollary():
    for n in range(1, 9):
        table = _mass_table(n)
        found = enumerate_extreme(table, [1.0])
        assert [dm.locations for dm in found] == [(i,) for i in range(n)]
        assert all(abs(dm.weights[0] - 1.0) <= 1e-15 for dm in found)
        assert all(is_zero_one(Measure.dirac(table.space, dm.locations[0])) for dm in found)


def _is_vertex(F, c, lam, rng):
    """No nonzero d with F d = 0 and lam +- d >= 0 (checked by one LP on the face of lam)."""
    T = np.flatnonzero(lam > 0)
    r = rng.uniform(-1, 1, size=T.size)
    res = linprog(
        -r,
        A_eq=F[:, T],
        b_eq=np.zeros(F.shape[0]),
        bounds=[(-lam[i], lam[i]) for i in T],
        method='highs',
    )
    assert res.status == 0
    return -res.fun <= 1e-9


def _random_instance(rng):
    n = int(rng.integers(2, 9))
    k = int(rng.integers(1, 4))
    F = rng.uniform(-1, 1, size=(k, n))
    lam0 = rng.uniform(0.1, 1.0, size=n)
    return MomentTable(F, rng.uniform(-1, 1, size=n)), F @ lam0


def _candidates(F, c):
    """Positive least-squares solutions on every support subset."""
    n = F.shape[1]
    out = []
    for r in range(1, n + 1):
        for T in itertools.combinations(range(n), r):
            sol = np.linalg.lstsq(F[:, T], c, rcond=None)[0]
            if np.max(np.abs(F[:, T] @ sol - c)) > 1e-10 or np.any(sol <= 1e-9):
                continue
            lam = np.zeros(n)
            lam[list(T)] = sol
            out.append(lam)
    return out


def test_characterization_oracle():
    rng = np.random.default_rng(20240601)
    for _ in range(200):
        table, c = _random_instance(rng)
        F = np.array(table.F)
        enumerated = [_key(table, dm) for dm in enumerate_extreme(table, c)]
        certified, vertices = [], []
        for lam in _candidates(F, c):
            key = (tuple(int(i) for i in np.flatnonzero(lam > 0)), lam[lam > 0])
            mu = Measure(table.space, lam)
            if certify_extreme(mu, table, c, tol=1e-8).is_extreme:
                certified.append(key)
            if _is_vertex(F, c, lam, rng):
                vertices.append(key)
        assert _same(enumerated, certified), (enumerated, certified)
        assert _same(enumerated, vertices), (enumerated, vertices)
        assert all(len(ids) <= table.k for ids, _ in enumerated)


def test_witness_soundness():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, n))
        F = rng.uniform(-1, 1, size=(k, n))
        table = MomentTable(F)
        mu = Measure(table.space, rng.uniform(0.05, 1.0, size=n))
        c = moment_vector(mu, table)
        cert = certify_extreme(mu, table, c, tol=1e-12)
        assert not cert.is_extreme
        w = cert.witness
        V = np.column_stack(cert.moment_vectors)
        assert np.max(np.abs(V @ np.array(w.phi))) <= 1e-10
        assert np.array_equal((w.nu_plus.weights + w.nu_minus.weights) / 2, mu.weights)
        for nu in (w.nu_plus, w.nu_minus):
            assert np.max(np.abs(moment_vector(nu, table) - c)) <= 1e-10
        assert not np.array_equal(w.nu_plus.weights, w.nu_minus.weights)
        assert all(-1.0 < p < 1.0 for p in w.phi) and abs(max(abs(p) for p in w.phi) - 0.5) <= 1e-15
        checked += 1


def test_dirac_representation_of_vertices():
    rng = np.random.default_rng(99)
    for _ in range(30):
        table, c = _random_instance(rng)
        for dm in enumerate_extreme(table, c):
            mu = dm.to_measure(table.space)
            rep = dirac_representation(mu, table)
            assert rep.f_independent
            back = rep.to_measure(table.space)
            assert np.array_equal(moment_vector(back, table), moment_vector(mu, table))
            assert integrate(back, table.g) == integrate(mu, table.g)


def test_certify_in_box_is_flagged():
    table = _mean_table([0.0, 0.5, 1.0])
    target = MomentTarget.box([(1.0, 1.0), (0.0, 0.6)])
    mu = Measure(table.space, np.array([0.5, 0.0, 0.5]))
    cert = certify_in_box(mu, table, target)
    assert cert.is_extreme and cert.heuristic
    spread = Measure(table.space, np.array([0.4, 0.2, 0.4]))
    assert not certify_in_box(spread, table, target).is_extreme
    _raises(NotInMomentSetError, certify_in_box, Measure(table.space, np.array([0.0, 0.0, 1.0])), table, target)


def test_extreme_bound():
    coords = [0.0, 0.5, 1.0, 1.5, 2.0]
    space = FiniteSpace.from_coords(coords)
    F = np.vstack([np.ones(5), np.array(coords)])
    table = MomentTable(F, np.array([0.0, 0.0, 0.0, 1.0, 1.0]), space)
    value, dm = extreme_bound(table, [1.0, 1.0])
    assert abs(value - 2.0 / 3.0) <= 1e-12
    assert dm.locations == (0.0, 1.5)
    low, _ = extreme_bound(table, [1.0, 1.0], sense='min')
    assert abs(low) <= 1e-12
    assert extreme_bound(table, [1.0, 5.0]) == (None, None)


def main() -> int:
    for name, fn in sorted(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
    print('Self-test ok: extremality checks pass')
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
