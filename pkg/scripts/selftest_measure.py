#!/usr/bin/env python3
"""Self-test for finite measures: truncation, integration, atoms, partitions.

No solver involved. Validates deterministic behavior of measure-core helpers.
"""
from pathlib import Path
import itertools
import sys

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / 'src'))

from moment_bounds.errors import DimensionError, MomentError, NotAnAtomError, NullAtomError, ZeroMeasureError  # type: ignore
from moment_bounds.measure import (  # type: ignore
    DiscreteMeasure,
    FiniteSpace,
    Measure,
    MomentTable,
    SubsetMask,
    atom_value,
    atomic_partition,
    dirac_representation,
    integrate,
    is_atom,
    is_zero_one,
    moment_vector,
    support,
    truncate,
)


def _mu(*w):
    return Measure(FiniteSpace(len(w)), np.array(w, dtype=float))


def _raises(exc, fn, *args, **kw):
    try:
        fn(*args, **kw)
    except exc as e:
        return e
    raise AssertionError(f'{exc.__name__} not raised')


def test_space_validation():
    _raises(DimensionError, FiniteSpace, 0)
    _raises(MomentError, FiniteSpace.from_coords, [0.0, 0.0])
    _raises(MomentError, FiniteSpace.from_coords, [1.0, 0.5])
    s = FiniteSpace.from_coords([0.0, 0.5, 1.0])
    assert [p.id for p in s.points] == [0, 1, 2]
    assert s.index_of(0.5) == 1
    _raises(DimensionError, s.index_of, 0.25)
    assert FiniteSpace(3).location(2) == 2


def test_measure_validation():
    _raises(MomentError, _mu, 1.0, -0.5)
    _raises(MomentError, _mu, 1.0, float('inf'))
    mu = _mu(1, 2)
    assert not mu.weights.flags.writeable


def test_truncate():
    mu = _mu(1, 2, 3)
    assert list(truncate(mu, SubsetMask.full(3)).weights) == [1, 2, 3]
    assert list(truncate(mu, SubsetMask.empty(3)).weights) == [0, 0, 0]
    assert list(truncate(mu, SubsetMask.of(3, [0, 2])).weights) == [1, 0, 3]
    _raises(DimensionError, truncate, mu, SubsetMask.full(2))


def test_truncate_idempotent():
    mu = _mu(0.3, 0.0, 1.7, 2.5)
    for bits in itertools.product([False, True], repeat=4):
        A = SubsetMask(bits)
        once = truncate(mu, A)
        assert truncate(once, A) == once


def test_integrate():
    assert integrate(_mu(0.5, 0.5), [1, 1]) == 1.0
    assert integrate(_mu(0.5, 0.5), [0, 2]) == 1.0
    assert integrate(_mu(0, 0), [3, -7]) == 0.0
    _raises(DimensionError, integrate, _mu(1, 1), [1, 2, 3])
    mu = _mu(0.2, 0.7, 1.1)
    v = [1.5, -2.0, 4.0]
    assert abs(integrate(mu.scaled(3.0), v) - 3.0 * integrate(mu, v)) <= 1e-12


def test_moment_vector():
    table = MomentTable(np.array([[1.0, 1.0], [0.0, 1.0]]))
    mu = _mu(0.5, 0.5)
    assert list(moment_vector(mu, table)) == [1.0, 0.5]
    assert list(moment_vector(mu, table, SubsetMask.of(2, [1]))) == [0.5, 0.5]
    assert list(moment_vector(_mu(0, 0), table)) == [0.0, 0.0]


def test_moment_vector_additive():
    rng = np.random.default_rng(3)
    F = rng.uniform(-1, 1, size=(3, 6))
    table = MomentTable(F)
    mu = Measure(FiniteSpace(6), rng.uniform(0, 2, size=6))
    A = SubsetMask.of(6, [0, 2, 5])
    B = SubsetMask.of(6, [1, 4])
    whole = moment_vector(mu, table, A | B)
    parts = moment_vector(mu, table, A) + moment_vector(mu, table, B)
    assert np.allclose(whole, parts, rtol=1e-12, atol=1e-15)


def test_is_atom_and_support():
    mu = _mu(1, 0, 2)
    assert is_atom(mu, SubsetMask.of(3, [0]))
    assert is_atom(mu, SubsetMask.empty(3))
    assert not is_atom(mu, SubsetMask.of(3, [0, 2]))
    assert support(_mu(0, 3, 0)).ids() == [1]
    assert support(_mu(1, 1, 1)).ids() == [0, 1, 2]
    assert support(_mu(0, 0, 0)).ids() == []


def test_support_ignores_rounding_noise():
    assert support(_mu(1.0, 1e-15, 2.0)).ids() == [0, 2]


def test_atomic_partition():
    part = atomic_partition(_mu(1, 0, 2))
    assert [c.ids() for c in part.cells] == [[0, 1], [2]]
    assert part.m == 2
    single = Measure.dirac(FiniteSpace(3), 0)
    assert [c.ids() for c in atomic_partition(single).cells] == [[0, 1, 2]]
    e = _raises(ZeroMeasureError, atomic_partition, _mu(0, 0, 0))
    assert 'zero measure has no non-null partition' in str(e)


def test_atomic_partition_is_maximal():
    rng = np.random.default_rng(11)
    for _ in range(20):
        w = rng.uniform(0, 1, size=6) * (rng.uniform(size=6) < 0.6)
        if not w.any():
            continue
        mu = _mu(*w)
        part = atomic_partition(mu)
        assert part.is_valid_for(mu)
        for cell in part.cells:
            ids = cell.ids()
            # no split of the cell into two positive-mass pieces
            for r in range(1, len(ids)):
                for left in itertools.combinations(ids, r):
                    a = mu.of(SubsetMask.of(6, left))
                    b = mu.of(SubsetMask.of(6, [i for i in ids if i not in left]))
                    assert a == 0.0 or b == 0.0


def test_atom_value():
    mu = _mu(0, 2, 0)
    assert atom_value(mu, SubsetMask.full(3), [7, 4, 9]) == 4
    e = _raises(NullAtomError, atom_value, mu, SubsetMask.empty(3), [7, 4, 9])
    assert 'null atom has no canonical value' in str(e)
    e = _raises(NotAnAtomError, atom_value, _mu(1, 0, 1), SubsetMask.of(3, [0, 2]), [1, 2, 3])
    assert 'not an atom' in str(e)


def test_discrete_measure_invariants():
    _raises(MomentError, DiscreteMeasure.from_pairs, [(0.0, 0.0)])
    _raises(MomentError, DiscreteMeasure.from_pairs, [(0.0, 1.0), (0.0, 2.0)])
    _raises(MomentError, DiscreteMeasure.from_pairs, [(0.0, 1.0), (1.0, 1.0)], k=1)
    dm = DiscreteMeasure.from_pairs([(2.0, 0.5), (0.0, 0.5)])
    assert dm.locations == (0.0, 2.0)
    assert dm.mass == 1.0
    table = MomentTable(np.array([[1.0, 1.0, 1.0], [0.0, 1.0, 2.0]]), space=FiniteSpace.from_coords([0.0, 1.0, 2.0]))
    tagged = dm.tag_independent(table)
    assert tagged.f_independent and tagged.k == 2
    assert list(dm.to_measure(table.space).weights) == [0.5, 0.0, 0.5]


def test_dirac_representation_identity():
    rng = np.random.default_rng(5)
    space = FiniteSpace.from_coords([0.0, 0.25, 0.5, 0.75, 1.0])
    F = np.vstack([np.ones(5), np.array(space.coords), np.array(space.coords) ** 2])
    g = rng.uniform(-1, 1, size=5)
    table = MomentTable(F, g, space)
    mu = Measure(space, np.array([0.2, 0.0, 0.3, 0.0, 0.5]))
    dm = dirac_representation(mu, table)
    assert dm.f_independent and dm.size == 3
    back = dm.to_measure(space)
    assert np.array_equal(moment_vector(back, table), moment_vector(mu, table))
    assert integrate(back, g) == integrate(mu, g)
    # more cells than constraints: no longer in D_f^(k)
    wide = Measure(space, np.array([0.2, 0.1, 0.3, 0.1, 0.3]))
    assert not dirac_representation(wide, table).f_independent


def test_is_zero_one():
    space = FiniteSpace(4)
    assert is_zero_one(Measure.dirac(space, 2))
    assert not is_zero_one(Measure.dirac(space, 2, 0.5))
    assert not is_zero_one(_mu(0.5, 0.5, 0, 0))
    assert not is_zero_one(Measure.zero(space))


def main() -> int:
    for name, fn in sorted(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
    print('Self-test ok: measure-core checks pass')
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
