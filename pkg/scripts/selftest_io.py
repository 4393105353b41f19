#!/usr/bin/env python3
"""Self-test for problem/measure files and JSON output."""
from pathlib import Path
import json
import math
import sys

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / 'src'))

from moment_bounds.errors import SchemaError  # type: ignore
from moment_bounds.extremality import certify_extreme  # type: ignore
from moment_bounds.io import (  # type: ignore
    certificate_to_dict,
    dump_json,
    load_measure,
    load_problem,
    result_to_dict,
)
from moment_bounds.measure import FiniteSpace, Measure, MomentTable  # type: ignore
from moment_bounds.problem import FiniteDomain, IntervalDomain  # type: ignore
from moment_bounds.settings import default_settings  # type: ignore
from moment_bounds.solver import moment_bound, tabulate  # type: ignore

EXAMPLES = ROOT / 'data' / 'examples'

MARKOV = {
    'domain': {'type': 'interval', 'lo': 0, 'hi': 10, 'grid_step': 0.01},
    'constraints': [{'f': '1', 'target': [1, 1]}, {'f': 'x', 'target': [1, 1]}],
    'objective': '(x >= 2)',
    'sense': 'max',
}


def _with(**changes):
    doc = json.loads(json.dumps(MARKOV))
    doc.update(changes)
    return json.dumps(doc)


def _schema_error(text, loader=load_problem):
    try:
        loader(text)
    except SchemaError as e:
        return e
    raise AssertionError('SchemaError not raised')


def test_load_markov_file():
    problem = load_problem((EXAMPLES / 'markov.json').read_text())
    assert problem.k == 2 and problem.sense == 'max'
    assert isinstance(problem.domain, IntervalDomain) and problem.domain.grid_step == 0.01
    assert problem.options.refine
    assert problem.target.is_exact and list(problem.target.lo) == [1.0, 1.0]


def test_example_files_load():
    for path in sorted(EXAMPLES.glob('*.json')):
        if path.name.endswith('_measure.json'):
            assert load_measure(path.read_text())
        else:
            assert load_problem(path.read_text()).k >= 1, path.name


def test_missing_objective_path():
    doc = dict(MARKOV)
    del doc['objective']
    e = _schema_error(json.dumps(doc))
    assert e.path == 'objective'


def test_bad_grid_step_path():
    e = _schema_error(_with(domain={'type': 'interval', 'lo': 0, 'hi': 10, 'grid_step': 0}))
    assert e.path == 'domain.grid_step'
    e = _schema_error(_with(domain={'type': 'interval', 'lo': 1, 'hi': 0}))
    assert e.path == 'domain'


def test_expression_errors_carry_path():
    e = _schema_error(_with(constraints=[{'f': '1', 'target': [1, 1]}, {'f': 'x +', 'target': [1, 1]}]))
    assert e.path == 'constraints.1.f' and 'at offset 3' in str(e)
    e = _schema_error(_with(objective='foo(x)'))
    assert e.path == 'objective'


def test_other_schema_errors():
    assert _schema_error('{not json').path == '<root>'
    assert _schema_error(_with(extra=1)).path == 'extra'
    assert _schema_error(_with(sense='median')).path == 'sense'
    assert _schema_error(_with(constraints=[])).path == 'constraints'
    e = _schema_error(_with(constraints=[{'f': '1', 'target': [2, 1]}]))
    assert e.path == 'constraints.0.target'
    # value rows need a finite domain
    e = _schema_error(_with(objective=[0.0, 1.0]))
    assert e.path == 'objective'


def test_open_target_ends():
    problem = load_problem(_with(constraints=[{'f': '1', 'target': [1, 1]}, {'f': 'x', 'target': [None, 3]}]))
    assert problem.target.lo[1] == -math.inf and problem.target.hi[1] == 3.0
    assert not problem.target.is_exact


def test_finite_domain_tables():
    problem = load_problem((EXAMPLES / 'three_points.json').read_text())
    assert isinstance(problem.domain, FiniteDomain) and problem.domain.space.coords is None
    table, target = tabulate(problem, default_settings())
    assert np.array_equal(table.F, [[1.0, 1.0, 1.0], [0.0, 0.5, 1.0]])
    assert np.array_equal(table.g, [0.0, 0.25, 1.0])
    assert list(target.lo) == [1.0, 0.5]


def test_finite_domain_errors():
    base = json.loads((EXAMPLES / 'three_points.json').read_text())
    bad_ids = json.loads(json.dumps(base))
    bad_ids['domain']['points'] = [{'id': 0}, {'id': 2}, {'id': 1}]
    assert _schema_error(json.dumps(bad_ids)).path == 'domain.points'
    bad_F = json.loads(json.dumps(base))
    bad_F['domain']['F'] = [[1, 1, 1]]
    assert _schema_error(json.dumps(bad_F)).path == 'domain.F'
    no_g = json.loads(json.dumps(base))
    del no_g['domain']['g']
    assert _schema_error(json.dumps(no_g)).path == 'objective'
    # expressions on a finite domain without coordinates
    expr = json.loads(json.dumps(base))
    expr['constraints'][1]['f'] = 'x'
    assert _schema_error(json.dumps(expr)).path == 'constraints.1.f'
    short = json.loads(json.dumps(base))
    short['constraints'][1]['f'] = [0.0, 1.0]
    assert _schema_error(json.dumps(short)).path == 'constraints.1.f'


def test_load_measure():
    pairs = load_measure('{"atoms": [{"coord": 0, "weight": 0.5}, {"id": 3, "weight": 1}]}')
    assert pairs == [(0.0, 0.5), (3, 1.0)]
    assert isinstance(pairs[1][0], int)
    e = _schema_error('{"atoms": [{"coord": 0, "id": 1, "weight": 1}]}', load_measure)
    assert e.path == 'atoms.0'
    e = _schema_error('{"atoms": [{"coord": 0, "weight": -1}]}', load_measure)
    assert e.path == 'atoms.0.weight'


def test_dump_json_full_precision():
    text = dump_json({'v': 0.1, 'inf': math.inf, 'nan': math.nan, 'ok': True, 'n': 3, 'xs': [1.5], 'e': []})
    assert '"v": 0.10000000000000001' in text
    assert '"inf": Infinity' in text and '"nan": NaN' in text
    assert '"ok": true' in text and '"n": 3' in text and '"e": []' in text
    assert json.loads(text.replace('Infinity', '1e999').replace('NaN', 'null'))['xs'] == [1.5]


def test_result_to_dict():
    problem = load_problem((EXAMPLES / 'markov.json').read_text())
    out = result_to_dict(moment_bound(problem, default_settings()))
    assert out['status'] == 'optimal'
    assert abs(out['value'] - 0.5) <= 1e-6
    assert [a['coord'] for a in out['measure']['atoms']] == [0.0, 2.0]
    assert out['measure']['f_independent']
    assert out['certificate']['accepted']
    assert out['extremality']['is_extreme']
    assert 'ray' not in out and 'phase1_residual' not in out
    json.loads(dump_json(out))


def test_certificate_to_dict_with_witness():
    table = MomentTable(np.ones((1, 2)))
    cert = certify_extreme(Measure(FiniteSpace(2), np.array([0.5, 0.5])), table, [1.0])
    out = certificate_to_dict(cert)
    assert not out['is_extreme'] and out['m'] == 2 and out['rank'] == 1
    assert out['cells'] == [[0], [1]]
    assert [a['id'] for a in out['witness']['nu_plus']['atoms']] == [0, 1]
    assert abs(out['witness']['nu_plus']['atoms'][0]['weight'] - 0.75) <= 1e-15
    assert certificate_to_dict(None) is None


def main() -> int:
    for name, fn in sorted(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
    print('Self-test ok: problem file checks pass')
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
