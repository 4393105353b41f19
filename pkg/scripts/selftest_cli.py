#!/usr/bin/env python3
"""Self-test for the command line: exit codes and output formats."""
from contextlib import redirect_stderr, redirect_stdout
from io import StringIO
from pathlib import Path
import json
import sys
import tempfile

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / 'src'))

import moment_bounds_cli as cli  # type: ignore
from moment_bounds import settings as settings_mod  # type: ignore

EXAMPLES = ROOT / 'data' / 'examples'


def _run(*argv):
    out, err = StringIO(), StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        try:
            code = cli.main([str(a) for a in argv])
        except SystemExit as e:
            code = e.code
    return code, out.getvalue(), err.getvalue()


def _write(tmp, name, doc):
    path = Path(tmp) / name
    path.write_text(json.dumps(doc))
    return path


def test_solve_markov_json():
    code, out, _ = _run('solve', EXAMPLES / 'markov.json', '--json')
    assert code == 0
    doc = json.loads(out)
    assert doc['status'] == 'optimal' and abs(doc['value'] - 0.5) <= 1e-6
    assert doc['certificate']['accepted']


def test_solve_text_output():
    code, out, _ = _run('solve', EXAMPLES / 'tail.json')
    assert code == 0
    assert 'status: optimal' in out and 'dual certificate: accepted' in out
    assert out.splitlines()[1].startswith('value: 0.2')


def test_solve_overrides():
    code, out, _ = _run('solve', EXAMPLES / 'markov.json', '--grid-step', '0.5', '--no-refine', '--json')
    assert code == 0
    doc = json.loads(out)
    assert doc['grid_size'] == 21 and not doc['refined']
    code, _, _ = _run('solve', EXAMPLES / 'die.json', '--grid-step', '0.5')
    assert code == 0


def test_solve_infeasible_and_unbounded():
    with tempfile.TemporaryDirectory() as tmp:
        infeasible = _write(tmp, 'infeasible.json', {
            'domain': {'type': 'interval', 'lo': 0, 'hi': 1},
            'constraints': [{'f': '1', 'target': [1, 1]}, {'f': 'x', 'target': [2, 2]}],
            'objective': 'x',
        })
        code, out, _ = _run('solve', infeasible)
        assert code == 2 and 'phase I residual' in out
        unbounded = _write(tmp, 'unbounded.json', {
            'domain': {'type': 'finite', 'points': [{'id': 0}, {'id': 1}]},
            'constraints': [{'f': [1, -1], 'target': [0, 0]}],
            'objective': [1, 0],
        })
        code, out, _ = _run('solve', unbounded, '--json')
        assert code == 3
        assert json.loads(out.replace('Infinity', '1e999'))['status'] == 'unbounded'


def test_certify_exit_codes():
    markov = EXAMPLES / 'markov.json'
    code, out, _ = _run('certify', markov, '--measure', EXAMPLES / 'two_point_measure.json')
    assert code == 0 and out.startswith('extreme')
    code, out, _ = _run('certify', markov, '--measure', EXAMPLES / 'spread_measure.json', '--json')
    assert code == 4
    doc = json.loads(out)
    assert not doc['is_extreme'] and doc['witness'] is not None
    with tempfile.TemporaryDirectory() as tmp:
        off = _write(tmp, 'off.json', {'atoms': [{'coord': 0, 'weight': 0.5}, {'coord': 3, 'weight': 0.5}]})
        code, out, _ = _run('certify', markov, '--measure', off)
        assert code == 5 and 'not in the moment set' in out


def test_certify_maps_ids_to_points():
    die = EXAMPLES / 'die.json'
    with tempfile.TemporaryDirectory() as tmp:
        by_id = _write(tmp, 'by_id.json', {'atoms': [{'id': 0, 'weight': 0.5}, {'id': 5, 'weight': 0.5}]})
        code, out, _ = _run('certify', die, '--measure', by_id)
        assert code == 0 and out.startswith('extreme')
        mixed = _write(tmp, 'mixed.json', {'atoms': [{'id': 0, 'weight': 0.5}, {'coord': 6, 'weight': 0.5}]})
        code, _, _ = _run('certify', die, '--measure', mixed)
        assert code == 0
        missing = _write(tmp, 'missing.json', {'atoms': [{'id': 6, 'weight': 1}]})
        code, _, err = _run('certify', die, '--measure', missing)
        assert code == 1 and 'atoms.0: no point with id 6' in err
        on_interval = _write(tmp, 'on_interval.json', {'atoms': [{'id': 1, 'weight': 1}]})
        code, _, err = _run('certify', EXAMPLES / 'markov.json', '--measure', on_interval)
        assert code == 1 and 'atoms.0: id atoms need a finite domain' in err
        no_coords = _write(tmp, 'no_coords.json', {'atoms': [{'coord': 1, 'weight': 1}]})
        code, _, err = _run('certify', EXAMPLES / 'three_points.json', '--measure', no_coords)
        assert code == 1 and 'coord atoms need a domain with coordinates' in err


def test_vertices():
    code, out, _ = _run('vertices', EXAMPLES / 'three_points.json')
    assert code == 0
    found = json.loads(out)
    assert [[a['id'] for a in v['atoms']] for v in found] == [[0, 2], [1]]
    assert all(abs(v['value'] - want) <= 1e-12 for v, want in zip(found, [0.5, 0.25]))
    code, _, err = _run('vertices', EXAMPLES / 'markov.json')
    assert code == 1 and 'finite domain' in err


def test_input_errors_exit_1():
    code, _, err = _run('solve', EXAMPLES / 'missing.json')
    assert code == 1 and err.startswith('Error:')
    with tempfile.TemporaryDirectory() as tmp:
        bad = _write(tmp, 'bad.json', {'domain': {'type': 'interval', 'lo': 0, 'hi': 1, 'grid_step': 0},
                                       'constraints': [{'f': '1', 'target': [1, 1]}], 'objective': 'x'})
        code, _, err = _run('solve', bad)
        assert code == 1 and 'domain.grid_step' in err
    code, _, err = _run('solve')
    assert code == 1 and 'Error:' in err
    code, _, _ = _run('frobnicate')
    assert code == 1


def test_settings_file_is_created():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / 'conf' / 'settings.json'
        try:
            code, _, _ = _run('solve', EXAMPLES / 'mean_box.json', '--settings', path)
        finally:
            settings_mod.SETTINGS_PATH = None
        assert code == 0
        saved = json.loads(path.read_text())
        assert saved['grid_divisions'] == 2000
        assert sorted(saved) == sorted([
            'tol', 'rank_tol', 'grid_divisions', 'enumeration_cap', 'max_sweeps', 'sweep_gain',
            'scan_points', 'golden_iterations', 'feas_tol', 'dual_tol',
        ])


def main() -> int:
    for name, fn in sorted(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
    print('Self-test ok: command line checks pass')
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
