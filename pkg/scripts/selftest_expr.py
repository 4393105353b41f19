#!/usr/bin/env python3
"""Self-test for the expression parser, printer, evaluator and breakpoint scan."""
from pathlib import Path
import sys

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / 'src'))

from moment_bounds.errors import EvaluationFault, ExprSyntaxError  # type: ignore
from moment_bounds.expr import (  # type: ignore
    BinOp,
    Call,
    Compare,
    Neg,
    Num,
    Pow,
    Var,
    affine_form,
    collect_breakpoints,
    eval_expr,
    format_expr,
    parse_expr,
)


def _raises(exc, fn, *args):
    try:
        fn(*args)
    except exc as e:
        return e
    raise AssertionError(f'{exc.__name__} not raised')


def test_examples():
    assert eval_expr(parse_expr('x^2 - 2*x + 1'), 3) == 4.0
    ind = parse_expr('(x >= 2)')
    assert isinstance(ind, Compare)
    assert eval_expr(ind, 2) == 1.0
    assert eval_expr(parse_expr('min(1, x/2)'), 3) == 1.0
    assert eval_expr(parse_expr('abs(x)'), -2) == 2.0
    assert eval_expr(parse_expr('(x < 0)'), 0) == 0.0
    assert eval_expr(parse_expr('max(x, 0, -x)'), -4) == 4.0
    assert eval_expr(parse_expr('exp(0) + sqrt(x) + log(x)'), 1) == 2.0


def test_precedence():
    e = parse_expr('1 + 2 * x ^ 2')
    assert e == BinOp('+', Num(1.0), BinOp('*', Num(2.0), Pow(Var(), 2)))
    assert eval_expr(parse_expr('-x^2'), 3) == 9.0
    assert eval_expr(parse_expr('-(x^2)'), 3) == -9.0
    assert eval_expr(parse_expr('x - 1 - 1'), 0) == -2.0
    assert eval_expr(parse_expr('x^-1'), 4) == 0.25
    assert eval_expr(parse_expr('  ( x>=1 )+( x<= -1 ) '), -1) == 1.0


def test_syntax_errors_carry_offsets():
    e = _raises(ExprSyntaxError, parse_expr, 'x +')
    assert e.offset == 3
    e = _raises(ExprSyntaxError, parse_expr, 'foo(x)')
    assert e.offset == 0 and 'unknown identifier' in str(e)
    e = _raises(ExprSyntaxError, parse_expr, 'x^2.5')
    assert e.offset == 2 and 'non-integer exponent' in str(e)
    e = _raises(ExprSyntaxError, parse_expr, 'x $ 1')
    assert e.offset == 2
    e = _raises(ExprSyntaxError, parse_expr, 'abs(x, 1)')
    assert e.offset == 0
    _raises(ExprSyntaxError, parse_expr, '(x >= 1')
    _raises(ExprSyntaxError, parse_expr, '')


def test_evaluation_faults():
    e = _raises(EvaluationFault, eval_expr, parse_expr('log(x)'), 0)
    assert e.x == 0.0 and 'evaluation fault' in str(e)
    _raises(EvaluationFault, eval_expr, parse_expr('1/x'), 0)
    _raises(EvaluationFault, eval_expr, parse_expr('sqrt(x)'), -1)
    _raises(EvaluationFault, eval_expr, parse_expr('x^-2'), 0)
    _raises(EvaluationFault, eval_expr, parse_expr('exp(x)'), 1000)


def test_polynomials_are_total():
    rng = np.random.default_rng(1)
    for _ in range(50):
        coeffs = rng.integers(-5, 6, size=5)
        text = ' + '.join(f'{int(a)}*x^{p}' for p, a in enumerate(coeffs))
        e = parse_expr(text)
        for x in rng.uniform(-1e3, 1e3, size=20):
            v = eval_expr(e, x)
            assert np.isfinite(v)


def _random_expr(rng, depth):
    if depth == 0 or rng.uniform() < 0.25:
        return Var() if rng.uniform() < 0.6 else Num(float(rng.choice([0.0, 0.5, 1.0, 2.0, 3.25, 1e-05, 1e+16])))
    kind = rng.integers(0, 5)
    if kind == 0:
        return Neg(_random_expr(rng, depth - 1))
    if kind == 1:
        return BinOp(str(rng.choice(['+', '-', '*', '/'])), _random_expr(rng, depth - 1), _random_expr(rng, depth - 1))
    if kind == 2:
        return Pow(_random_expr(rng, depth - 1), int(rng.integers(-3, 4)))
    if kind == 3:
        name = str(rng.choice(['abs', 'exp', 'log', 'sqrt', 'min', 'max']))
        count = int(rng.integers(1, 4)) if name in ('min', 'max') else 1
        return Call(name, tuple(_random_expr(rng, depth - 1) for _ in range(count)))
    return Compare(str(rng.choice(['<', '<=', '>', '>='])), _random_expr(rng, depth - 1), _random_expr(rng, depth - 1))


def test_print_parse_round_trip():
    rng = np.random.default_rng(2024)
    for _ in range(300):
        e = _random_expr(rng, 4)
        assert parse_expr(format_expr(e)) == e, format_expr(e)


def test_breakpoint_examples():
    assert collect_breakpoints(parse_expr('(x >= 2)')).points == (2.0,)
    scan = collect_breakpoints(parse_expr('(abs(x) >= 2)'))
    assert scan.points == () and scan.warning
    assert collect_breakpoints(parse_expr('(2*x + 1 >= 3)')).points == (1.0,)
    assert collect_breakpoints(parse_expr('(3 <= x)')).points == (3.0,)
    assert collect_breakpoints(parse_expr('(x/4 - 1 < 0)')).points == (4.0,)
    assert affine_form(parse_expr('2*(x - 1) + 3')) == (2.0, 1.0)
    assert affine_form(parse_expr('x*x')) is None


def test_breakpoint_completeness():
    e = parse_expr('(3*x - 1 < 2) + (x >= -0.5) + 2*(0.5*x + 1 > 2)')
    points = collect_breakpoints(e).points
    assert points == (-0.5, 1.0, 2.0)
    xs = np.linspace(-3, 3, 6001)
    vals = np.array([eval_expr(e, x) for x in xs])
    # every jump between neighbouring samples brackets a reported breakpoint
    for i in np.flatnonzero(np.diff(vals) != 0):
        assert any(xs[i] <= p <= xs[i + 1] for p in points), (xs[i], xs[i + 1])


def main() -> int:
    for name, fn in sorted(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
    print('Self-test ok: expression checks pass')
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
