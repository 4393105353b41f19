"""
Generalized moment problems on finite spaces and real intervals.

This package provides building blocks for:
- Finite measures, truncations, atoms and atomic partitions
- Certifying (or refuting) extremality of a measure in a moment set
- Enumerating extreme points of small moment sets
- Sharp bounds on the integral of g under moment constraints, with dual certificates
- Reading problem and measure files and writing results

Public API:
- measure.FiniteSpace, measure.Measure, measure.DiscreteMeasure, measure.MomentTable
- measure.truncate, measure.integrate, measure.moment_vector, measure.is_atom,
  measure.atomic_partition, measure.atom_value, measure.dirac_representation, measure.is_zero_one
- extremality.certify_extreme, extremality.certify_in_box, extremality.perturbation_witness,
  extremality.enumerate_extreme, extremality.extreme_bound
- simplex.maximize
- solver.solve_lp, solver.moment_bound, solver.refine_atoms, solver.verify_dual,
  solver.build_grid, solver.tabulate
- expr.parse_expr, expr.eval_expr, expr.format_expr, expr.collect_breakpoints
- problem.MomentProblem, problem.MomentTarget
- io.load_problem, io.load_measure, io.result_to_dict, io.certificate_to_dict, io.dump_json
- settings.get_settings, settings.init_settings
"""

from . import errors, expr, extremality, io, measure, problem, settings, simplex, solver  # re-export modules

__all__ = [
    "errors",
    "expr",
    "extremality",
    "io",
    "measure",
    "problem",
    "settings",
    "simplex",
    "solver",
]
