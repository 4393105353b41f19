#!/usr/bin/env python3
"""Command line for moment problems: solve, certify, vertices.

Exit status:
  solve     0 optimal, 2 infeasible, 3 unbounded
  certify   0 extreme, 4 not extreme, 5 not in the moment set
  any       1 usage, file or input error
"""
from __future__ import annotations
import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

try:
    from dotenv import load_dotenv  # type: ignore
except Exception:
    load_dotenv = None  # optional dependency

from moment_bounds import settings as settings_mod
from moment_bounds.errors import MomentError, NotInMomentSetError
from moment_bounds.extremality import ExtremalityCertificate, certify_extreme, certify_in_box, enumerate_extreme
from moment_bounds.io import certificate_to_dict, dump_json, load_measure, load_problem, measure_to_dict, result_to_dict
from moment_bounds.measure import FiniteSpace, Measure
from moment_bounds.normalize import fmt17
from moment_bounds.problem import IntervalDomain, MomentProblem, Options
from moment_bounds.solver import BoundResult, atoms_table, moment_bound, tabulate


log = logging.getLogger("moment_bounds")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_UNBOUNDED = 3
EXIT_NOT_EXTREME = 4
EXIT_NOT_MEMBER = 5

SOLVE_EXIT = {"optimal": EXIT_OK, "infeasible": EXIT_INFEASIBLE, "unbounded": EXIT_UNBOUNDED}


class _ArgumentParser(argparse.ArgumentParser):
    # usage errors share exit status 1 with other input errors
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"Error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def load_env(dotenv_path: Optional[str]) -> None:
    if load_dotenv is None:
        return
    if dotenv_path is None:
        default_env = Path.cwd() / ".env"
        if default_env.exists():
            load_dotenv(default_env)  # type: ignore
        return
    p = Path(dotenv_path)
    if p.exists():
        load_dotenv(p)  # type: ignore


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--env-file", help="Path to .env file (optional)")
    common.add_argument("--settings", help="JSON settings file (created with defaults if missing)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="Increase verbosity (-v for INFO, -vv for DEBUG)")

    p = _ArgumentParser(description="Sharp moment bounds and extremality certificates")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    s = sub.add_parser("solve", parents=[common], help="Bound the objective over the moment set")
    s.add_argument("problem", help="Problem JSON file")
    s.add_argument("--grid-step", type=float, help="Grid step for interval domains (default (hi - lo)/grid_divisions)")
    s.add_argument("--no-refine", action="store_true", help="Skip continuous refinement of atom locations")
    s.add_argument("--tol", type=float, help="Feasibility tolerance (overrides the problem file)")
    fmt = s.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="output", action="store_const", const="json", help="JSON output")
    fmt.add_argument("--text", dest="output", action="store_const", const="text", help="Text output (default)")

    c = sub.add_parser("certify", parents=[common], help="Certify whether a measure is extreme")
    c.add_argument("problem", help="Problem JSON file")
    c.add_argument("--measure", required=True, help="Measure JSON file")
    cfmt = c.add_mutually_exclusive_group()
    cfmt.add_argument("--json", dest="output", action="store_const", const="json", help="JSON output")
    cfmt.add_argument("--text", dest="output", action="store_const", const="text", help="Text output (default)")

    v = sub.add_parser("vertices", parents=[common], help="List all extreme points (finite domains only)")
    v.add_argument("problem", help="Problem JSON file")

    args = p.parse_args(argv)
    if getattr(args, "output", None) is None:
        args.output = "text"
    return args


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _with_overrides(problem: MomentProblem, args: argparse.Namespace) -> MomentProblem:
    domain = problem.domain
    if args.grid_step is not None:
        if isinstance(domain, IntervalDomain):
            domain = IntervalDomain(domain.lo, domain.hi, args.grid_step)
        else:
            log.warning("--grid-step ignored for a finite domain")
    options = Options(
        refine=problem.options.refine and not args.no_refine,
        tol=args.tol if args.tol is not None else problem.options.tol,
    )
    return MomentProblem(domain, problem.constraints, problem.objective, problem.sense, options)


def _loc(v) -> str:
    return str(v) if isinstance(v, (int, np.integer)) else fmt17(v)


def format_result(result: BoundResult) -> str:
    lines = [f"status: {result.status}", f"value: {fmt17(result.value)}"]
    if result.lp_value is not None and result.refined:
        lines.append(f"grid value: {fmt17(result.lp_value)} ({result.grid_size} points)")
    if result.measure is not None:
        lines.append(f"atoms ({result.measure.size}):")
        lines += [f"  {_loc(a.location)}  weight {fmt17(a.weight)}" for a in result.measure.atoms]
    if result.dual is not None:
        lines.append("dual: " + " ".join(fmt17(y) for y in result.dual))
    if result.dual_report is not None:
        r = result.dual_report
        verdict = "accepted" if r.accepted else "rejected"
        lines.append(f"dual certificate: {verdict} (violation {r.max_violation:.3e} at {_loc(r.worst_point)}, gap {r.gap:.3e})")
    if result.ray is not None:
        lines.append("improving ray: " + ", ".join(f"{_loc(loc)}:{fmt17(d)}" for loc, d in result.ray))
    if result.phase1_residual is not None:
        lines.append("phase I residual: " + " ".join(fmt17(r) for r in result.phase1_residual))
    if result.extremality is not None:
        lines.append("extremality: " + _verdict(result.extremality))
    return "\n".join(lines)


def _verdict(cert: ExtremalityCertificate) -> str:
    word = "extreme" if cert.is_extreme else "not extreme"
    if cert.heuristic:
        word += " (box target, attained moments fixed)"
    return f"{word} (m={cert.m}, rank={cert.rank})"


def format_certificate(cert: ExtremalityCertificate) -> str:
    lines = [_verdict(cert), f"feasibility residual: {cert.feasibility_residual:.3e}"]
    if cert.partition is not None:
        for cell, vec in zip(cert.partition.cells, cert.moment_vectors):
            lines.append(f"  cell {cell.ids()}: " + " ".join(fmt17(v) for v in vec))
    if cert.witness is not None:
        lines.append("witness phi: " + " ".join(fmt17(p) for p in cert.witness.phi))
        for name, nu in (("nu+", cert.witness.nu_plus), ("nu-", cert.witness.nu_minus)):
            atoms = [f"{_loc(nu.space.location(i))}:{fmt17(w)}" for i, w in enumerate(nu.weights) if w != 0.0]
            lines.append(f"  {name}: " + ", ".join(atoms))
    return "\n".join(lines)


def cmd_solve(args: argparse.Namespace, cfg: dict) -> int:
    problem = _with_overrides(load_problem(_read(args.problem)), args)
    result = moment_bound(problem, cfg)
    print(dump_json(result_to_dict(result)) if args.output == "json" else format_result(result))
    return SOLVE_EXIT[result.status]


def _atoms_on(space: Optional[FiniteSpace], pairs) -> list:
    """Measure-file atoms as locations of the problem's points.

    ``space`` is None for interval domains. Ids index a finite domain's points
    and are mapped to their coordinates when the domain has them.
    """
    out = []
    for i, (loc, weight) in enumerate(pairs):
        if isinstance(loc, int):
            if space is None:
                raise MomentError(f"atoms.{i}: id atoms need a finite domain")
            if not 0 <= loc < space.n:
                raise MomentError(f"atoms.{i}: no point with id {loc}")
            loc = space.location(loc)
        elif space is not None and space.coords is None:
            raise MomentError(f"atoms.{i}: coord atoms need a domain with coordinates")
        out.append((loc, weight))
    return out


def certify_measure(problem: MomentProblem, pairs, cfg: dict) -> ExtremalityCertificate:
    if isinstance(problem.domain, IntervalDomain):
        pairs = _atoms_on(None, pairs)
        table = atoms_table(problem, sorted({loc for loc, _ in pairs}))
    else:
        table, _ = tabulate(problem, cfg)
        pairs = _atoms_on(table.space, pairs)
    mu = Measure.from_atoms(table.space, pairs)
    target = problem.target
    scale = max([1.0] + [abs(v) for v in target.lo + target.hi if math.isfinite(v)])
    tol = float(cfg["feas_tol"]) * scale
    if target.is_exact:
        return certify_extreme(mu, table, target.exact_vector(), tol, float(cfg["rank_tol"]))
    return certify_in_box(mu, table, target, tol, float(cfg["rank_tol"]))


def cmd_certify(args: argparse.Namespace, cfg: dict) -> int:
    problem = load_problem(_read(args.problem))
    pairs = load_measure(_read(args.measure))
    try:
        cert = certify_measure(problem, pairs, cfg)
    except NotInMomentSetError as e:
        print(f"not in the moment set: {e}")
        return EXIT_NOT_MEMBER
    print(dump_json(certificate_to_dict(cert)) if args.output == "json" else format_certificate(cert))
    return EXIT_OK if cert.is_extreme else EXIT_NOT_EXTREME


def cmd_vertices(args: argparse.Namespace, cfg: dict) -> int:
    problem = load_problem(_read(args.problem))
    if isinstance(problem.domain, IntervalDomain):
        raise MomentError("vertices needs a finite domain")
    table, target = tabulate(problem, cfg)
    found = enumerate_extreme(
        table,
        target.exact_vector(),
        tol=problem.options.tol,
        cap=int(cfg["enumeration_cap"]),
        rank_tol=float(cfg["rank_tol"]),
    )
    out = []
    for dm in found:
        ids = [table.space.index_of(loc) for loc in dm.locations]
        item = measure_to_dict(dm)
        item["value"] = math.fsum(w * table.g[i] for i, w in zip(ids, dm.weights))
        out.append(item)
    print(dump_json(out))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "certify": cmd_certify, "vertices": cmd_vertices}


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    load_env(args.env_file)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(message)s")

    try:
        if args.settings:
            settings_mod.init_settings(Path(args.settings))
        cfg = settings_mod.get_settings()
        return COMMANDS[args.command](args, cfg)
    except (MomentError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
