"""Dense two-phase primal simplex for  max c.z  s.t.  A z = b, z >= 0.

Dantzig pricing by default; after 3 * ncols consecutive degenerate pivots the
solver switches to Bland's rule for the rest of the solve.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import SolverStalledError


log = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
COST_TOL = 1e-10
DEGENERATE_STEP = 1e-12


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded
    z: Optional[np.ndarray] = None
    objective: float = math.nan
    # one dual per row of A
    y: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    basis: List[int] = field(default_factory=list)
    # improving direction over all columns when unbounded
    ray: Optional[np.ndarray] = None
    # b - A z at the end of phase I when infeasible
    phase1_residual: Optional[np.ndarray] = None
    iterations: int = 0
    bland: bool = False


class _Tableau:
    def __init__(self, T: np.ndarray, basis: List[int], max_iter: int):
        self.T = T
        self.basis = basis
        self.max_iter = max_iter
        self.iterations = 0
        self.degenerate_run = 0
        self.bland = False

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row, :] /= T[row, col]
        for r in range(T.shape[0]):
            if r != row and T[r, col] != 0.0:
                T[r, :] -= T[r, col] * T[row, :]
        self.basis[row] = col

    def entering(self, ncols: int) -> int:
        z = self.T[-1, :ncols]
        cands = np.flatnonzero(z < -COST_TOL)
        if not cands.size:
            return -1
        if self.bland:
            return int(cands[0])
        return int(cands[np.argmin(z[cands])])

    def leaving(self, col: int) -> int:
        T = self.T
        column = T[:-1, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if not rows.size:
            return -1
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + DEGENERATE_STEP * max(1.0, abs(best))]
        # smallest basic index among ties keeps Bland's rule finite
        return int(min(ties, key=lambda r: self.basis[r]))

    def run(self, ncols: int, phase: str) -> tuple:
        """Pivot to optimality over the first ncols columns."""
        while True:
            col = self.entering(ncols)
            if col == -1:
                return "optimal", -1
            row = self.leaving(col)
            if row == -1:
                return "unbounded", col
            if self.iterations >= self.max_iter:
                raise SolverStalledError(
                    "solver stalled",
                    {"phase": phase, "iterations": self.iterations, "bland": self.bland,
                     "objective": float(self.T[-1, -1])},
                )
            step = self.T[row, -1] / self.T[row, col]
            self.degenerate_run = self.degenerate_run + 1 if step <= DEGENERATE_STEP else 0
            if not self.bland and self.degenerate_run >= 3 * ncols:
                log.debug("%s: %d degenerate pivots, switching to Bland's rule", phase, self.degenerate_run)
                self.bland = True
            self.pivot(row, col)
            self.iterations += 1


def maximize(A, b, c, max_iter: Optional[int] = None, feas_tol: float = 1e-9) -> LPResult:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    R, N = A.shape
    if max_iter is None:
        max_iter = 50 * (R + N) + 1000

    # Phase I: artificial basis on rows scaled to b >= 0
    sign = np.where(b < 0, -1.0, 1.0)
    T = np.zeros((R + 1, N + R + 1))
    T[:R, :N] = A * sign[:, None]
    T[:R, N:N + R] = np.eye(R)
    T[:R, -1] = b * sign
    T[-1, :] = -T[:R, :].sum(axis=0)
    T[-1, N:N + R] = 0.0
    tab = _Tableau(T, list(range(N, N + R)), max_iter)
    tab.run(N + R, "phase I")
    infeasibility = -float(tab.T[-1, -1])
    log.debug("phase I done: infeasibility=%.3e after %d pivots", infeasibility, tab.iterations)
    if infeasibility > feas_tol:
        z = np.zeros(N + R)
        for r, bc in enumerate(tab.basis):
            z[bc] = tab.T[r, -1]
        residual = b - A @ z[:N]
        return LPResult("infeasible", phase1_residual=residual, iterations=tab.iterations, bland=tab.bland)

    # Drive artificials out of the basis; rows where that is impossible are redundant
    keep = []
    for r in range(R):
        if tab.basis[r] >= N:
            cols = np.flatnonzero(np.abs(tab.T[r, :N]) > PIVOT_TOL)
            if cols.size:
                tab.pivot(r, int(cols[0]))
            else:
                log.debug("row %d is redundant", r)
                continue
        keep.append(r)

    T2 = np.zeros((len(keep) + 1, N + 1))
    T2[:-1, :N] = tab.T[keep, :N]
    T2[:-1, -1] = tab.T[keep, -1]
    basis = [tab.basis[r] for r in keep]
    T2[-1, :N] = -c
    for r, bc in enumerate(basis):
        if c[bc] != 0.0:
            T2[-1, :] += c[bc] * T2[r, :]

    tab2 = _Tableau(T2, basis, max_iter)
    tab2.iterations = tab.iterations
    tab2.bland = tab.bland
    status, col = tab2.run(N, "phase II")

    z = np.zeros(N)
    for r, bc in enumerate(tab2.basis):
        z[bc] = max(tab2.T[r, -1], 0.0)

    if status == "unbounded":
        ray = np.zeros(N)
        ray[col] = 1.0
        for r, bc in enumerate(tab2.basis):
            ray[bc] = -tab2.T[r, col]
        log.debug("phase II unbounded along column %d", col)
        return LPResult("unbounded", z=z, objective=math.inf, basis=list(tab2.basis), ray=ray,
                        iterations=tab2.iterations, bland=tab2.bland)

    # min-norm solution of A_B^T y = c_B; prices every column like any other solution
    if tab2.basis:
        y = np.linalg.lstsq(A[:, tab2.basis].T, c[tab2.basis], rcond=None)[0]
    else:
        y = np.zeros(R)
    reduced = A.T @ y - c
    objective = math.fsum(c * z)
    log.debug("phase II optimal: objective=%.12g after %d pivots", objective, tab2.iterations)
    return LPResult("optimal", z=z, objective=objective, y=y, reduced_costs=reduced,
                    basis=list(tab2.basis), iterations=tab2.iterations, bland=tab2.bland)
