"""Best-first branch-and-bound over the binary variables with LP relaxation bounds."""
from dataclasses import dataclass
from typing import List, Optional, Tuple
import heapq
import logging
import time

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .model import ModelInstance, complete_assignment
from .solution import Solution, SolveBudget, SolverStats, SolveStatus, with_solver_error_handling
from .verify import verify

logger = logging.getLogger(__name__)

INTEGRALITY_TOLERANCE = 1e-6
PRUNE_TOLERANCE = 1e-9


@dataclass
class _Relaxation:
    c: np.ndarray
    a_ub: Optional[sparse.csr_matrix]
    b_ub: Optional[np.ndarray]
    a_eq: Optional[sparse.csr_matrix]
    b_eq: Optional[np.ndarray]
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def of(cls, model: ModelInstance) -> "_Relaxation":
        a, lo, hi = model.matrix()
        eq = lo == hi
        below = ~eq & np.isfinite(hi)
        above = ~eq & np.isfinite(lo)
        a_ub = sparse.vstack([a[below], -a[above]]).tocsr() if (below.any() or above.any()) else None
        b_ub = np.concatenate([hi[below], -lo[above]]) if a_ub is not None else None
        a_eq = a[eq] if eq.any() else None
        b_eq = lo[eq] if eq.any() else None
        return cls(model.cost_vector, a_ub, b_ub, a_eq, b_eq, model.lower_bounds, model.upper_bounds)

    def solve(self, lower: np.ndarray, upper: np.ndarray):
        bounds = [(lo, None if np.isinf(hi) else hi) for lo, hi in zip(lower, upper)]
        return linprog(
            self.c, A_ub=self.a_ub, b_ub=self.b_ub, A_eq=self.a_eq, b_eq=self.b_eq,
            bounds=bounds, method="highs",
        )


def root_certificate(model: ModelInstance) -> Optional[str]:
    """Name a row that cannot be satisfied within the variable bounds, if any."""
    lower, upper = model.lower_bounds, model.upper_bounds
    for con in model.constraints:
        low_act, high_act = 0.0, 0.0
        for j, a in con.coefs.items():
            if a > 0:
                low_act += a * lower[j]
                high_act += a * upper[j]
            elif a < 0:
                low_act += a * upper[j]
                high_act += a * lower[j]
        if con.sense in ("<=", "=") and low_act > con.rhs + PRUNE_TOLERANCE:
            return f"{con.name}: minimum activity {low_act:.9g} exceeds {con.rhs:.9g}"
        if con.sense in (">=", "=") and high_act < con.rhs - PRUNE_TOLERANCE:
            return f"{con.name}: maximum activity {high_act:.9g} below {con.rhs:.9g}"
    return None


def _branch_variable(x: np.ndarray, binaries: np.ndarray) -> Optional[int]:
    frac = np.abs(x[binaries] - np.round(x[binaries]))
    if frac.size == 0 or frac.max() <= INTEGRALITY_TOLERANCE:
        return None
    # most fractional, lowest index on ties
    return int(binaries[int(np.argmax(frac))])


def _unfixed_branch_variable(
    x: np.ndarray, binaries: np.ndarray, fixings: Tuple[Tuple[int, float], ...]
) -> Optional[int]:
    """Most fractional binary not yet fixed at this node, lowest index on ties."""
    fixed = {j for j, _ in fixings}
    free = np.array([j for j in binaries if j not in fixed], dtype=int)
    if free.size == 0:
        return None
    frac = np.abs(x[free] - np.round(x[free]))
    return int(free[int(np.argmax(frac))])


def _integral_candidate(model: ModelInstance, x: np.ndarray, binaries: np.ndarray) -> Optional[Tuple[np.ndarray, float]]:
    values = np.array(x, dtype=float)
    values[binaries] = np.round(values[binaries])
    values = complete_assignment(model, values)
    report = verify(model, values)
    if not report.ok:
        logger.debug(f"Rounded relaxation rejected: {report.summary()}")
        return None
    return values, report.objective


@with_solver_error_handling
def solve_exact(
    model: ModelInstance,
    budget: Optional[SolveBudget] = None,
    warm_start: Optional[Solution] = None,
) -> Solution:
    """Solve ``model`` to optimality (within ``budget.gap``) by branch-and-bound.

    Nodes are explored best bound first, ties broken by depth (deeper first)
    and then creation order. An optional feasible ``warm_start`` seeds the
    incumbent.
    """
    budget = budget or SolveBudget()
    started = time.perf_counter()
    stats = SolverStats()

    certificate = root_certificate(model)
    if certificate:
        logger.info(f"Model infeasible at the root: {certificate}")
        return Solution.infeasible(model, stats, certificate)

    relaxation = _Relaxation.of(model)
    binaries = np.flatnonzero(model.binary_mask)
    incumbent: Optional[np.ndarray] = None
    best = np.inf
    if warm_start is not None and warm_start.values is not None:
        check = verify(model, warm_start.values)
        if check.ok:
            incumbent, best = np.array(warm_start.values, dtype=float), check.objective
            logger.debug(f"Warm start incumbent {best:.9g}")

    seq = 0
    heap: List[Tuple[float, int, int, Tuple[Tuple[int, float], ...]]] = [(-np.inf, 0, seq, ())]
    exhausted = False
    root_infeasible = False
    while heap:
        if budget.max_nodes is not None and stats.nodes >= budget.max_nodes:
            exhausted = True
            break
        if budget.max_wall_time is not None and time.perf_counter() - started > budget.max_wall_time:
            exhausted = True
            break
        bound, neg_depth, _, fixings = heapq.heappop(heap)
        if bound >= best - _slack(best, budget.gap):
            continue
        stats.nodes += 1
        lower, upper = relaxation.lower.copy(), relaxation.upper.copy()
        for j, value in fixings:
            lower[j] = upper[j] = value
        result = relaxation.solve(lower, upper)
        if result.status == 2:
            if not fixings:
                root_infeasible = True
            continue
        if result.status != 0:
            logger.warning(f"LP relaxation ended with status {result.status}: {result.message}")
            continue
        if result.fun >= best - _slack(best, budget.gap):
            continue
        j = _branch_variable(result.x, binaries)
        if j is None:
            candidate = _integral_candidate(model, result.x, binaries)
            if candidate is not None:
                if candidate[1] < best:
                    incumbent, best = candidate
                    logger.debug(f"New incumbent {best:.9g} at node {stats.nodes}")
                continue
            # rounding broke a row: keep splitting until every binary is fixed
            j = _unfixed_branch_variable(result.x, binaries, fixings)
            if j is None:
                continue
        for value in (0.0, 1.0):
            seq += 1
            heapq.heappush(heap, (result.fun, neg_depth - 1, seq, fixings + ((j, value),)))

    stats.wall_time = time.perf_counter() - started
    if incumbent is None:
        if exhausted:
            logger.info(f"Budget exhausted after {stats.nodes} nodes without an incumbent")
            return Solution(model=model, values=None, objective_value=float("inf"),
                            status=SolveStatus.BUDGET_EXHAUSTED, stats=stats)
        cert = "root relaxation infeasible" if root_infeasible else "search tree exhausted"
        logger.info(f"Model infeasible ({cert}) after {stats.nodes} nodes")
        return Solution.infeasible(model, stats, cert)
    status = SolveStatus.BUDGET_EXHAUSTED if exhausted else SolveStatus.OPTIMAL
    logger.info(f"Branch-and-bound {status.value}: objective {best:.9g}, {stats.nodes} nodes")
    return Solution(model=model, values=incumbent, objective_value=best, status=status, stats=stats)


def _slack(best: float, gap: float) -> float:
    if np.isinf(best):
        return 0.0
    return max(gap * abs(best), PRUNE_TOLERANCE)
