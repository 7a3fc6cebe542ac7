"""LP-based branch and bound.

Depth-first search branching on the most-fractional discrete variable
(ties to the lowest index), exploring the down-branch first so feasible
points surface early. The search is anytime: node and wall-time limits
return the best incumbent found so far together with the tightest dual
bound still open. With node limits only, a solve is a pure function of
its inputs, which is what the deterministic test protocol relies on.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .model import (INTEGRALITY_TOL, MipInstance, ModelError, SolutionState,
                    check_feasibility, evaluate_objective)
from .simplex import LpStatus, solve_lp_raw


class MipStatus(Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"              # stopped at first feasible solution
    INFEASIBLE = "infeasible"
    LIMIT_WITH_SOLUTION = "limit_with_solution"
    LIMIT_NO_SOLUTION = "limit_no_solution"

    @property
    def has_solution(self) -> bool:
        return self in (MipStatus.OPTIMAL, MipStatus.FEASIBLE,
                        MipStatus.LIMIT_WITH_SOLUTION)


@dataclass
class SolveLimits:
    time_limit: Optional[float] = None
    node_limit: Optional[int] = None
    stop_at_first_feasible: bool = False
    incumbent_warm_start: Optional[SolutionState] = None


@dataclass
class MipResult:
    status: MipStatus
    best: Optional[SolutionState]
    dual_bound: float
    nodes_explored: int
    wall_time: float
    incumbent_history: list[tuple[int, float]] = field(default_factory=list)


def solve_mip(instance: MipInstance, limits: SolveLimits) -> MipResult:
    """Solve a MIP by LP-bounded depth-first branch and bound."""
    t0 = time.monotonic()
    cache = instance._cache()
    a, rel, rhs = cache["a"], cache["rel"], cache["rhs"]
    c = cache["c"]
    disc = cache["discrete"]
    const = instance.objective_constant

    incumbent: Optional[np.ndarray] = None
    inc_obj = math.inf
    history: list[tuple[int, float]] = []

    warm = limits.incumbent_warm_start
    if warm is not None and warm.values.shape == (instance.num_vars,):
        if check_feasibility(instance, warm.values).feasible:
            incumbent = np.asarray(warm.values, dtype=np.float64).copy()
            inc_obj = evaluate_objective(instance, incumbent)
            history.append((0, inc_obj))

    nodes = 0
    stopped_first_feasible = False
    limit_hit = False
    # node: (lower bounds, upper bounds, parent LP objective)
    stack: list[tuple[np.ndarray, np.ndarray, float]] = [
        (cache["lower"].copy(), cache["upper"].copy(), -math.inf)]

    if limits.stop_at_first_feasible and incumbent is not None:
        stack = []
        stopped_first_feasible = True

    while stack:
        if limits.node_limit is not None and nodes >= limits.node_limit:
            limit_hit = True
            break
        if limits.time_limit is not None and time.monotonic() - t0 > limits.time_limit:
            limit_hit = True
            break
        lo, hi, parent_bound = stack.pop()
        if parent_bound >= inc_obj - 1e-9:
            continue
        status, x, obj, _, _, _ = solve_lp_raw(a, rel, rhs, lo, hi, c)
        nodes += 1
        if status is LpStatus.INFEASIBLE:
            continue
        if status is LpStatus.UNBOUNDED:
            raise ModelError("LP relaxation is unbounded; the MIP is not well posed")
        if status is LpStatus.ITERATION_LIMIT:
            raise RuntimeError("simplex iteration limit hit inside branch and bound")
        obj_total = obj + const
        if obj_total >= inc_obj - 1e-9:
            continue
        frac = np.abs(x[disc] - np.round(x[disc])) if disc.size else np.zeros(0)
        fractional = np.nonzero(frac > INTEGRALITY_TOL)[0]
        if fractional.size == 0:
            vals = x.copy()
            if disc.size:
                vals[disc] = np.round(vals[disc])
            cand_obj = float(c @ vals + const)
            if cand_obj < inc_obj:
                incumbent = vals
                inc_obj = cand_obj
                history.append((nodes, cand_obj))
                if limits.stop_at_first_feasible:
                    stopped_first_feasible = True
                    break
            continue
        # branch on the most fractional variable, ties to the lowest index
        scores = np.abs(frac[fractional] - 0.5)
        pick = fractional[int(np.argmin(scores))]
        var = int(disc[pick])
        val = x[var]
        up_lo = lo.copy()
        up_lo[var] = math.ceil(val - INTEGRALITY_TOL)
        down_hi = hi.copy()
        down_hi[var] = math.floor(val + INTEGRALITY_TOL)
        if up_lo[var] <= hi[var]:
            stack.append((up_lo, hi, obj_total))
        if down_hi[var] >= lo[var]:
            stack.append((lo, down_hi, obj_total))

    wall = time.monotonic() - t0
    if stopped_first_feasible:
        status = MipStatus.FEASIBLE
        dual = min((entry[2] for entry in stack), default=inc_obj)
        dual = min(dual, inc_obj)
    elif not stack and not limit_hit:
        if incumbent is not None:
            status, dual = MipStatus.OPTIMAL, inc_obj
        else:
            status, dual = MipStatus.INFEASIBLE, math.inf
    else:
        dual = min((entry[2] for entry in stack), default=inc_obj)
        dual = min(dual, inc_obj)
        status = (MipStatus.LIMIT_WITH_SOLUTION if incumbent is not None
                  else MipStatus.LIMIT_NO_SOLUTION)
    best = SolutionState(incumbent, inc_obj) if incumbent is not None else None
    return MipResult(status, best, dual, nodes, wall, history)


def find_initial(instance: MipInstance, budget: Optional[float],
                 node_limit: Optional[int] = None) -> MipResult:
    """Find the starting solution by a budgeted exact solve.

    Easy instances solve to optimality inside the budget (the caller treats
    an OPTIMAL status as solved upfront); otherwise the best incumbent at
    the limit becomes the starting state. No incumbent within the budget
    means the caller has to abort.
    """
    if budget is not None and budget <= 0:
        raise ValueError("initial-solve budget must be positive")
    return solve_mip(instance, SolveLimits(time_limit=budget, node_limit=node_limit))
