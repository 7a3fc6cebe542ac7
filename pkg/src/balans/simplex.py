"""Dense bounded-variable primal simplex for LP relaxations.

Two-phase method with artificial variables for rows the slack crash basis
cannot absorb. Nonbasic variables rest at a finite bound (or zero when free),
the ratio test handles bound flips, and entering-variable selection switches
from Dantzig to Bland's rule after a run of degenerate pivots, which keeps
the method deterministic and cycle-free. Dense tableau arithmetic is fine at
the instance sizes this package targets; the hot loop is JIT-compiled with
numba when available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .model import MipInstance

PIVOT_TOL = 1e-9
DUAL_TOL = 1e-7
FEAS_TOL = 1e-7
BLAND_AFTER = 64
DEFAULT_ITERATION_LIMIT = 50_000

_INF = float("inf")


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    values: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0
    # diagnostics over the solved (free-variable) system, for basis checks
    reduced_costs: Optional[np.ndarray] = field(default=None, repr=False)
    column_state: Optional[np.ndarray] = field(default=None, repr=False)


def _pivot_loop(T, xB, basis, where, lo, hi, cost, max_iter):
    """Run primal pivots in place until optimal/unbounded/limit.

    where codes: 0 at-lower, 1 at-upper, 2 basic, 3 free-at-zero.
    Returns (status, iterations, reduced_costs); status 0 optimal,
    2 unbounded, 3 iteration limit.
    """
    m, nt = T.shape
    d = cost.copy()
    for i in range(m):
        cb = cost[basis[i]]
        if cb != 0.0:
            for j in range(nt):
                d[j] -= cb * T[i, j]
    degen = 0
    iters = 0
    while iters < max_iter:
        iters += 1
        bland = degen >= BLAND_AFTER
        q = -1
        best = DUAL_TOL
        for j in range(nt):
            wj = where[j]
            if wj == 2 or lo[j] == hi[j]:
                continue
            dj = d[j]
            if wj == 0:
                score = -dj
            elif wj == 1:
                score = dj
            else:
                score = abs(dj)
            if score > best:
                q = j
                if bland:
                    break
                best = score
        if q == -1:
            return 0, iters, d
        if where[q] == 0:
            direction = 1.0
        elif where[q] == 1:
            direction = -1.0
        else:
            direction = 1.0 if d[q] < 0.0 else -1.0
        # ratio test: entering moves by t, basic rows move by -direction*T[:,q]*t
        t_best = hi[q] - lo[q]
        r = -1
        for i in range(m):
            w = direction * T[i, q]
            bi = basis[i]
            if w > PIVOT_TOL:
                b = lo[bi]
                if b != -_INF:
                    ti = (xB[i] - b) / w
                    if ti < t_best - 1e-9 or (ti < t_best + 1e-9 and r >= 0 and bi < basis[r]):
                        t_best = ti
                        r = i
            elif w < -PIVOT_TOL:
                b = hi[bi]
                if b != _INF:
                    ti = (xB[i] - b) / w
                    if ti < t_best - 1e-9 or (ti < t_best + 1e-9 and r >= 0 and bi < basis[r]):
                        t_best = ti
                        r = i
        if t_best == _INF:
            return 2, iters, d
        if t_best < 0.0:
            t_best = 0.0
        degen = degen + 1 if t_best <= 1e-12 else 0
        if r < 0:
            # entering variable runs to its other bound
            for i in range(m):
                xB[i] -= direction * t_best * T[i, q]
            where[q] = 1 - where[q]
            continue
        if where[q] == 0:
            enter_val = lo[q] + direction * t_best
        elif where[q] == 1:
            enter_val = hi[q] + direction * t_best
        else:
            enter_val = direction * t_best
        leave = basis[r]
        where[leave] = 0 if direction * T[r, q] > 0.0 else 1
        for i in range(m):
            xB[i] -= direction * t_best * T[i, q]
        xB[r] = enter_val
        piv = T[r, q]
        inv = 1.0 / piv
        for j in range(nt):
            T[r, j] *= inv
        for i in range(m):
            if i != r:
                f = T[i, q]
                if f != 0.0:
                    for j in range(nt):
                        T[i, j] -= f * T[r, j]
        dq = d[q]
        if dq != 0.0:
            for j in range(nt):
                d[j] -= dq * T[r, j]
        basis[r] = q
        where[q] = 2
    return 3, iters, d


try:  # pragma: no cover - exercised implicitly by every LP solve
    from numba import njit

    _pivot_loop = njit(cache=True)(_pivot_loop)
except ImportError:  # pragma: no cover
    pass


def solve_lp_raw(a, rel, rhs, lo, hi, c, iteration_limit=DEFAULT_ITERATION_LIMIT):
    """Solve min c.x s.t. rows (a, rel, rhs) and bounds lo <= x <= hi.

    rel codes rows as 0 <=, 1 >=, 2 ==. Fixed variables (lo == hi) and rows
    left without free support are eliminated before pivoting. Returns
    (status, x, objective, iterations, reduced_costs_full, column_state_full).
    """
    m, n = a.shape if a.size else (len(rel), len(lo))
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if np.any(lo > hi):
        return LpStatus.INFEASIBLE, None, None, 0, None, None

    free = np.nonzero(lo != hi)[0]
    fixed = np.nonzero(lo == hi)[0]
    x_out = np.zeros(n, dtype=np.float64)
    x_out[fixed] = lo[fixed]
    fixed_obj = float(c[fixed] @ lo[fixed]) if fixed.size else 0.0

    if m:
        rhs_eff = rhs - (a[:, fixed] @ lo[fixed] if fixed.size else 0.0)
        a_f = a[:, free]
        live = np.abs(a_f).max(axis=1) > PIVOT_TOL if free.size else np.zeros(m, dtype=bool)
        for i in np.nonzero(~live)[0]:
            resid = rhs_eff[i]
            if (rel[i] == 0 and resid < -FEAS_TOL) or \
               (rel[i] == 1 and resid > FEAS_TOL) or \
               (rel[i] == 2 and abs(resid) > FEAS_TOL):
                return LpStatus.INFEASIBLE, None, None, 0, None, None
        a_f = a_f[live]
        rel_f = rel[live]
        rhs_f = rhs_eff[live]
    else:
        a_f = np.zeros((0, free.size))
        rel_f = np.zeros(0, dtype=np.int8)
        rhs_f = np.zeros(0)

    nf = free.size
    mf = a_f.shape[0]
    if nf == 0:
        return LpStatus.OPTIMAL, x_out, fixed_obj, 0, np.zeros(n), np.zeros(n, dtype=np.int8)

    lo_f = lo[free].copy()
    hi_f = hi[free].copy()
    c_f = c[free].copy()

    # initial nonbasic point: finite lower, else finite upper, else zero (free)
    where0 = np.zeros(nf, dtype=np.int8)
    x0 = lo_f.copy()
    no_lower = lo_f == -_INF
    x0[no_lower] = hi_f[no_lower]
    where0[no_lower] = 1
    both_inf = no_lower & (hi_f == _INF)
    x0[both_inf] = 0.0
    where0[both_inf] = 3

    if mf:
        resid = rhs_f - a_f @ x0
        slack_ok = np.empty(mf, dtype=bool)
        for i in range(mf):
            if rel_f[i] == 0:
                slack_ok[i] = resid[i] >= 0.0
            elif rel_f[i] == 1:
                slack_ok[i] = resid[i] <= 0.0
            else:
                slack_ok[i] = abs(resid[i]) <= 1e-12
        art_rows = np.nonzero(~slack_ok)[0]
        na = art_rows.size
        nt = nf + mf + na
        T = np.zeros((mf, nt), dtype=np.float64)
        beta = np.ones(mf, dtype=np.float64)
        beta[art_rows] = np.sign(resid[art_rows])
        beta[beta == 0.0] = 1.0
        T[:, :nf] = a_f * beta[:, None]
        T[np.arange(mf), nf + np.arange(mf)] = beta  # slack columns
        slo = np.zeros(mf)
        shi = np.zeros(mf)
        slo[rel_f == 0] = 0.0
        shi[rel_f == 0] = _INF
        slo[rel_f == 1] = -_INF
        shi[rel_f == 1] = 0.0
        # EQ rows keep slack pinned at [0, 0]
        lo_all = np.concatenate([lo_f, slo, np.zeros(na)])
        hi_all = np.concatenate([hi_f, shi, np.full(na, _INF)])
        where = np.concatenate([
            where0,
            np.where(rel_f == 1, 1, 0).astype(np.int8),  # slack at its zero bound
            np.zeros(na, dtype=np.int8),
        ])
        basis = np.empty(mf, dtype=np.int64)
        xB = np.empty(mf, dtype=np.float64)
        art_col = {int(row): nf + mf + k for k, row in enumerate(art_rows)}
        for i in range(mf):
            if slack_ok[i]:
                basis[i] = nf + i
                xB[i] = resid[i]
            else:
                col = art_col[i]
                T[i, col] = 1.0  # beta already matches the artificial's sign
                basis[i] = col
                xB[i] = abs(resid[i])
        where[basis] = 2
        iters_total = 0
        if na:
            cost1 = np.zeros(nt)
            cost1[nf + mf:] = 1.0
            status, it1, _ = _pivot_loop(T, xB, basis, where, lo_all, hi_all,
                                         cost1, iteration_limit)
            iters_total += it1
            if status == 3:
                return LpStatus.ITERATION_LIMIT, None, None, iters_total, None, None
            infeas = sum(xB[i] for i in range(mf) if basis[i] >= nf + mf)
            if infeas > FEAS_TOL:
                return LpStatus.INFEASIBLE, None, None, iters_total, None, None
            hi_all[nf + mf:] = 0.0  # pin artificials for phase 2
        cost2 = np.zeros(nt)
        cost2[:nf] = c_f
        status, it2, d = _pivot_loop(T, xB, basis, where, lo_all, hi_all,
                                     cost2, iteration_limit - iters_total)
        iters_total += it2
        if status == 3:
            return LpStatus.ITERATION_LIMIT, None, None, iters_total, None, None
        if status == 2:
            return LpStatus.UNBOUNDED, None, None, iters_total, None, None
        x_free = np.empty(nf)
        for j in range(nf):
            if where[j] == 0:
                x_free[j] = lo_f[j]
            elif where[j] == 1:
                x_free[j] = hi_f[j]
            else:
                x_free[j] = 0.0
        for i in range(mf):
            if basis[i] < nf:
                x_free[basis[i]] = xB[i]
        d_free = d[:nf]
        w_free = where[:nf]
    else:
        # pure bound optimization, no live rows
        x_free = np.where(c_f > 0, lo_f, np.where(c_f < 0, hi_f, x0))
        unb = ((c_f < -DUAL_TOL) & (hi_f == _INF)) | ((c_f > DUAL_TOL) & (lo_f == -_INF))
        if unb.any():
            return LpStatus.UNBOUNDED, None, None, 0, None, None
        x_free[~np.isfinite(x_free)] = 0.0
        d_free = c_f.copy()
        w_free = np.where(c_f > 0, 0, np.where(c_f < 0, 1, where0)).astype(np.int8)
        iters_total = 0

    x_out[free] = x_free
    objective = fixed_obj + float(c_f @ x_free)
    d_full = np.zeros(n)
    d_full[free] = d_free
    w_full = np.zeros(n, dtype=np.int8)
    w_full[free] = w_free
    return LpStatus.OPTIMAL, x_out, objective, iters_total, d_full, w_full


def solve_lp(instance: MipInstance,
             iteration_limit: int = DEFAULT_ITERATION_LIMIT) -> LpResult:
    """Solve the LP relaxation of a MIP instance."""
    cache = instance._cache()
    status, x, obj, iters, d, w = solve_lp_raw(
        cache["a"], cache["rel"], cache["rhs"],
        cache["lower"], cache["upper"], cache["c"],
        iteration_limit=iteration_limit,
    )
    if status is LpStatus.OPTIMAL:
        return LpResult(status, x, obj + instance.objective_constant, iters, d, w)
    return LpResult(status, iterations=iters)
