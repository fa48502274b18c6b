"""LP relaxation and best-bound-first branch-and-bound over binary variables."""

from __future__ import annotations

import heapq
import math
import time

import numpy as np

from . import _backend
from .model import (LpSolution, MilpModel, MipSolution, SolveLimits, SolverError, SolveStats,
                    SolveStatus, relative_gap)

INT_TOL = 1e-6
GAP_CLOSED = 1e-6

_LP_STATUS = {
    _backend.OPTIMAL: "Optimal",
    _backend.INFEASIBLE: "Infeasible",
    _backend.UNBOUNDED: "Unbounded",
    _backend.ITERATION_LIMIT: "IterationLimit",
}


def _lp(model: MilpModel, lb, ub):
    return _backend.lp_solve(model.c, model.A, model.sense, model.rhs, lb, ub)


def solve_lp(model: MilpModel, relax: bool = True) -> LpSolution:
    """Solve the continuous relaxation (integrality dropped, bounds kept).

    With ``relax=False`` the model must not contain integer variables.
    """
    if not relax and model.is_int.any():
        raise ValueError("model has integer variables; pass relax=True")
    status, x, obj, iters = _lp(model, model.lb, model.ub)
    if status == _backend.UNBOUNDED:
        raise SolverError("LP relaxation unbounded; every variable should be bounded")
    if status == _backend.ITERATION_LIMIT:
        raise SolverError("simplex iteration limit reached")
    if status == _backend.INFEASIBLE:
        return LpSolution("Infeasible", math.inf, None, iters)
    return LpSolution("Optimal", obj + model.obj_constant, x, iters)


def objective_step(model: MilpModel, max_multiplier: int = 120) -> float | None:
    """Granularity of attainable objective values, if one exists.

    When all costs sit on binary variables and are integer multiples of some
    ``g`` (possibly after scaling by a small integer, e.g. a 1/|scenarios|
    weight), any improving solution is at least ``g`` better than the
    incumbent, which lets the search prune nodes whose bound is within ``g``.
    """
    if (model.c[~model.is_int] != 0).any():
        return None
    nz = np.abs(model.c[model.is_int])
    nz = nz[nz > 0]
    if nz.size == 0:
        return None
    for mult in range(1, max_multiplier + 1):
        v = nz * mult
        r = np.round(v)
        if (np.abs(v - r) <= 1e-9 * np.maximum(1.0, v)).all() and r.max() < 2**53:
            g = 0
            for val in r.astype(np.int64):
                g = math.gcd(g, int(val))
            return g / mult
    return None


def _prunable(bound: float, incumbent: float, step: float | None) -> bool:
    if not math.isfinite(incumbent):
        return False
    if step is not None:
        return bound > incumbent - step + 1e-6 * step
    return bound >= incumbent - GAP_CLOSED * max(abs(incumbent), 1e-9)


def _branch_var(x: np.ndarray, int_idx: np.ndarray) -> int:
    """Binary with fractional part closest to 0.5; ties to the lowest index."""
    vals = x[int_idx]
    frac = vals - np.floor(vals)
    frac_mask = (frac > INT_TOL) & (frac < 1.0 - INT_TOL)
    if not frac_mask.any():
        return -1
    score = np.where(frac_mask, np.abs(frac - 0.5), np.inf)
    return int(int_idx[int(np.argmin(score))])


def solve_mip(model: MilpModel, limits: SolveLimits | None = None, rng=None) -> MipSolution:
    """Exact branch-and-bound on the LP relaxation.

    Nodes are explored best bound first; equal bounds go to the most recently
    created node.  The first child explored rounds the branching variable
    toward its incumbent value.  A known feasible ``model.start`` seeds the
    incumbent.  ``rng`` is accepted for interface symmetry with the experts;
    the search itself is deterministic and draws nothing.
    """
    limits = limits or SolveLimits()
    t0 = time.perf_counter()
    stats = SolveStats()
    int_idx = np.flatnonzero(model.is_int)
    step = objective_step(model)
    node_cap = limits.effective_node_limit

    inc_x, inc_obj = None, math.inf
    if model.start is not None and model.is_feasible(model.start):
        inc_x = np.asarray(model.start, dtype=float).copy()
        inc_obj = model.objective(inc_x)

    seq = 0
    heap = [(-math.inf, 0, model.lb.copy(), model.ub.copy())]
    hit_limit = False

    def gap_ok(bound):
        if inc_x is None:
            return False
        g = relative_gap(inc_obj, bound)
        if g <= GAP_CLOSED:
            return True
        return limits.gap_limit is not None and g <= limits.gap_limit

    while heap:
        if gap_ok(heap[0][0]):
            break
        if stats.nodes >= node_cap or (
                limits.time_limit is not None and time.perf_counter() - t0 >= limits.time_limit):
            hit_limit = True
            break
        bound, _, lb, ub = heapq.heappop(heap)
        if _prunable(bound, inc_obj, step):
            continue
        stats.nodes += 1
        status, x, obj, iters = _lp(model, lb, ub)
        stats.simplex_iterations += iters
        if status == _backend.INFEASIBLE:
            continue
        if status != _backend.OPTIMAL:
            raise SolverError(f"LP at node {stats.nodes} returned {_LP_STATUS[status]}")
        obj += model.obj_constant
        if _prunable(obj, inc_obj, step):
            continue
        j = _branch_var(x, int_idx)
        if j < 0:
            cand = x.copy()
            cand[int_idx] = np.round(cand[int_idx])
            if model.is_feasible(cand):
                cand_obj = model.objective(cand)
                if cand_obj < inc_obj:
                    inc_x, inc_obj = cand, cand_obj
                continue
            # Rounding within INT_TOL broke a row: branch on the largest residue instead.
            resid = np.abs(x[int_idx] - cand[int_idx])
            if not resid.any():
                continue
            j = int(int_idx[int(np.argmax(resid))])
        down_ub = ub.copy()
        down_ub[j] = math.floor(x[j])
        up_lb = lb.copy()
        up_lb[j] = math.ceil(x[j])
        down = (lb, down_ub)
        up = (up_lb, ub)
        first, second = (up, down) if inc_x is not None and inc_x[j] >= 0.5 else (down, up)
        # Heap key (bound, -seq): the child pushed last is popped first among equals.
        for child in (second, first):
            seq += 1
            heapq.heappush(heap, (obj, -seq, child[0], child[1]))

    stats.wall_time = time.perf_counter() - t0
    open_bounds = [b for b, _, _, _ in heap if not _prunable(b, inc_obj, step)]
    if inc_x is None:
        if hit_limit:
            raise SolverError("limits reached before any feasible solution was found")
        return MipSolution(SolveStatus.INFEASIBLE, math.inf, None, math.inf, math.inf, stats)
    if not open_bounds:
        return MipSolution(SolveStatus.OPTIMAL, inc_obj, inc_x, inc_obj, 0.0, stats)
    best_bound = min(min(open_bounds), inc_obj)
    gap = relative_gap(inc_obj, best_bound)
    status = SolveStatus.OPTIMAL if gap <= GAP_CLOSED else SolveStatus.FEASIBLE_WITHIN_LIMITS
    return MipSolution(status, inc_obj, inc_x, best_bound, gap, stats)
