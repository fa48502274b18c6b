"""Dedicated exact solver for the deterministic assignment model.

The generic LP branch-and-bound in ``solve.py`` is exact but slow to close
the gap on full sessions: its relaxation ignores that appointments do not
split.  ``solve_assignment`` runs the Lagrangian depth-first search of the
``_assign_*`` kernels instead, after reordering patients so that costly,
long appointments are decided first (this shrinks trees by orders of
magnitude).  Answers are the same optimal objective values; among several
optimal assignments the two methods may return different ones.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core import REJECT, CostParams, Patient
from . import _backend
from .model import SolveLimits, SolveStats, SolveStatus, relative_gap

# Kernel nodes are ~100x cheaper than LP nodes, so the default cap differs
# from ``SolveLimits.MAX_NODES``.
KERNEL_MAX_NODES = 500_000_000
# Upper bound on DP cells per physician table (memory guard for large T).
TABLE_CELLS = 4_000_000
# Multiplier search effort.  Thorough settings pay off on whole sessions,
# where a tighter bound saves millions of nodes; the many small scenario
# problems of the two-stage expert are cheaper with a coarse, short search.
THOROUGH = {"sc": 10, "sc_sg": 10, "max_sg_iter": 60}
QUICK = {"sc": 4, "sc_sg": 3, "max_sg_iter": 30}
WARM_SG_ITER = 10


@dataclass
class AssignResult:
    status: SolveStatus
    objective: float
    actions: list[int]          # per patient, input order; 0 rejects
    best_bound: float
    gap: float
    stats: SolveStats = field(default_factory=SolveStats)
    lam: np.ndarray | None = None  # multipliers in input order (warm starts)

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


def cost_step(values, max_multiplier: int = 120) -> float:
    """Largest ``g`` dividing every value exactly, or -1 if none is found."""
    v = np.abs(np.asarray(values, dtype=float))
    v = v[v > 0]
    if v.size == 0:
        return -1.0
    for mult in range(1, max_multiplier + 1):
        s = v * mult
        r = np.round(s)
        if (np.abs(s - r) <= 1e-9 * np.maximum(1.0, s)).all() and r.max() < 2**53:
            g = 0
            for x in r.astype(np.int64):
                g = math.gcd(g, int(x))
            return g / mult
    return -1.0


def instance_arrays(patients: Sequence[Patient], params: CostParams):
    """``(t, rc, pc, pref, elig)`` with physicians 0-based."""
    n, P = len(patients), params.P
    t = np.array([p.duration for p in patients], dtype=float)
    rc = np.array([params.rejection_cost(p.priority) for p in patients], dtype=float)
    pc = np.array([params.preference_cost(p.priority) for p in patients], dtype=float)
    pref = np.array([p.preferred - 1 for p in patients], dtype=np.int64)
    elig = np.zeros((n, P), dtype=np.int8)
    for k, p in enumerate(patients):
        for q in p.eligible:
            elig[k, q - 1] = 1
    return t, rc, pc, pref, elig


def search_order(t, rc) -> np.ndarray:
    """Expensive rejections first, then long appointments, then input index."""
    n = len(t)
    return np.lexsort((np.arange(n), -np.asarray(t), -np.asarray(rc)))


def _grid_scale(n, S, W, sc=10):
    while sc > 1 and n * (int(S.max(initial=0)) + 1) * (W.max(initial=0.0) * sc + 1) > TABLE_CELLS:
        sc //= 2
    return sc


class PreparedInstance:
    """Patient data sorted into search order, reusable across residuals."""

    def __init__(self, patients: Sequence[Patient], params: CostParams):
        self.n = len(patients)
        self.P = params.P
        t, rc, pc, pref, elig = instance_arrays(patients, params)
        self.order = search_order(t, rc)
        o = self.order
        self.t, self.rc, self.pc = t[o], rc[o], pc[o]
        self.pref, self.elig = pref[o], np.ascontiguousarray(elig[o])
        self.step = cost_step(np.concatenate([rc, pc]))

    def solve(self, residual, limits: SolveLimits | None = None, start=None, lam0=None,
              thorough: bool = True) -> AssignResult:
        limits = limits or SolveLimits()
        t0 = time.perf_counter()
        S = np.asarray(residual[0], dtype=np.int64)
        W = np.asarray(residual[1], dtype=float)
        if self.n == 0:
            return AssignResult(SolveStatus.OPTIMAL, 0.0, [], 0.0, 0.0, SolveStats(), np.zeros(0))
        o = self.order
        kw = dict(
            node_limit=KERNEL_MAX_NODES if limits.node_limit is None else int(limits.node_limit),
            time_limit=-1.0 if limits.time_limit is None else float(limits.time_limit),
            gap_limit=-1.0 if limits.gap_limit is None else float(limits.gap_limit),
            step=self.step, **(THOROUGH if thorough else QUICK),
        )
        kw["sc"] = _grid_scale(self.n, S, W, kw["sc"])
        if start is not None:
            st = np.asarray([0 if a == REJECT else a for a in start], dtype=np.int64)
            kw["start"] = st[o]
        if lam0 is not None:
            kw["lam0"] = np.asarray(lam0, dtype=float)[o]
            kw["max_sg_iter"] = min(kw["max_sg_iter"], WARM_SG_ITER)
        status, ub, act, bound, nodes, _, lam = _backend.assign_solve(
            self.t, self.rc, self.pc, self.pref, self.elig, S, W, **kw)
        actions = [0] * self.n
        lam_in = np.empty(self.n)
        for j, k in enumerate(o):
            actions[k] = int(act[j])
            lam_in[k] = lam[j]
        stats = SolveStats(wall_time=time.perf_counter() - t0, nodes=int(nodes))
        st = SolveStatus.OPTIMAL if status == 0 else SolveStatus.FEASIBLE_WITHIN_LIMITS
        return AssignResult(st, float(ub), actions, float(bound), relative_gap(ub, bound), stats,
                            lam_in)


def solve_assignment(patients: Sequence[Patient], residual, params: CostParams,
                     limits: SolveLimits | None = None, start=None, thorough: bool = True
                     ) -> AssignResult:
    """Optimal accept/assign/reject decisions for ``patients`` under ``residual``.

    ``residual`` is ``(slots_left, minutes_left)`` per physician or ``None``
    for a fresh session.  ``start`` is an optional feasible action list used
    as an initial incumbent.  ``thorough=False`` trades bound quality for
    speed, which suits many small instances.
    """
    from .ppa import _residual

    return PreparedInstance(patients, params).solve(_residual(residual, params), limits, start,
                                                   thorough=thorough)


__all__ = ["AssignResult", "PreparedInstance", "solve_assignment", "cost_step",
           "instance_arrays", "search_order", "KERNEL_MAX_NODES"]
