"""Assignment models for the booking problem, plus exact oracles.

``build_ppa_model`` is the deterministic offline model over a list of
patients; ``build_sppa_model`` is the two-stage extensive form in which the
first patient's decision is shared by every scenario.  The preferred
physician carries a zero cost coefficient so model objectives coincide with
simulated episode costs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core import REJECT, CostParams, Patient
from .model import EQ, LE, MilpModel, MipSolution, SolveLimits, SolverError, SolveStats, SolveStatus
from .assign import PreparedInstance, solve_assignment
from .solve import solve_mip


def full_residual(params: CostParams) -> tuple[np.ndarray, np.ndarray]:
    return np.array(params.L, dtype=np.int64), np.full(params.P, float(params.T))


def _residual(residual, params):
    if residual is None:
        return full_residual(params)
    slots, work = residual
    slots = np.asarray(slots, dtype=np.int64)
    work = np.asarray(work, dtype=float)
    if slots.shape != (params.P,) or work.shape != (params.P,):
        raise ValueError(f"residual capacities must have length {params.P}")
    if (slots < 0).any() or (work < 0).any():
        raise ValueError("residual capacities must be non-negative")
    return slots, work


def _patient_cost(patient: Patient, action: int, params: CostParams) -> float:
    if action == REJECT:
        return params.rejection_cost(patient.priority)
    return 0.0 if action == patient.preferred else params.preference_cost(patient.priority)


class _Layout:
    """Accumulates variables and dense rows for the assignment models."""

    def __init__(self, P: int):
        self.P = P
        self.names: list[str] = []
        self.keys: list[tuple] = []
        self.cost: list[float] = []
        self.rows: list[tuple[list[int], list[float], int, float, str]] = []

    def var(self, key: tuple, cost: float) -> int:
        kind, k, *rest = key
        w = key[-1]
        suffix = "" if w is None else f"_w{w}"
        name = f"a{k}_{rest[0]}{suffix}" if kind == "a" else f"u{k}{suffix}"
        self.names.append(name)
        self.keys.append(key)
        self.cost.append(cost)
        return len(self.names) - 1

    def patient(self, patient: Patient, k: int, w, params: CostParams, weight: float = 1.0):
        idx = []
        for p in patient.eligible:
            idx.append(self.var(("a", k, p, w), weight * _patient_cost(patient, p, params)))
        u = self.var(("u", k, w), weight * params.rejection_cost(patient.priority))
        tag = "" if w is None else f"_w{w}"
        self.rows.append((idx + [u], [1.0] * (len(idx) + 1), EQ, 1.0, f"assign{k}{tag}"))
        return dict(zip(patient.eligible, idx)), u

    def capacity(self, by_phys, durations, slots, work, w):
        tag = "" if w is None else f"_w{w}"
        for p in range(1, self.P + 1):
            cols = [j for j, _ in by_phys[p]]
            self.rows.append((cols, [1.0] * len(cols), LE, float(slots[p - 1]), f"slots{p}{tag}"))
        for p in range(1, self.P + 1):
            cols = [j for j, _ in by_phys[p]]
            durs = [d for _, d in by_phys[p]]
            self.rows.append((cols, durs, LE, float(work[p - 1]), f"work{p}{tag}"))

    def build(self, start: np.ndarray) -> MilpModel:
        n, m = len(self.names), len(self.rows)
        A = np.zeros((m, n))
        for i, (cols, vals, _, _, _) in enumerate(self.rows):
            A[i, cols] = vals
        return MilpModel(
            names=self.names, is_int=np.ones(n, dtype=bool), lb=np.zeros(n), ub=np.ones(n),
            c=np.array(self.cost), A=A, sense=[r[2] for r in self.rows],
            rhs=[r[3] for r in self.rows], row_names=[r[4] for r in self.rows],
            keys=self.keys, start=start,
        )


def _all_reject(keys) -> np.ndarray:
    return np.array([1.0 if key[0] == "u" else 0.0 for key in keys])


def build_ppa_model(patients: Sequence[Patient], residual, params: CostParams) -> MilpModel:
    """Deterministic assignment model over ``patients`` (index ``k`` = position)."""
    if len(patients) == 0:
        raise ValueError("need at least one patient")
    slots, work = _residual(residual, params)
    lay = _Layout(params.P)
    by_phys = {p: [] for p in range(1, params.P + 1)}
    for k, pat in enumerate(patients):
        if not pat.eligible:
            raise ValueError(f"patient {pat.id} has an empty eligible set")
        avars, _ = lay.patient(pat, k, None, params)
        for p, j in avars.items():
            by_phys[p].append((j, pat.duration))
    lay.capacity(by_phys, None, slots, work, None)
    return lay.build(_all_reject(lay.keys))


def build_sppa_model(first: Patient, scenarios, residual, params: CostParams) -> MilpModel:
    """Two-stage extensive form with one shared copy of the first decision.

    Sharing the first-stage variables across scenarios is the same as adding
    equality rows between per-scenario copies.  Scenario patients are indexed
    ``k = 1..`` within each scenario ``w``.
    """
    scen_list = list(getattr(scenarios, "scenarios", scenarios))
    if not scen_list:
        raise ValueError("need at least one scenario")
    slots, work = _residual(residual, params)
    weight = 1.0 / len(scen_list)
    lay = _Layout(params.P)
    first_vars, _ = lay.patient(first, 0, None, params)
    for w, scen in enumerate(scen_list):
        by_phys = {p: [(first_vars[p], first.duration)] if p in first_vars else []
                   for p in range(1, params.P + 1)}
        for k, pat in enumerate(scen, start=1):
            avars, _ = lay.patient(pat, k, w, params, weight)
            for p, j in avars.items():
                by_phys[p].append((j, pat.duration))
        lay.capacity(by_phys, None, slots, work, w)
    return lay.build(_all_reject(lay.keys))


def actions_from_solution(model: MilpModel, x, scenario=None) -> dict[int, int]:
    """Map patient index -> action (0 = reject) for one scenario block.

    For the two-stage model the shared first patient (``k = 0``) is always
    included.
    """
    out: dict[int, int] = {}
    for j, key in enumerate(model.keys):
        w = key[-1]
        if w is not None and w != scenario:
            continue
        if key[0] == "u":
            out.setdefault(key[1], REJECT)
        elif x[j] > 0.5:
            out[key[1]] = key[2]
    return out


def first_action(model: MilpModel, x) -> int:
    return actions_from_solution(model, x)[0]


def solve_ppa(patients: Sequence[Patient], residual, params: CostParams,
              limits: SolveLimits | None = None, method: str = "assign"
              ) -> tuple[MipSolution, list[int]]:
    """Solve the deterministic model; returns the solution and per-patient actions.

    ``method="assign"`` uses the dedicated assignment search, ``"lp"`` the
    generic LP branch-and-bound.  Both are exact; ``x`` always refers to the
    variables of ``build_ppa_model(patients, ...)``.
    """
    model = build_ppa_model(patients, residual, params)
    if method == "lp":
        sol = solve_mip(model, limits)
        acts = actions_from_solution(model, sol.x)
        return sol, [acts[k] for k in range(len(patients))]
    if method != "assign":
        raise ValueError(f"unknown method {method!r}")
    res = solve_assignment(patients, residual, params, limits)
    x = np.zeros(model.n_vars)
    for j, key in enumerate(model.keys):
        a = res.actions[key[1]]
        if (key[0] == "u" and a == REJECT) or (key[0] == "a" and key[2] == a):
            x[j] = 1.0
    sol = MipSolution(res.status, res.objective, x, res.best_bound, res.gap, res.stats)
    return sol, list(res.actions)


def _apply(slots, work, patient: Patient, action: int):
    slots, work = slots.copy(), work.copy()
    if action != REJECT:
        slots[action - 1] -= 1
        work[action - 1] -= patient.duration
    return slots, work


def first_stage_candidates(first: Patient, residual, params: CostParams) -> list[int]:
    """Feasible assignments in increasing physician order, then rejection."""
    slots, work = _residual(residual, params)
    cand = [p for p in first.eligible if slots[p - 1] >= 1 and first.duration <= work[p - 1]]
    return sorted(cand) + [REJECT]


@dataclass
class EnumerationResult:
    action: int
    value: float
    values: dict[int, float]
    stats: SolveStats
    exact: bool
    max_gap: float = 0.0
    n_sub_solves: int = 0
    statuses: list[SolveStatus] = field(default_factory=list)


def _select(cands, values, tie_tol):
    """First candidate in ``cands`` order unless a later one is clearly cheaper."""
    live = [a for a in cands if a in values]
    best = live[0]
    for a in live[1:]:
        if values[a] < values[best] - tie_tol * max(1.0, abs(values[best])):
            best = a
    return best


def solve_sppa_by_enumeration(first: Patient, scenarios, residual, params: CostParams,
                              limits: SolveLimits | None = None, tie_tol: float = 1e-9,
                              method: str = "assign") -> EnumerationResult:
    """Exact two-stage solve by enumerating the first decision.

    Scenarios interact only through the first patient's action, so for each
    feasible candidate the scenario problems separate.  The value of a
    candidate is its immediate cost plus the average scenario optimum.

    With ``method="assign"`` rejection is evaluated first: it leaves the most
    capacity, so its scenario bounds are lower bounds for every other
    candidate, and a candidate is dropped as soon as its partial value can no
    longer reach the best one.  Dropped candidates are absent from ``values``.
    """
    scen_list = list(getattr(scenarios, "scenarios", scenarios))
    if not scen_list:
        raise ValueError("need at least one scenario")
    if method not in ("assign", "lp"):
        raise ValueError(f"unknown method {method!r}")
    slots, work = _residual(residual, params)
    limits = limits or SolveLimits()
    cands = first_stage_candidates(first, (slots, work), params)
    busy = [s for s in scen_list if len(s)]
    N = len(scen_list)
    sub_limits = limits.scaled(1.0 / max(1, len(cands) * len(busy)))

    stats = SolveStats()
    values: dict[int, float] = {}
    acc = {"exact": True, "max_gap": 0.0, "n": 0}
    statuses: list[SolveStatus] = []

    def record(sol):
        acc["n"] += 1
        statuses.append(sol.status)
        stats.nodes += sol.stats.nodes
        stats.simplex_iterations += sol.stats.simplex_iterations
        stats.wall_time += sol.stats.wall_time
        acc["max_gap"] = max(acc["max_gap"], sol.gap)
        acc["exact"] &= sol.optimal

    if method == "lp":
        for a in cands:
            s2, w2 = _apply(slots, work, first, a)
            total = 0.0
            for scen in busy:
                sol = solve_mip(build_ppa_model(scen, (s2, w2), params), sub_limits)
                record(sol)
                total += sol.objective
            values[a] = _patient_cost(first, a, params) + total / N
    else:
        preps = [PreparedInstance(scen, params) for scen in busy]
        base = []
        for prep in preps:
            sol = prep.solve((slots, work), sub_limits, thorough=False)
            record(sol)
            base.append(sol)
        values[REJECT] = _patient_cost(first, REJECT, params) + sum(b.objective for b in base) / N
        best_val = values[REJECT]
        lbs = [b.best_bound for b in base]
        assigns = sorted((a for a in cands if a != REJECT),
                         key=lambda a: (_patient_cost(first, a, params), a))
        for a in assigns:
            s2, w2 = _apply(slots, work, first, a)
            imm = _patient_cost(first, a, params)
            done, rest = 0.0, sum(lbs)
            pruned = False
            for prep, b, lb in zip(preps, base, lbs):
                lower = imm + (done + rest) / N
                if lower - tie_tol * max(1.0, abs(lower)) > best_val:
                    pruned = True
                    break
                sol = prep.solve((s2, w2), sub_limits, start=b.actions, lam0=b.lam,
                                 thorough=False)
                record(sol)
                done += sol.objective
                rest -= lb
            if not pruned:
                values[a] = imm + done / N
                best_val = min(best_val, values[a])

    best = _select(cands, values, tie_tol)
    return EnumerationResult(best, values[best], values, stats, acc["exact"], acc["max_gap"],
                             acc["n"], statuses)


@dataclass
class BruteForceResult:
    objective: float
    actions: list[int]
    n_enumerated: int


def brute_force_assign(patients: Sequence[Patient], residual, params: CostParams,
                       size_cap: int = 10**6) -> BruteForceResult:
    """Exhaustive search over every accept/assign/reject vector.

    Vectors are visited in lexicographic order and the first minimiser wins.
    """
    K = len(patients)
    slots, work = _residual(residual, params)
    if (params.P + 1) ** K > size_cap:
        raise ValueError(f"(P+1)^K = {(params.P + 1) ** K} exceeds size cap {size_cap}")
    if K == 0:
        return BruteForceResult(0.0, [], 1)
    choices = [[REJECT] + sorted(p.eligible) for p in patients]
    grid = np.array(list(itertools.product(*choices)), dtype=np.int64).reshape(-1, K)
    cost = np.zeros(len(grid))
    for k, pat in enumerate(patients):
        table = np.array([_patient_cost(pat, a, params) for a in range(params.P + 1)])
        cost += table[grid[:, k]]
    feasible = np.ones(len(grid), dtype=bool)
    for p in range(1, params.P + 1):
        hit = grid == p
        count = hit.sum(axis=1)
        load = np.zeros(len(grid))
        for k, pat in enumerate(patients):
            load += np.where(hit[:, k], pat.duration, 0.0)
        feasible &= (count <= slots[p - 1]) & (load <= work[p - 1])
    cost = np.where(feasible, cost, np.inf)
    best = int(np.argmin(cost))
    return BruteForceResult(float(cost[best]), [int(a) for a in grid[best]], len(grid))


def brute_force_solve(instance, residual=None, params: CostParams | None = None,
                      size_cap: int = 10**6) -> MipSolution:
    """Exhaustive oracle over a patient list or a small all-binary model."""
    if isinstance(instance, MilpModel):
        return _brute_force_model(instance, size_cap)
    if params is None:
        raise ValueError("params required for a patient-list instance")
    res = brute_force_assign(instance, residual, params, size_cap)
    stats = SolveStats(nodes=res.n_enumerated)
    if not instance:
        return MipSolution(SolveStatus.OPTIMAL, 0.0, np.zeros(0), 0.0, 0.0, stats)
    model = build_ppa_model(instance, residual, params)
    x = np.zeros(model.n_vars)
    for j, key in enumerate(model.keys):
        a = res.actions[key[1]]
        if (key[0] == "u" and a == REJECT) or (key[0] == "a" and key[2] == a):
            x[j] = 1.0
    return MipSolution(SolveStatus.OPTIMAL, res.objective, x, res.objective, 0.0, stats)


def _brute_force_model(model: MilpModel, size_cap: int) -> MipSolution:
    if not model.is_int.all():
        raise ValueError("model enumeration needs an all-binary model")
    n = model.n_vars
    if 2 ** n > size_cap:
        raise ValueError(f"2^{n} exceeds size cap {size_cap}")
    best_x, best = None, math.inf
    for bits in itertools.product((0.0, 1.0), repeat=n):
        x = np.array(bits)
        if not model.is_feasible(x):
            continue
        obj = model.objective(x)
        if obj < best:
            best, best_x = obj, x
    stats = SolveStats(nodes=2 ** n)
    if best_x is None:
        return MipSolution(SolveStatus.INFEASIBLE, math.inf, None, math.inf, math.inf, stats)
    return MipSolution(SolveStatus.OPTIMAL, best, best_x, best, 0.0, stats)


__all__ = [
    "build_ppa_model", "build_sppa_model", "actions_from_solution", "first_action", "solve_ppa",
    "solve_sppa_by_enumeration", "first_stage_candidates", "EnumerationResult",
    "brute_force_assign", "brute_force_solve", "BruteForceResult", "full_residual",
    "SolverError",
]
