"""Physician-to-patient assignment MDP: states, transitions, costs.

Physicians are numbered ``1..P`` everywhere in the public API; action ``0``
rejects the current patient and action ``p`` assigns them to physician ``p``.
Arrays indexed by physician use position ``p - 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

REJECT = 0


class InfeasibleActionError(ValueError):
    """Raised when an action violates eligibility or capacity."""

    def __init__(self, message: str, epoch: int | None = None, violated: str | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.violated = violated


@dataclass(frozen=True)
class Patient:
    id: int
    duration: float
    priority: int
    preferred: int
    eligible: tuple[int, ...]
    arrival_score: float

    def __post_init__(self):
        if not self.eligible:
            raise ValueError(f"patient {self.id}: empty eligible set")
        if self.preferred not in self.eligible:
            raise ValueError(f"patient {self.id}: preferred {self.preferred} not eligible")
        if not self.duration > 0:
            raise ValueError(f"patient {self.id}: duration must be positive")
        if self.priority not in (1, 2):
            raise ValueError(f"patient {self.id}: priority must be 1 or 2")
        if not 0.0 <= self.arrival_score <= 1.0:
            raise ValueError(f"patient {self.id}: arrival_score outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "duration": self.duration,
            "priority": self.priority,
            "preferred": self.preferred,
            "eligible": list(self.eligible),
            "arrival_score": self.arrival_score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Patient":
        return cls(
            id=int(d["id"]),
            duration=float(d["duration"]),
            priority=int(d["priority"]),
            preferred=int(d["preferred"]),
            eligible=tuple(int(p) for p in d["eligible"]),
            arrival_score=float(d["arrival_score"]),
        )


@dataclass(frozen=True)
class CostParams:
    """Penalties and physician capacities.

    ``c_rej[r - 1]`` is the rejection penalty for priority ``r``; the
    non-preferred assignment penalty is ``pref_ratio * c_rej[r - 1]``.
    """

    c_rej: tuple[float, float] = (200.0, 50.0)
    pref_ratio: float = 0.1
    T: float = 110.0
    L: tuple[int, ...] = (7, 7, 7, 7)

    def __post_init__(self):
        object.__setattr__(self, "c_rej", tuple(float(c) for c in self.c_rej))
        object.__setattr__(self, "L", tuple(int(x) for x in self.L))
        if len(self.c_rej) != 2 or not self.c_rej[0] > self.c_rej[1] > 0:
            raise ValueError("need c_rej[1] > c_rej[2] > 0")
        if not 0 < self.pref_ratio < 1:
            raise ValueError("pref_ratio must lie in (0, 1)")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.L or min(self.L) < 1:
            raise ValueError("every L_p must be >= 1")

    @property
    def P(self) -> int:
        return len(self.L)

    @property
    def c_pref(self) -> tuple[float, float]:
        return (self.pref_ratio * self.c_rej[0], self.pref_ratio * self.c_rej[1])

    def rejection_cost(self, priority: int) -> float:
        return self.c_rej[priority - 1]

    def preference_cost(self, priority: int) -> float:
        return self.pref_ratio * self.c_rej[priority - 1]


@dataclass(frozen=True)
class PhysicianState:
    is_preferred: bool
    slots_left: int
    priority1_count: int
    workload: float


@dataclass(frozen=True)
class SystemState:
    epoch: int
    patient: Patient
    physicians: tuple[PhysicianState, ...]
    eligibility: tuple[bool, ...]

    @property
    def P(self) -> int:
        return len(self.physicians)

    @classmethod
    def initial(cls, patient: Patient, params: CostParams) -> "SystemState":
        return cls.from_resources(
            0, patient, slots_left=params.L, priority1_count=[0] * params.P,
            workload=[0.0] * params.P,
        )

    @classmethod
    def from_resources(cls, epoch, patient, slots_left, priority1_count, workload):
        P = len(slots_left)
        phys = tuple(
            PhysicianState(
                is_preferred=(p + 1 == patient.preferred),
                slots_left=int(slots_left[p]),
                priority1_count=int(priority1_count[p]),
                workload=float(workload[p]),
            )
            for p in range(P)
        )
        elig = tuple((p + 1) in patient.eligible for p in range(P))
        return cls(epoch=epoch, patient=patient, physicians=phys, eligibility=elig)

    def residual(self, params: CostParams) -> tuple[np.ndarray, np.ndarray]:
        """Remaining (slots, minutes) per physician."""
        slots = np.array([ph.slots_left for ph in self.physicians], dtype=np.int64)
        work_left = np.array([params.T - ph.workload for ph in self.physicians], dtype=float)
        return slots, work_left


def can_assign(state: SystemState, p: int, params: CostParams) -> str | None:
    """Return the name of the violated condition, or None if ``p`` is feasible."""
    if not 1 <= p <= state.P:
        return "physician index"
    if not state.eligibility[p - 1]:
        return "eligibility"
    ph = state.physicians[p - 1]
    if ph.slots_left < 1:
        return "slots"
    # Same expression as the residual capacity handed to the optimisation models.
    if state.patient.duration > params.T - ph.workload:
        return "workload"
    return None


def feasible_actions(state: SystemState, params: CostParams) -> list[int]:
    """Sorted feasible actions; rejection (0) is always included."""
    return [REJECT] + [p for p in range(1, state.P + 1) if can_assign(state, p, params) is None]


def feasible_mask(state: SystemState, params: CostParams) -> np.ndarray:
    mask = np.zeros(state.P + 1, dtype=bool)
    mask[feasible_actions(state, params)] = True
    return mask


def step_cost(state: SystemState, action: int, params: CostParams) -> float:
    r = state.patient.priority
    if action == REJECT:
        return params.rejection_cost(r)
    if not 1 <= action <= state.P:
        raise ValueError(f"action {action} outside 0..{state.P}")
    if action == state.patient.preferred:
        return 0.0
    return params.preference_cost(r)


def transition(state: SystemState, action: int, next_patient: Patient | None,
               params: CostParams) -> SystemState:
    """Apply ``action`` and move to the next arrival.

    ``next_patient=None`` produces a terminal snapshot that keeps the current
    patient (used after the last arrival of a session).
    """
    if action != REJECT:
        why = can_assign(state, action, params)
        if why is not None:
            raise InfeasibleActionError(
                f"action {action} infeasible at epoch {state.epoch}: {why} violated",
                epoch=state.epoch, violated=why,
            )
    slots = [ph.slots_left for ph in state.physicians]
    p1 = [ph.priority1_count for ph in state.physicians]
    work = [ph.workload for ph in state.physicians]
    if action != REJECT:
        i = action - 1
        slots[i] -= 1
        p1[i] += int(state.patient.priority == 1)
        work[i] += state.patient.duration
    patient = next_patient if next_patient is not None else state.patient
    return SystemState.from_resources(state.epoch + 1, patient, slots, p1, work)


@dataclass(frozen=True)
class EpisodeRealization:
    patients: tuple[Patient, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "patients", tuple(self.patients))
        if not self.patients:
            raise ValueError("an episode needs at least one patient")
        scores = [p.arrival_score for p in self.patients]
        if any(b < a for a, b in zip(scores, scores[1:])):
            raise ValueError("patients must be sorted by arrival_score")

    def __len__(self) -> int:
        return len(self.patients)

    @property
    def P(self) -> int:
        return max(max(p.eligible) for p in self.patients)

    def to_jsonl(self, P: int | None = None) -> str:
        header = {"seed": self.seed, "K_total": len(self.patients), "P": P or self.P}
        lines = [json.dumps(header)] + [json.dumps(p.to_dict()) for p in self.patients]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "EpisodeRealization":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty episode file")
        header, body = rows[0], rows[1:]
        if int(header["K_total"]) != len(body):
            raise ValueError(f"header says {header['K_total']} patients, found {len(body)}")
        return cls(patients=tuple(Patient.from_dict(r) for r in body), seed=int(header["seed"]))


@dataclass
class EpisodeMetrics:
    """Per-episode cost breakdown: total cost, rejections by priority, undesirable assignments."""

    cost: float = 0.0
    p1_rejected: int = 0
    p2_rejected: int = 0
    undesirable: int = 0
    actions: list[int] = field(default_factory=list)

    def record(self, patient: Patient, action: int, cost: float) -> None:
        self.cost += cost
        self.actions.append(action)
        if action == REJECT:
            if patient.priority == 1:
                self.p1_rejected += 1
            else:
                self.p2_rejected += 1
        elif action != patient.preferred:
            self.undesirable += 1


Policy = Callable[[SystemState, int], int]


def simulate(realization: EpisodeRealization, params: CostParams, policy: Policy) -> EpisodeMetrics:
    """Run ``policy(state, k)`` through one session and collect costs."""
    patients = realization.patients
    state = SystemState.initial(patients[0], params)
    out = EpisodeMetrics()
    for k, patient in enumerate(patients):
        action = int(policy(state, k))
        out.record(patient, action, step_cost(state, action, params))
        nxt = patients[k + 1] if k + 1 < len(patients) else None
        state = transition(state, action, nxt, params)
    return out


def rollout_cost(realization: EpisodeRealization, actions: Sequence[int],
                 params: CostParams) -> tuple[float, EpisodeMetrics]:
    if len(actions) != len(realization):
        raise ValueError(f"{len(actions)} actions for {len(realization)} patients")
    out = simulate(realization, params, lambda state, k: actions[k])
    return out.cost, out


def states_along(realization: EpisodeRealization, actions: Iterable[int],
                 params: CostParams) -> list[SystemState]:
    """States visited when executing ``actions`` (one per epoch)."""
    patients = realization.patients
    state = SystemState.initial(patients[0], params)
    seen = []
    for k, a in enumerate(actions):
        seen.append(state)
        nxt = patients[k + 1] if k + 1 < len(patients) else None
        state = transition(state, a, nxt, params)
    return seen


def with_patient(state: SystemState, patient: Patient) -> SystemState:
    """Same resources, different current patient (eligibility recomputed)."""
    return SystemState.from_resources(
        state.epoch, patient,
        [ph.slots_left for ph in state.physicians],
        [ph.priority1_count for ph in state.physicians],
        [ph.workload for ph in state.physicians],
    )


__all__ = [
    "REJECT", "InfeasibleActionError", "Patient", "CostParams", "PhysicianState",
    "SystemState", "EpisodeRealization", "EpisodeMetrics", "can_assign",
    "feasible_actions", "feasible_mask", "step_cost", "transition", "simulate",
    "rollout_cost", "states_along", "with_patient",
]
