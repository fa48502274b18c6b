"""Experts that label booking states with target actions.

Every expert maps a state (plus what it is allowed to know about the rest of
the session) to an :class:`ExpertLabel`.  Optimisation-based experts build
assignment problems over the current patient followed by a future arrival
sequence:

* deterministic: one sampled continuation;
* full information: the realised continuation;
* two-stage: the current decision is shared by several sampled continuations;
* aggregated deterministic: one deterministic solve per sampled continuation,
  summarised as an action frequency vector.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import REJECT, CostParams, EpisodeRealization, Patient, SystemState, can_assign
from .generator import GenConfig, sample_future_scenarios
from .milp.assign import solve_assignment
from .milp.model import SolveLimits
from .milp.ppa import solve_sppa_by_enumeration
from .rng import RngStream

EXPERT_KINDS = ("myopic", "deterministic", "full_information", "two_stage", "aggregated")


@dataclass(frozen=True)
class EpisodeContext:
    """What an expert may know beyond the state itself.

    ``realized_future`` (the actual remaining arrivals) is reserved for the
    full-information expert; the sampling experts refuse a context that
    carries it.
    """

    epoch: int
    current_score: float
    residual: tuple[tuple[int, ...], tuple[float, ...]]
    gen_config: GenConfig | None = None
    realized_future: tuple[Patient, ...] | None = None

    def __post_init__(self):
        slots, work = self.residual
        object.__setattr__(self, "residual", (tuple(int(s) for s in slots),
                                              tuple(float(w) for w in work)))
        if self.realized_future is not None:
            object.__setattr__(self, "realized_future", tuple(self.realized_future))
        elif self.gen_config is None:
            raise ValueError("a sampling context needs gen_config")

    @classmethod
    def sampling(cls, state: SystemState, params: CostParams, gen: GenConfig) -> "EpisodeContext":
        slots, work = state.residual(params)
        return cls(state.epoch, state.patient.arrival_score, (slots, work), gen_config=gen)

    @classmethod
    def hindsight(cls, state: SystemState, params: CostParams,
                  future: Sequence[Patient]) -> "EpisodeContext":
        slots, work = state.residual(params)
        return cls(state.epoch, state.patient.arrival_score, (slots, work),
                   realized_future=tuple(future))

    @property
    def has_future(self) -> bool:
        return self.realized_future is not None

    def residual_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.residual[0], dtype=np.int64), np.array(self.residual[1])


@dataclass
class ExpertCallStats:
    wall_time: float = 0.0
    gap: float = 0.0
    n_sub_solves: int = 0
    reached_limit: bool = False

    def merge(self, other: "ExpertCallStats") -> None:
        self.wall_time += other.wall_time
        self.gap = max(self.gap, other.gap)
        self.n_sub_solves += other.n_sub_solves
        self.reached_limit |= other.reached_limit


@dataclass
class ExpertLabel:
    """Hard label (one action) or soft label (frequencies over ``0..P``)."""

    kind: str
    action: int
    freq: np.ndarray | None = None
    stats: ExpertCallStats = field(default_factory=ExpertCallStats)

    def __post_init__(self):
        if self.kind not in ("hard", "soft"):
            raise ValueError(f"unknown label kind {self.kind!r}")
        if self.kind == "soft":
            f = np.asarray(self.freq, dtype=float)
            if f.ndim != 1 or (f < 0).any() or abs(f.sum() - 1.0) > 1e-9:
                raise ValueError("soft label must be a probability vector")
            self.freq = f

    @classmethod
    def hard(cls, action: int, stats: ExpertCallStats | None = None) -> "ExpertLabel":
        return cls("hard", int(action), None, stats or ExpertCallStats())

    @classmethod
    def soft(cls, freq, stats: ExpertCallStats | None = None) -> "ExpertLabel":
        freq = np.asarray(freq, dtype=float)
        # argmax keeps the first maximum, i.e. ties go to the lowest action.
        return cls("soft", int(np.argmax(freq)), freq, stats or ExpertCallStats())

    def target(self, P: int) -> np.ndarray:
        """Training target over actions ``0..P``."""
        if self.kind == "soft":
            if self.freq.shape != (P + 1,):
                raise ValueError(f"soft label has {self.freq.shape[0]} entries, expected {P + 1}")
            return self.freq.copy()
        out = np.zeros(P + 1)
        out[self.action] = 1.0
        return out


def aggregate_frequency(actions: Sequence[int], P: int) -> np.ndarray:
    """Share of each action ``0..P`` among ``actions``."""
    acts = np.asarray(list(actions), dtype=np.int64)
    if acts.size == 0:
        raise ValueError("cannot aggregate an empty action list")
    if acts.min() < 0 or acts.max() > P:
        raise ValueError(f"actions must lie in 0..{P}")
    return np.bincount(acts, minlength=P + 1) / acts.size


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def myopic_action(state: SystemState, params: CostParams, rng=None) -> ExpertLabel:
    """Preferred physician if possible, else a random feasible eligible one."""
    t0 = time.perf_counter()
    pref = state.patient.preferred
    if can_assign(state, pref, params) is None:
        action = pref
    else:
        others = [p for p in range(1, state.P + 1) if can_assign(state, p, params) is None]
        if len(others) == 0:
            action = REJECT
        elif len(others) == 1:
            action = others[0]
        else:
            action = others[int(_generator(rng).integers(len(others)))]
    return ExpertLabel.hard(action, ExpertCallStats(wall_time=time.perf_counter() - t0))


def _solve_first(state: SystemState, future: Sequence[Patient], residual, params: CostParams,
                 limits: SolveLimits | None, thorough: bool):
    res = solve_assignment([state.patient, *future], residual, params, limits, thorough=thorough)
    stats = ExpertCallStats(res.stats.wall_time, res.gap, 1, not res.optimal)
    return res.actions[0], stats


def deterministic_action(state: SystemState, context: EpisodeContext, params: CostParams,
                         limits: SolveLimits | None = None, rng=None) -> ExpertLabel:
    """Optimal current action against one sampled continuation."""
    if context.has_future:
        raise ValueError("the deterministic expert must not see the realised future")
    t0 = time.perf_counter()
    scen = sample_future_scenarios(context, 1, rng, context.gen_config).scenarios[0]
    action, stats = _solve_first(state, scen, context.residual_arrays(), params, limits, False)
    stats.wall_time = time.perf_counter() - t0
    return ExpertLabel.hard(action, stats)


@dataclass
class HindsightLabels:
    actions: list[int]
    objective: float
    optimal: bool
    stats: ExpertCallStats

    @property
    def approximate(self) -> bool:
        return not self.optimal


def full_information_labels(realization: EpisodeRealization, params: CostParams,
                            limits: SolveLimits | None = None) -> HindsightLabels:
    """Hindsight-optimal actions for a whole session from one solve."""
    res = solve_assignment(list(realization.patients), None, params, limits)
    stats = ExpertCallStats(res.stats.wall_time, res.gap, 1, not res.optimal)
    return HindsightLabels(list(res.actions), res.objective, res.optimal, stats)


def full_information_action(state: SystemState, context: EpisodeContext, params: CostParams,
                            limits: SolveLimits | None = None) -> ExpertLabel:
    """Hindsight-optimal action from an arbitrary (possibly off-path) state."""
    if not context.has_future:
        raise ValueError("the full-information expert needs the realised future")
    action, stats = _solve_first(state, context.realized_future, context.residual_arrays(),
                                 params, limits, True)
    return ExpertLabel.hard(action, stats)


def two_stage_action(state: SystemState, context: EpisodeContext, n_scenarios: int,
                     params: CostParams, limits: SolveLimits | None = None, rng=None
                     ) -> ExpertLabel:
    """Here-and-now action minimising immediate plus average scenario cost."""
    if context.has_future:
        raise ValueError("the two-stage expert must not see the realised future")
    if n_scenarios < 1:
        raise ValueError("need at least one scenario")
    t0 = time.perf_counter()
    scen = sample_future_scenarios(context, n_scenarios, rng, context.gen_config)
    res = solve_sppa_by_enumeration(state.patient, scen, context.residual_arrays(), params, limits)
    stats = ExpertCallStats(time.perf_counter() - t0, res.max_gap, res.n_sub_solves, not res.exact)
    return ExpertLabel.hard(res.action, stats)


def _sub_stream(rng: RngStream, j: int) -> RngStream:
    return rng.derive(purpose=f"{rng.purpose}/agg{rng.call}", call=j)


def aggregated_deterministic(state: SystemState, context: EpisodeContext, n_scenarios: int,
                            params: CostParams, limits: SolveLimits | None = None,
                            rng: RngStream | None = None) -> ExpertLabel:
    """Frequencies of deterministic-expert actions over independent samples.

    Call ``j`` uses its own keyed stream, so the label does not depend on the
    order in which the calls run.
    """
    if n_scenarios < 1:
        raise ValueError("need at least one scenario")
    if not isinstance(rng, RngStream):
        raise TypeError("aggregated_deterministic needs an RngStream for keyed sub-streams")
    sub_limits = (limits or SolveLimits()).scaled(1.0 / n_scenarios)
    stats = ExpertCallStats()
    actions = []
    for j in range(n_scenarios):
        lab = deterministic_action(state, context, params, sub_limits, _sub_stream(rng, j))
        actions.append(lab.action)
        stats.merge(lab.stats)
    return ExpertLabel.soft(aggregate_frequency(actions, state.P), stats)


@dataclass(frozen=True)
class ExpertSpec:
    """Expert kind plus its knobs, as read from a run configuration."""

    kind: str = "two_stage"
    n_scenarios: int = 10
    limits: SolveLimits = field(default_factory=SolveLimits)

    def __post_init__(self):
        if self.kind not in EXPERT_KINDS:
            raise ValueError(f"unknown expert kind {self.kind!r}; choose from {EXPERT_KINDS}")
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be >= 1")

    def query(self, state: SystemState, realization: EpisodeRealization, params: CostParams,
              gen: GenConfig, rng: RngStream) -> ExpertLabel:
        """Label ``state``, the ``state.epoch``-th arrival of ``realization``."""
        if self.kind == "myopic":
            return myopic_action(state, params, rng)
        if self.kind == "full_information":
            future = realization.patients[state.epoch + 1:]
            ctx = EpisodeContext.hindsight(state, params, future)
            return full_information_action(state, ctx, params, self.limits)
        ctx = EpisodeContext.sampling(state, params, gen)
        if self.kind == "deterministic":
            return deterministic_action(state, ctx, params, self.limits, rng)
        if self.kind == "two_stage":
            return two_stage_action(state, ctx, self.n_scenarios, params, self.limits, rng)
        return aggregated_deterministic(state, ctx, self.n_scenarios, params, self.limits, rng)


__all__ = [
    "EXPERT_KINDS", "EpisodeContext", "ExpertCallStats", "ExpertLabel", "ExpertSpec",
    "HindsightLabels", "aggregate_frequency", "myopic_action", "deterministic_action",
    "full_information_labels", "full_information_action", "two_stage_action",
    "aggregated_deterministic",
]
