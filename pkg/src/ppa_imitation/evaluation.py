"""Paired policy evaluation on a fixed block of simulated sessions.

Every policy evaluated against the same ``EvalConfig`` sees exactly the same
sessions (episode ``j`` is drawn from the stream ``(seed, "eval", j)``), so
per-episode costs can be compared pairwise.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import CostParams, EpisodeRealization, SystemState, feasible_mask, simulate
from .experts import ExpertSpec, full_information_labels, myopic_action
from .generator import GenConfig, sample_episode
from .learner import PolicyParams, extract_features, policy_forward, select_action
from .milp.model import SolveLimits
from .parallel import ordered_map
from .rng import RngStream


@dataclass(frozen=True)
class EvalConfig:
    n_test_episodes: int = 100
    test_seed_base: int = 2**40 + 7

    def __post_init__(self):
        if self.n_test_episodes < 1:
            raise ValueError("evaluation needs at least one episode")

    def episode(self, j: int, gen: GenConfig) -> EpisodeRealization:
        return sample_episode(gen, RngStream(self.test_seed_base, "eval", j))


@dataclass(frozen=True)
class PolicySpec:
    """What to evaluate: ``greedy``, ``expert`` (any expert as a policy),
    ``hindsight`` or ``learned``."""

    policy_id: str
    kind: str
    expert: ExpertSpec | None = None
    params: PolicyParams | None = field(default=None, compare=False)
    limits: SolveLimits = field(default_factory=SolveLimits)

    def __post_init__(self):
        if self.kind not in ("greedy", "expert", "hindsight", "learned"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "expert" and self.expert is None:
            raise ValueError("expert policy needs an ExpertSpec")
        if self.kind == "learned" and self.params is None:
            raise ValueError("learned policy needs parameters")


@dataclass
class EpisodeOutcome:
    cost: float
    p1_rejected: int
    p2_rejected: int
    undesirable: int
    decision_time: float
    n_decisions: int
    exact: bool = True


@dataclass
class MetricsRow:
    policy_id: str
    avg_cost: float
    p1_rejected: float
    p2_rejected: float
    undesirable: float
    avg_decision_time: float
    n_episodes: int
    episode_costs: list[float] = field(default_factory=list, repr=False)

    CSV_COLUMNS = ("policy_id", "n_episodes", "avg_cost", "p1_rejected", "p2_rejected",
                   "undesirable")

    def csv_row(self) -> list[str]:
        return [self.policy_id, str(self.n_episodes), f"{self.avg_cost:.2f}",
                f"{self.p1_rejected:.2f}", f"{self.p2_rejected:.2f}", f"{self.undesirable:.2f}"]

    def to_dict(self) -> dict:
        return {
            "policy_id": self.policy_id, "n_episodes": self.n_episodes,
            "avg_cost": self.avg_cost, "p1_rejected": self.p1_rejected,
            "p2_rejected": self.p2_rejected, "undesirable": self.undesirable,
            "avg_decision_time": self.avg_decision_time,
        }


def learned_action(params: PolicyParams, state: SystemState, cost: CostParams) -> int:
    probs = policy_forward(params, extract_features(state, cost))
    return select_action(probs, feasible_mask(state, cost), "greedy")


def run_episode(spec: PolicySpec, ep: EpisodeRealization, j: int, seed: int,
                params: CostParams, gen: GenConfig) -> EpisodeOutcome:
    """Simulate one session under ``spec``; draws keyed by ``(seed, policy, j, k)``."""
    exact = True
    spent = [0.0]
    tag = f"policy/{spec.policy_id}"
    if spec.kind == "hindsight":
        t0 = time.perf_counter()
        lab = full_information_labels(ep, params, spec.limits)
        spent[0] = time.perf_counter() - t0
        exact = lab.optimal
        acts = lab.actions

        def policy(state, k):
            return acts[k]
    else:
        def policy(state, k):
            t0 = time.perf_counter()
            rng = RngStream(seed, tag, j, k)
            if spec.kind == "greedy":
                a = myopic_action(state, params, rng).action
            elif spec.kind == "learned":
                a = learned_action(spec.params, state, params)
            else:
                lab = spec.expert.query(state, ep, params, gen, rng)
                a = lab.action
            spent[0] += time.perf_counter() - t0
            return a
    m = simulate(ep, params, policy)
    return EpisodeOutcome(m.cost, m.p1_rejected, m.p2_rejected, m.undesirable, spent[0], len(ep),
                          exact)


def _eval_job(args):
    spec, cfg, j, params, gen = args
    return run_episode(spec, cfg.episode(j, gen), j, cfg.test_seed_base, params, gen)


def evaluate_policy(spec: PolicySpec, cfg: EvalConfig, params: CostParams, gen: GenConfig,
                    workers: int | None = None) -> MetricsRow:
    jobs = [(spec, cfg, j, params, gen) for j in range(cfg.n_test_episodes)]
    outs = ordered_map(_eval_job, jobs, workers)
    return summarize(spec.policy_id, outs)


def summarize(policy_id: str, outs: list[EpisodeOutcome]) -> MetricsRow:
    if not outs:
        raise ValueError("no episodes to summarise")
    n = len(outs)
    decisions = sum(o.n_decisions for o in outs)
    return MetricsRow(
        policy_id,
        float(np.mean([o.cost for o in outs])),
        float(np.mean([o.p1_rejected for o in outs])),
        float(np.mean([o.p2_rejected for o in outs])),
        float(np.mean([o.undesirable for o in outs])),
        sum(o.decision_time for o in outs) / max(1, decisions),
        n,
        [o.cost for o in outs],
    )


def sign_test(a, b) -> tuple[int, int, float]:
    """One-sided paired sign test of ``a > b``; ties dropped.

    Returns ``(wins, n_untied, p_value)``, where the p-value is
    ``P(Binomial(n, 1/2) >= wins)``.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    wins = int((d > 0).sum())
    n = int((d != 0).sum())
    if n == 0:
        return 0, 0, 1.0
    p = sum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0 ** n
    return wins, n, float(p)


__all__ = ["EvalConfig", "PolicySpec", "EpisodeOutcome", "MetricsRow", "learned_action",
           "run_episode", "evaluate_policy", "summarize", "sign_test"]
