"""General DAgger: roll out a mixed expert/learner controller, label every
visited state with expert targets, aggregate, retrain, repeat.

One iteration ``i`` (1-based) simulates ``H`` training sessions.  At every
epoch the state is labelled by ``J`` expert calls whose actions are
aggregated into a target; the executed action comes from the decision rule.
After the ``H`` sessions the policy is retrained on the whole dataset.

All randomness is keyed by ``(master_seed, purpose, episode, epoch, call)``;
the sessions of one iteration may run on several workers and are merged in
episode order, so results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import REJECT, CostParams, EpisodeRealization, SystemState, feasible_mask, transition
from .dataset import Dataset, RowMeta
from .evaluation import EvalConfig, PolicySpec, evaluate_policy
from .experts import ExpertLabel, ExpertSpec, aggregate_frequency, full_information_labels
from .generator import GenConfig, sample_episode
from .learner import (PolicyParams, TrainConfig, extract_features, load_policy, n_features,
                      policy_forward, select_action, train, training_loss)
from .parallel import ordered_map
from .rng import RngStream

RULES = ("total", "vanilla", "conditional")


@dataclass(frozen=True)
class DecisionRule:
    kind: str = "vanilla"
    lam: float = 1.0
    beta0: float = 0.8
    threshold: float = 0.8

    def __post_init__(self):
        if self.kind not in RULES:
            raise ValueError(f"unknown decision rule {self.kind!r}; choose from {RULES}")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lambda must lie in (0, 1]")
        if not 0.0 <= self.beta0 <= 1.0:
            raise ValueError("beta0 must lie in [0, 1]")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")


@dataclass(frozen=True)
class DaggerConfig:
    I: int = 1
    H: int = 10
    J: int = 1                      # expert calls per state
    skip_prob: float = 0.0          # probability of not labelling a state
    experts: tuple[ExpertSpec, ...] = (ExpertSpec(),)   # used round-robin over calls
    rule: DecisionRule = DecisionRule()
    initial_policy: str = "uniform"   # or a path to a policy artifact
    plateau: int | None = None        # stop after this many iterations without improvement
    eval: EvalConfig | None = None
    workers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "experts", tuple(self.experts))
        if self.I < 1 or self.H < 1 or self.J < 1:
            raise ValueError("I, H and J must be >= 1")
        if not 0.0 <= self.skip_prob < 1.0:
            raise ValueError("skip_prob must lie in [0, 1)")
        if not self.experts:
            raise ValueError("need at least one expert")
        if self.plateau is not None and self.plateau < 1:
            raise ValueError("plateau window must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    dataset_size: int
    train_loss: float
    eval_cost: float
    expert_time: float
    beta: float
    expert_fraction: float = float("nan")

    CSV_COLUMNS = ("iteration", "dataset_size", "train_loss", "eval_cost", "expert_time", "beta")

    def csv_row(self) -> list[str]:
        return [str(self.iteration), str(self.dataset_size), f"{self.train_loss:.6f}",
                f"{self.eval_cost:.2f}", f"{self.expert_time:.3f}", f"{self.beta:.6f}"]


@dataclass
class DaggerResult:
    policies: list[PolicyParams]      # policies[i] is the policy trained after iteration i+1
    records: list[IterationRecord]
    dataset: Dataset
    failures: list[tuple[int, int, int, str]] = field(default_factory=list)

    @property
    def best_iteration(self) -> int:
        costs = [r.eval_cost for r in self.records]
        if not costs or all(np.isnan(costs)):
            return len(self.records)
        return int(np.nanargmin(costs)) + 1

    @property
    def best_policy(self) -> PolicyParams:
        return self.policies[self.best_iteration - 1]


def beta_schedule(i: int, lam: float, beta0: float) -> float:
    """``lam ** (i - 1) * beta0`` for 1-based iteration ``i``."""
    if i < 1:
        raise ValueError("iterations are 1-based")
    return lam ** (i - 1) * beta0


def _uniform_action(mask: np.ndarray, g: np.random.Generator) -> int:
    feas = np.flatnonzero(mask)
    return int(feas[int(g.integers(len(feas)))])


def learner_action(policy: PolicyParams | None, state: SystemState, params: CostParams,
                   g: np.random.Generator) -> tuple[int, float]:
    """Masked-greedy learner action and its renormalised probability.

    ``policy=None`` is the initial uniform policy over feasible actions.
    """
    mask = feasible_mask(state, params)
    if policy is None:
        return _uniform_action(mask, g), 1.0 / mask.sum()
    probs = policy_forward(policy, extract_features(state, params))
    a = select_action(probs, mask, "greedy")
    masked = np.where(mask, probs, 0.0)
    return a, float(masked[a] / masked.sum())


def decision_rule(rule: DecisionRule, state: SystemState, label: ExpertLabel | None,
                  policy: PolicyParams | None, beta: float, params: CostParams,
                  g: np.random.Generator) -> tuple[int, bool]:
    """Executed action and whether it came from the expert.

    One uniform draw decides the Vanilla coin; the learner's own draws (only
    for the uniform initial policy) follow it on the same generator.
    """
    z = g.random()
    if label is None:
        return learner_action(policy, state, params, g)[0], False
    if rule.kind == "total":
        return label.action, True
    if rule.kind == "vanilla":
        if z < beta:
            return label.action, True
        return learner_action(policy, state, params, g)[0], False
    a, conf = learner_action(policy, state, params, g)
    if conf >= rule.threshold:
        return a, False
    return label.action, True


def stop_condition(i: int, config: DaggerConfig, records: list[IterationRecord]) -> bool:
    if i >= config.I:
        return True
    W = config.plateau
    if W is None or len(records) <= W:
        return False
    costs = [r.eval_cost for r in records]
    best_before = min(costs[:-W])
    return min(costs[-W:]) >= best_before


@dataclass
class _EpisodeJob:
    config: DaggerConfig
    i: int
    h: int                  # global episode index
    master_seed: int
    policy: PolicyParams | None
    beta: float
    params: CostParams
    gen: GenConfig


@dataclass
class _EpisodeOut:
    rows: list
    expert_time: float
    n_expert: int
    n_steps: int
    failures: list
    cost: float


def training_episode(master_seed: int, h: int, gen: GenConfig) -> EpisodeRealization:
    return sample_episode(gen, RngStream(master_seed, "train", h))


def _label_state(job: _EpisodeJob, ep, state, k, hind, history) -> tuple[ExpertLabel | None, float, str]:
    cfg = job.config
    P = job.params.P
    gj = RngStream(job.master_seed, f"skip/i{job.i}", job.h, k).generator()
    if cfg.skip_prob > 0 and gj.random() < cfg.skip_prob:
        return None, 0.0, ""
    labels = []
    spent = 0.0
    for j in range(cfg.J):
        spec = cfg.experts[j % len(cfg.experts)]
        rng = RngStream(job.master_seed, f"expert/i{job.i}", job.h, k, j)
        t0 = time.perf_counter()
        if spec.kind == "full_information" and hind is not None and history == hind[:k]:
            lab = ExpertLabel.hard(hind[k])      # still on the hindsight path
        else:
            lab = spec.query(state, ep, job.params, job.gen, rng)
        spent += time.perf_counter() - t0
        labels.append(lab)
    kinds = "+".join(sorted({s.kind for s in cfg.experts[:cfg.J]}))
    if len(labels) == 1:
        return labels[0], spent, kinds
    if all(lab.kind == "hard" for lab in labels):
        freq = aggregate_frequency([lab.action for lab in labels], P)
    else:
        freq = np.mean([lab.target(P) for lab in labels], axis=0)
    return ExpertLabel.soft(freq), spent, kinds


def _run_episode(job: _EpisodeJob) -> _EpisodeOut:
    ep = training_episode(job.master_seed, job.h, job.gen)
    P = job.params.P
    hind = None
    if any(s.kind == "full_information" for s in job.config.experts):
        hind = full_information_labels(ep, job.params, job.config.experts[0].limits).actions
    state = SystemState.initial(ep.patients[0], job.params)
    rows, failures, history = [], [], []
    spent, n_expert, cost = 0.0, 0, 0.0
    for k, patient in enumerate(ep.patients):
        try:
            label, dt, kind = _label_state(job, ep, state, k, hind, history)
        except Exception as exc:  # expert failure: keep the trajectory going
            label, dt, kind = None, 0.0, ""
            failures.append((job.i, job.h, k, f"{type(exc).__name__}: {exc}"))
        spent += dt
        if label is not None:
            meta = RowMeta(job.i, job.h, k, kind, dt, label.stats.gap, label.stats.reached_limit)
            rows.append((extract_features(state, job.params), label.target(P), meta))
        g = RngStream(job.master_seed, f"rule/i{job.i}", job.h, k).generator()
        action, from_expert = decision_rule(job.config.rule, state, label, job.policy, job.beta,
                                            job.params, g)
        mask = feasible_mask(state, job.params)
        if not mask[action]:
            # Cannot happen for exact experts; guard against a bad artifact.
            failures.append((job.i, job.h, k, f"infeasible action {action}"))
            action = REJECT
        n_expert += int(from_expert)
        if action == REJECT:
            cost += job.params.rejection_cost(patient.priority)
        elif action != patient.preferred:
            cost += job.params.preference_cost(patient.priority)
        history.append(action)
        nxt = ep.patients[k + 1] if k + 1 < len(ep.patients) else None
        state = transition(state, action, nxt, job.params)
    return _EpisodeOut(rows, spent, n_expert, len(ep.patients), failures, cost)


def _initial_policy(config: DaggerConfig, P: int) -> PolicyParams | None:
    if config.initial_policy == "uniform":
        return None
    return load_policy(config.initial_policy, P)


def run_dagger(config: DaggerConfig, gen: GenConfig, params: CostParams, train_cfg: TrainConfig,
               master_seed: int, log=None) -> DaggerResult:
    P = params.P
    dataset = Dataset(n_features(P), P + 1)
    policy = _initial_policy(config, P)
    policies, records, failures = [], [], []
    i = 0
    while True:
        i += 1
        beta = beta_schedule(i, config.rule.lam, config.rule.beta0)
        jobs = [_EpisodeJob(config, i, (i - 1) * config.H + h, master_seed, policy, beta, params, gen)
                for h in range(config.H)]
        outs = ordered_map(_run_episode, jobs, config.workers)
        for out in outs:
            dataset.extend(out.rows)
            failures.extend(out.failures)
        if len(dataset) == 0:
            raise RuntimeError("no labelled states after the first iteration")
        warm = i > 1 and train_cfg.warm_start and policy is not None
        res = train(dataset, train_cfg, init=policy if warm else None,
                    epochs=train_cfg.warm_epochs if warm else None)
        policy = res.params
        policies.append(policy)
        eval_cost = float("nan")
        if config.eval is not None:
            spec = PolicySpec(f"dagger_i{i}", "learned", params=policy)
            eval_cost = evaluate_policy(spec, config.eval, params, gen, config.workers).avg_cost
        steps = sum(o.n_steps for o in outs)
        rec = IterationRecord(
            i, len(dataset), training_loss(policy, dataset, train_cfg.l2), eval_cost,
            sum(o.expert_time for o in outs), beta,
            sum(o.n_expert for o in outs) / max(1, steps),
        )
        records.append(rec)
        if log is not None:
            log(rec)
        if stop_condition(i, config, records):
            break
    return DaggerResult(policies, records, dataset, failures)


def write_records(path, records: list[IterationRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(IterationRecord.CSV_COLUMNS)
        for r in records:
            w.writerow(r.csv_row())


def read_records(path) -> list[dict]:
    with open(Path(path), encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


__all__ = [
    "RULES", "DecisionRule", "DaggerConfig", "IterationRecord", "DaggerResult", "beta_schedule",
    "learner_action", "decision_rule", "stop_condition", "run_dagger", "training_episode",
    "write_records", "read_records",
]
