"""Seeded instance generation: sessions, eligibility sets, future scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import EpisodeRealization, Patient
from .rng import RngStream

DEFAULT_WEIGHTS = (0.4, 0.3, 0.15, 0.15)


@dataclass(frozen=True)
class GenConfig:
    """Arrival-process parameters; defaults are the full-scale profile.

    ``beta_params`` and ``lognormal_params`` are indexed by ``priority - 1``.
    ``eligibility_size_range=None`` means ``(1, P)``.
    """

    mu_K: float = 100.0
    sigma_K: float = 8.0
    p_class1: float = 0.3
    beta_params: tuple[tuple[float, float], tuple[float, float]] = ((3.0, 1.0), (1.0, 1.0))
    lognormal_params: tuple[tuple[float, float], tuple[float, float]] = ((3.0, 0.8), (2.3, 0.3))
    physician_weights: tuple[float, ...] = DEFAULT_WEIGHTS
    alpha: float = 25.0
    eligibility_size_range: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "physician_weights", tuple(float(w) for w in self.physician_weights))
        object.__setattr__(self, "beta_params", tuple(tuple(map(float, ab)) for ab in self.beta_params))
        object.__setattr__(
            self, "lognormal_params", tuple(tuple(map(float, ms)) for ms in self.lognormal_params))
        if self.eligibility_size_range is None:
            object.__setattr__(self, "eligibility_size_range", (1, self.P))
        else:
            object.__setattr__(self, "eligibility_size_range", tuple(map(int, self.eligibility_size_range)))
        w = np.asarray(self.physician_weights)
        if len(w) < 1 or (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("physician_weights must be a probability vector")
        kmin, kmax = self.eligibility_size_range
        if not 1 <= kmin <= kmax <= self.P:
            raise ValueError("need 1 <= k_min <= k_max <= P")
        if not self.sigma_K > 0:
            raise ValueError("sigma_K must be positive")
        if not 0 < self.p_class1 < 1:
            raise ValueError("p_class1 must lie in (0, 1)")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if len(self.beta_params) != 2 or len(self.lognormal_params) != 2:
            raise ValueError("need parameters for both priority classes")

    @property
    def P(self) -> int:
        return len(self.physician_weights)

    @property
    def dirichlet_alpha(self) -> np.ndarray:
        return self.alpha * np.asarray(self.physician_weights)

    @classmethod
    def uniform_weights(cls, P: int, **kw) -> "GenConfig":
        return cls(physician_weights=(1.0 / P,) * P, alpha=1.0, **kw)


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[tuple[Patient, ...], ...]
    anchor_epoch: int
    anchor_score: float

    def __len__(self) -> int:
        return len(self.scenarios)


def _round_count(x: float) -> int:
    return int(math.floor(x + 0.5))


def _eligibility(g: np.random.Generator, config: GenConfig, n: int):
    """Top-K-by-taste eligibility and taste-weighted preferred physician."""
    P = config.P
    z = g.gamma(config.dirichlet_alpha, size=(n, P))
    tot = z.sum(axis=1, keepdims=True)
    z = np.where(tot > 0, z / np.where(tot > 0, tot, 1.0), 1.0 / P)
    kmin, kmax = config.eligibility_size_range
    sizes = g.integers(kmin, kmax + 1, size=n)
    u = g.random(n)
    ranks = np.argsort(-z, axis=1, kind="stable")
    eligible, preferred = [], []
    for i in range(n):
        chosen = np.sort(ranks[i, : sizes[i]])
        w = z[i, chosen]
        if w.sum() > 0:
            cum = np.cumsum(w)
            j = int(np.searchsorted(cum, u[i] * cum[-1], side="right"))
        else:
            j = int(u[i] * len(chosen))
        j = min(j, len(chosen) - 1)
        eligible.append(tuple(int(p) + 1 for p in chosen))
        preferred.append(int(chosen[j]) + 1)
    return eligible, preferred


def sample_eligibility(config: GenConfig, rng: RngStream | np.random.Generator):
    """One patient's (eligible set, preferred physician)."""
    g = rng.generator() if isinstance(rng, RngStream) else rng
    eligible, preferred = _eligibility(g, config, 1)
    return eligible[0], preferred[0]


def _class_arrays(config: GenConfig, priority: np.ndarray):
    idx = priority - 1
    ab = np.asarray(config.beta_params)[idx]
    ms = np.asarray(config.lognormal_params)[idx]
    return ab[:, 0], ab[:, 1], ms[:, 0], ms[:, 1]


def _build_patients(g, config, priority, scores, first_id):
    n = len(priority)
    _, _, mu, sig = _class_arrays(config, priority)
    durations = g.lognormal(mu, sig) if n else np.empty(0)
    eligible, preferred = _eligibility(g, config, n)
    order = np.argsort(scores, kind="stable")
    return tuple(
        Patient(
            id=first_id + rank,
            duration=float(durations[i]),
            priority=int(priority[i]),
            preferred=preferred[i],
            eligible=eligible[i],
            arrival_score=float(scores[i]),
        )
        for rank, i in enumerate(order)
    )


def sample_episode(config: GenConfig, rng: RngStream) -> EpisodeRealization:
    g = rng.generator()
    K = max(1, _round_count(g.normal(config.mu_K, config.sigma_K)))
    priority = np.where(g.random(K) < config.p_class1, 1, 2)
    a, b, _, _ = _class_arrays(config, priority)
    scores = g.beta(a, b)
    patients = _build_patients(g, config, priority, scores, 0)
    return EpisodeRealization(patients=patients, seed=rng.master_seed)


def _future_count(g: np.random.Generator, config: GenConfig, k: int, max_batches: int = 1000) -> int:
    for _ in range(max_batches):
        draws = np.floor(g.normal(config.mu_K, config.sigma_K, size=64) + 0.5).astype(np.int64)
        ok = np.flatnonzero(draws >= k + 1)
        if ok.size:
            return int(draws[ok[0]]) - (k + 1)
    return 0


def _truncated_scores(g, config: GenConfig, n: int, s: float):
    """(priority, score) pairs drawn jointly, conditioned on score > s.

    Equivalent to drawing class then Beta score and rejecting pairs with
    score <= s, but exact in bounded time via the inverse incomplete beta.
    """
    (a1, b1), (a2, b2) = config.beta_params
    # P(score > s | class) computed through the mirrored Beta(b, a) for accuracy near 1.
    surv1 = float(special.betainc(b1, a1, 1.0 - s))
    surv2 = float(special.betainc(b2, a2, 1.0 - s))
    w1 = config.p_class1 * surv1
    w2 = (1.0 - config.p_class1) * surv2
    if n == 0 or w1 + w2 <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    q1 = w1 / (w1 + w2)
    priority = np.where(g.random(n) < q1, 1, 2)
    a, b, _, _ = _class_arrays(config, priority)
    surv = np.where(priority == 1, surv1, surv2)
    u = g.random(n)
    tail = special.betaincinv(b, a, u * surv)
    scores = 1.0 - tail
    scores = np.clip(scores, np.nextafter(s, 2.0), 1.0)
    return priority, scores


def sample_future_scenarios(context, n: int, rng: RngStream, config: GenConfig) -> ScenarioSet:
    """Sample ``n`` continuations of the session after the current arrival.

    ``context`` needs ``epoch`` (0-based index of the current patient) and
    ``current_score``.
    """
    k, s = int(context.epoch), float(context.current_score)
    if n <= 0:
        return ScenarioSet((), k, s)
    g = rng.generator()
    out = []
    for _ in range(n):
        m = _future_count(g, config, k)
        priority, scores = _truncated_scores(g, config, m, s)
        out.append(_build_patients(g, config, priority, scores, k + 1))
    return ScenarioSet(tuple(out), k, s)


@dataclass(frozen=True)
class ScenarioSchedule:
    """Scenario count per epoch; ``late_bonus`` adds scenarios after ``late_epoch``."""

    base: int = 10
    late_epoch: int | None = None
    late_bonus: int = 0

    def count(self, epoch: int) -> int:
        if self.late_epoch is not None and epoch >= self.late_epoch:
            return self.base + self.late_bonus
        return self.base


__all__ = [
    "GenConfig", "ScenarioSet", "ScenarioSchedule", "sample_episode", "sample_eligibility",
    "sample_future_scenarios", "DEFAULT_WEIGHTS",
]
