"""State features and a one-hidden-layer softmax policy trained by imitation.

Feature layout (version 1), length ``2 + 6P``::

    [duration / T, priority - 1,
     then per physician p: preferred?, slots_left / L_p, priority1_count / L_p,
                           workload / T, eligible?, feasible?]
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import CostParams, SystemState, can_assign
from .dataset import Dataset

LAYOUT_VERSION = 1
HIDDEN = 64


def n_features(P: int) -> int:
    return 2 + 6 * P


def extract_features(state: SystemState, params: CostParams) -> np.ndarray:
    P = state.P
    x = np.empty(n_features(P))
    x[0] = state.patient.duration / params.T
    x[1] = state.patient.priority - 1
    for p, ph in enumerate(state.physicians):
        j = 2 + 6 * p
        x[j] = 1.0 if ph.is_preferred else 0.0
        x[j + 1] = ph.slots_left / params.L[p]
        x[j + 2] = ph.priority1_count / params.L[p]
        x[j + 3] = ph.workload / params.T
        x[j + 4] = 1.0 if state.eligibility[p] else 0.0
        x[j + 5] = 1.0 if can_assign(state, p + 1, params) is None else 0.0
    return x


@dataclass
class PolicyParams:
    W1: np.ndarray  # HIDDEN x d
    b1: np.ndarray
    W2: np.ndarray  # (P+1) x HIDDEN
    b2: np.ndarray

    def __post_init__(self):
        h, d = self.W1.shape
        if self.b1.shape != (h,) or self.W2.shape[1] != h or self.b2.shape != (self.W2.shape[0],):
            raise ValueError("inconsistent policy parameter shapes")

    @property
    def n_inputs(self) -> int:
        return self.W1.shape[1]

    @property
    def n_actions(self) -> int:
        return self.W2.shape[0]

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy())

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.W1, self.b1, self.W2, self.b2)

    @classmethod
    def zeros(cls, P: int, hidden: int = HIDDEN) -> "PolicyParams":
        d = n_features(P)
        return cls(np.zeros((hidden, d)), np.zeros(hidden), np.zeros((P + 1, hidden)), np.zeros(P + 1))

    @classmethod
    def init(cls, P: int, seed: int, hidden: int = HIDDEN) -> "PolicyParams":
        """Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases."""
        g = np.random.default_rng(seed)
        d = n_features(P)
        a1 = math.sqrt(6.0 / (d + hidden))
        a2 = math.sqrt(6.0 / (hidden + P + 1))
        return cls(g.uniform(-a1, a1, (hidden, d)), np.zeros(hidden),
                   g.uniform(-a2, a2, (P + 1, hidden)), np.zeros(P + 1))


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def policy_forward(params: PolicyParams, x) -> np.ndarray:
    """Action probabilities for one feature vector (or a batch of rows)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.n_inputs:
        raise ValueError(f"feature length {x.shape[-1]} != policy input {params.n_inputs}")
    h = np.maximum(x @ params.W1.T + params.b1, 0.0)
    return _softmax(h @ params.W2.T + params.b2)


def select_action(probs, feasible_mask, mode: str = "greedy", rng=None) -> int:
    """Masked greedy (ties to the lowest index) or masked sampling."""
    probs = np.asarray(probs, dtype=float)
    mask = np.asarray(feasible_mask, dtype=bool)
    if not mask[0]:
        raise ValueError("rejection must always be feasible")
    masked = np.where(mask, probs, -np.inf)
    if mode == "greedy":
        return int(np.argmax(masked))
    if mode != "sample":
        raise ValueError(f"unknown selection mode {mode!r}")
    w = np.where(mask, probs, 0.0)
    if w.sum() <= 0:
        w = mask.astype(float)
    w = w / w.sum()
    g = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return int(g.choice(len(w), p=w))


class NonFiniteError(FloatingPointError):
    def __init__(self, batch_index: int):
        super().__init__(f"non-finite value in batch {batch_index}")
        self.batch_index = batch_index


def loss_and_grad(params: PolicyParams, X, Y, l2: float = 0.0, batch_index: int = 0
                  ) -> tuple[float, PolicyParams]:
    """Mean cross-entropy plus ``l2 * (|W1|^2 + |W2|^2) / 2`` and its gradient."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = X.shape[0]
    # Overflow is reported as NonFiniteError below rather than as warnings.
    with np.errstate(invalid="ignore", over="ignore"):
        pre = X @ params.W1.T + params.b1
        h = np.maximum(pre, 0.0)
        z = h @ params.W2.T + params.b2
        z = z - z.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        # 0 * log p is taken as 0 so soft targets with empty entries stay finite.
        ce = -np.where(Y > 0, Y * logp, 0.0).sum() / n
        loss = ce + 0.5 * l2 * (np.sum(params.W1 ** 2) + np.sum(params.W2 ** 2))
    if not np.isfinite(loss):
        raise NonFiniteError(batch_index)

    dz = (np.exp(logp) * Y.sum(axis=1, keepdims=True) - Y) / n
    gW2 = dz.T @ h + l2 * params.W2
    gb2 = dz.sum(axis=0)
    dh = dz @ params.W2
    dh[pre <= 0] = 0.0
    gW1 = dh.T @ X + l2 * params.W1
    gb1 = dh.sum(axis=0)
    grads = PolicyParams(gW1, gb1, gW2, gb2)
    if not all(np.isfinite(a).all() for a in grads.arrays()):
        raise NonFiniteError(batch_index)
    return float(loss), grads


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    l2: float = 1e-4
    warm_epochs: int = 20
    warm_start: bool = False        # True: continue from the previous policy for warm_epochs

    def __post_init__(self):
        if not self.learning_rate >= 0 or self.batch_size < 1 or self.epochs < 0 or self.l2 < 0:
            raise ValueError("invalid training configuration")


@dataclass
class TrainResult:
    params: PolicyParams
    epoch_losses: list[float] = field(default_factory=list)


def train(dataset: Dataset, config: TrainConfig, init: PolicyParams | None = None,
          epochs: int | None = None) -> TrainResult:
    """Shuffled mini-batch gradient descent from ``init`` (fresh if None)."""
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    P = dataset.n_actions - 1
    params = PolicyParams.init(P, config.seed) if init is None else init.copy()
    if params.n_inputs != dataset.n_features:
        raise ValueError("dataset feature length does not match the policy")
    X, Y = dataset.X, dataset.Y
    g = np.random.default_rng([config.seed, len(dataset)])
    losses = []
    n = len(dataset)
    for _ in range(config.epochs if epochs is None else epochs):
        order = g.permutation(n)
        tot = 0.0
        for b, s in enumerate(range(0, n, config.batch_size)):
            idx = order[s:s + config.batch_size]
            loss, grads = loss_and_grad(params, X[idx], Y[idx], config.l2, b)
            tot += loss * len(idx)
            for a, ga in zip(params.arrays(), grads.arrays()):
                a -= config.learning_rate * ga
        losses.append(tot / n)
    return TrainResult(params, losses)


def training_loss(params: PolicyParams, dataset: Dataset, l2: float = 0.0) -> float:
    return loss_and_grad(params, dataset.X, dataset.Y, l2)[0]


def save_policy(path, params: PolicyParams, P: int, config: TrainConfig | None = None,
                fingerprint: str = "") -> None:
    doc = {
        "layout_version": LAYOUT_VERSION,
        "P": P,
        "n_features": params.n_inputs,
        "hidden": params.W1.shape[0],
        "W1": params.W1.tolist(), "b1": params.b1.tolist(),
        "W2": params.W2.tolist(), "b2": params.b2.tolist(),
        "train_config": asdict(config) if config is not None else None,
        "dataset_fingerprint": fingerprint,
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_policy(path, P: int | None = None) -> PolicyParams:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("layout_version") != LAYOUT_VERSION:
        raise ValueError(f"feature layout version {doc.get('layout_version')} != {LAYOUT_VERSION}")
    if P is not None and doc["P"] != P:
        raise ValueError(f"policy trained for P={doc['P']}, expected P={P}")
    params = PolicyParams(*(np.array(doc[k], dtype=float) for k in ("W1", "b1", "W2", "b2")))
    if params.n_inputs != n_features(doc["P"]) or params.n_actions != doc["P"] + 1:
        raise ValueError("policy artifact shapes do not match its P")
    return params


__all__ = [
    "LAYOUT_VERSION", "HIDDEN", "n_features", "extract_features", "PolicyParams",
    "policy_forward", "select_action", "loss_and_grad", "TrainConfig", "TrainResult", "train",
    "training_loss", "save_policy", "load_policy", "NonFiniteError",
]
