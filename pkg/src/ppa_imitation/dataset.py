"""Append-only store of (features, target distribution, provenance) rows."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class RowMeta:
    iteration: int
    episode: int
    epoch: int
    expert: str
    expert_time: float = 0.0
    gap: float = 0.0
    reached_limit: bool = False


@dataclass
class Dataset:
    n_features: int
    n_actions: int
    _x: list = field(default_factory=list, repr=False)
    _y: list = field(default_factory=list, repr=False)
    meta: list[RowMeta] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self._x)

    def append(self, x, target, meta: RowMeta) -> None:
        x = np.asarray(x, dtype=float)
        y = np.asarray(target, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(f"feature vector has shape {x.shape}, expected ({self.n_features},)")
        if y.shape != (self.n_actions,) or (y < 0).any() or abs(y.sum() - 1.0) > 1e-9:
            raise ValueError("target must be a probability vector over the actions")
        self._x.append(x)
        self._y.append(y)
        self.meta.append(meta)

    def extend(self, rows) -> None:
        for x, y, m in rows:
            self.append(x, y, m)

    @property
    def X(self) -> np.ndarray:
        if not self._x:
            return np.zeros((0, self.n_features))
        return np.vstack(self._x)

    @property
    def Y(self) -> np.ndarray:
        if not self._y:
            return np.zeros((0, self.n_actions))
        return np.vstack(self._y)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.Y).tobytes())
        return h.hexdigest()[:16]

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for x, y, m in zip(self._x, self._y, self.meta):
                fh.write(json.dumps({
                    "iteration": m.iteration, "episode": m.episode, "epoch": m.epoch,
                    "expert": m.expert, "x": x.tolist(), "target": y.tolist(),
                }) + "\n")

    @classmethod
    def from_jsonl(cls, path, n_features: int, n_actions: int) -> "Dataset":
        ds = cls(n_features, n_actions)
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                r = json.loads(line)
                ds.append(r["x"], r["target"],
                          RowMeta(r["iteration"], r["episode"], r["epoch"], r["expert"]))
        return ds


__all__ = ["Dataset", "RowMeta"]
