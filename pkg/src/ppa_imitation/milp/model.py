"""Algebraic model container and solver result types."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

LE, EQ, GE = -1, 0, 1
_SENSE_SYMBOL = {LE: "<=", EQ: "=", GE: ">="}


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE_WITHIN_LIMITS = "FeasibleWithinLimits"
    INFEASIBLE = "Infeasible"


class SolverError(RuntimeError):
    pass


@dataclass
class MilpModel:
    """Minimise ``c @ x + obj_constant`` s.t. ``A x (sense) rhs``, bounds.

    ``keys[j]`` carries the semantic identity of variable ``j`` (for the
    assignment models ``("a", k, p, w)`` or ``("u", k, w)``) and ``names[j]``
    its printable name.  ``start`` is an optional known-feasible point.
    """

    names: list[str]
    is_int: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    A: np.ndarray
    sense: np.ndarray
    rhs: np.ndarray
    row_names: list[str]
    obj_constant: float = 0.0
    keys: list[tuple] | None = None
    start: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.names)
        self.is_int = np.asarray(self.is_int, dtype=bool)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(len(self.row_names), n)
        self.sense = np.asarray(self.sense, dtype=np.int64)
        self.rhs = np.asarray(self.rhs, dtype=float)
        for arr, what in ((self.is_int, "is_int"), (self.lb, "lb"), (self.ub, "ub"), (self.c, "c")):
            if arr.shape != (n,):
                raise ValueError(f"{what} has shape {arr.shape}, expected ({n},)")
        if self.sense.shape != (len(self.row_names),) or self.rhs.shape != self.sense.shape:
            raise ValueError("sense/rhs length must equal number of rows")
        if not np.isin(self.sense, (LE, EQ, GE)).all():
            raise ValueError("sense entries must be -1, 0 or +1")
        if (self.is_int & ((self.lb < 0) | (self.ub > 1))).any():
            raise ValueError("integer variables must be binary with bounds inside [0, 1]")
        if len(set(self.names)) != n:
            raise ValueError("variable names must be unique")
        if self.keys is not None and len(self.keys) != n:
            raise ValueError("keys must align with variables")

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def name_map(self) -> dict[int, str]:
        return dict(enumerate(self.names))

    def index(self, name: str) -> int:
        return self.names.index(name)

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = self.obj_constant
        for j in np.flatnonzero(self.c):
            total += self.c[j] * x[j]
        return float(total)

    def is_feasible(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,):
            return False
        if (x < self.lb - tol).any() or (x > self.ub + tol).any():
            return False
        if (np.abs(x[self.is_int] - np.round(x[self.is_int])) > tol).any():
            return False
        act = self.A @ x
        scale = tol * np.maximum(1.0, np.abs(self.rhs))
        ok = np.where(self.sense == LE, act <= self.rhs + scale,
                      np.where(self.sense == GE, act >= self.rhs - scale,
                               np.abs(act - self.rhs) <= scale))
        return bool(ok.all())

    def describe(self) -> str:
        lines = [f"min {self.obj_constant:+g} " + " ".join(
            f"{self.c[j]:+g} {self.names[j]}" for j in np.flatnonzero(self.c))]
        for i in range(self.n_rows):
            terms = " ".join(f"{self.A[i, j]:+g} {self.names[j]}" for j in np.flatnonzero(self.A[i]))
            lines.append(f"  {self.row_names[i]}: {terms} {_SENSE_SYMBOL[self.sense[i]]} {self.rhs[i]:g}")
        return "\n".join(lines)


class ModelBuilder:
    """Incremental construction of a :class:`MilpModel` from named terms."""

    def __init__(self):
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._is_int: list[bool] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._c: list[float] = []
        self._keys: list[tuple] = []
        self._rows: list[tuple[dict[int, float], int, float]] = []
        self._row_names: list[str] = []
        self.obj_constant = 0.0

    def add_var(self, name: str, kind: str = "binary", lb: float = 0.0, ub: float | None = None,
                cost: float = 0.0, key: tuple | None = None) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        if kind not in ("binary", "continuous"):
            raise ValueError(f"unknown variable kind {kind!r}")
        if ub is None:
            ub = 1.0 if kind == "binary" else np.inf
        j = len(self._names)
        self._index[name] = j
        self._names.append(name)
        self._is_int.append(kind == "binary")
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._c.append(float(cost))
        self._keys.append(key if key is not None else (name,))
        return j

    def add_constraint(self, terms: dict, sense: int, rhs: float, name: str | None = None) -> int:
        coeffs: dict[int, float] = {}
        for var, coef in terms.items():
            j = self._index[var] if isinstance(var, str) else int(var)
            if not 0 <= j < len(self._names):
                raise KeyError(f"constraint references undeclared variable {var!r}")
            coeffs[j] = coeffs.get(j, 0.0) + float(coef)
        self._rows.append((coeffs, int(sense), float(rhs)))
        self._row_names.append(name or f"R{len(self._rows)}")
        return len(self._rows) - 1

    def build(self, start=None) -> MilpModel:
        n, m = len(self._names), len(self._rows)
        A = np.zeros((m, n))
        for i, (coeffs, _, _) in enumerate(self._rows):
            for j, v in coeffs.items():
                A[i, j] = v
        return MilpModel(
            names=list(self._names), is_int=self._is_int, lb=self._lb, ub=self._ub, c=self._c,
            A=A, sense=[s for _, s, _ in self._rows], rhs=[r for _, _, r in self._rows],
            row_names=list(self._row_names), obj_constant=self.obj_constant,
            keys=list(self._keys), start=None if start is None else np.asarray(start, dtype=float),
        )


@dataclass(frozen=True)
class SolveLimits:
    """Expert stopping criteria; ``None`` disables a criterion."""

    time_limit: float | None = None
    gap_limit: float | None = None
    node_limit: int | None = None

    MAX_NODES = 1_000_000

    def __post_init__(self):
        for v in (self.time_limit, self.gap_limit, self.node_limit):
            if v is not None and v < 0:
                raise ValueError("limits must be non-negative")

    @property
    def effective_node_limit(self) -> int:
        return self.MAX_NODES if self.node_limit is None else min(self.node_limit, self.MAX_NODES)

    def scaled(self, fraction: float) -> "SolveLimits":
        """Same limits with the time budget pro-rated."""
        if self.time_limit is None:
            return self
        return SolveLimits(self.time_limit * fraction, self.gap_limit, self.node_limit)


@dataclass
class SolveStats:
    wall_time: float = 0.0
    nodes: int = 0
    simplex_iterations: int = 0


@dataclass
class LpSolution:
    status: str
    objective: float
    x: np.ndarray | None
    iterations: int


@dataclass
class MipSolution:
    status: SolveStatus
    objective: float
    x: np.ndarray | None
    best_bound: float
    gap: float
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


def relative_gap(objective: float, bound: float, eps: float = 1e-9) -> float:
    if not np.isfinite(objective):
        return np.inf
    if not np.isfinite(bound):
        return np.inf
    return max(0.0, (objective - bound) / max(abs(objective), eps))
