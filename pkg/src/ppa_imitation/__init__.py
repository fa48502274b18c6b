"""Imitation learning of optimisation experts for dynamic physician-to-patient
assignment.

Subpackages and modules:

- ``core``: patients, cost parameters, state, transition and simulator
- ``generator``: session and future-scenario sampling
- ``milp``: exact solvers (LP branch-and-bound, Lagrangian assignment search)
- ``experts``: myopic, deterministic, full-information, two-stage, aggregated
- ``learner``: feature map and a one-hidden-layer softmax policy
- ``dagger``: the data-aggregation training loop
- ``evaluation``: paired evaluation and metrics
- ``harness``: configuration files, experiment runs and the CLI
"""

from .core import CostParams, EpisodeRealization, Patient, SystemState, simulate
from .generator import GenConfig, sample_episode
from .milp import BACKEND

__version__ = "0.1.0"

__all__ = ["CostParams", "EpisodeRealization", "Patient", "SystemState", "simulate",
           "GenConfig", "sample_episode", "BACKEND", "__version__"]
