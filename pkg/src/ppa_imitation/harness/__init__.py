"""Configuration, orchestration and the command-line interface."""

from .config import ConfigError, RunConfig, load, loads, profile, with_overrides
from .runs import evaluate_artifact, metrics_csv, report, run_baselines, train_run

__all__ = ["ConfigError", "RunConfig", "load", "loads", "profile", "with_overrides",
           "evaluate_artifact", "metrics_csv", "report", "run_baselines", "train_run"]
