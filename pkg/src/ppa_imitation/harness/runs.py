"""Experiment orchestration: baselines, training runs, evaluation, reports.

A training run directory contains::

    config.toml        resolved configuration snapshot
    dataset.jsonl      aggregated (features, target) rows with provenance
    policy_i{i}.json   policy after iteration i
    run.json           best iteration, dataset fingerprint, expert failures
    records.csv        per-iteration learning-curve rows
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import replace
from pathlib import Path

from ..dagger import DaggerResult, read_records, run_dagger, write_records
from ..evaluation import MetricsRow, PolicySpec, evaluate_policy
from ..experts import ExpertSpec
from ..learner import load_policy, save_policy
from . import config as cfgmod
from .config import RunConfig

# Sections that define what an evaluation number means; runs compared in one
# report must agree on them.
EVAL_BASIS = ("gen", "costs", "eval")


def metrics_csv(rows: list[MetricsRow]) -> str:
    """Comma-separated, header row, LF line ends, costs to two decimals.

    Timing is left out on purpose so that files are comparable byte for byte.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MetricsRow.CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_row())
    return buf.getvalue()


def write_metrics(path, rows: list[MetricsRow]) -> None:
    Path(path).write_text(metrics_csv(rows), encoding="utf-8", newline="")


def baseline_specs(cfg: RunConfig) -> list[PolicySpec]:
    pit = ExpertSpec("two_stage", cfg.baseline_scenarios, cfg.expert.limits)
    return [
        PolicySpec("greedy", "greedy"),
        PolicySpec(f"two_stage_{cfg.baseline_scenarios}", "expert", pit),
        PolicySpec("hindsight", "hindsight", limits=cfg.expert.limits),
    ]


def run_baselines(cfg: RunConfig, workers: int | None = None) -> list[MetricsRow]:
    w = cfg.workers if workers is None else workers
    return [evaluate_policy(s, cfg.eval, cfg.costs, cfg.gen, w) for s in baseline_specs(cfg)]


def train_run(cfg: RunConfig, out_dir, workers: int | None = None, log=None) -> DaggerResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(cfg.to_toml(), encoding="utf-8")
    dag = cfg.dagger
    if workers is not None:
        dag = replace(dag, workers=workers)
    res = run_dagger(dag, cfg.gen, cfg.costs, cfg.train, cfg.master_seed, log=log)
    fp = res.dataset.fingerprint()
    for i, pol in enumerate(res.policies, start=1):
        save_policy(out / f"policy_i{i}.json", pol, cfg.costs.P, cfg.train, fp)
    res.dataset.to_jsonl(out / "dataset.jsonl")
    write_records(out / "records.csv", res.records)
    summary = {"best_iteration": res.best_iteration,
               "best_policy": f"policy_i{res.best_iteration}.json",
               "dataset_fingerprint": fp, "failures": res.failures}
    (out / "run.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return res


def evaluate_artifact(cfg: RunConfig, policy_path, policy_id: str | None = None,
                      workers: int | None = None) -> MetricsRow:
    params = load_policy(policy_path, cfg.costs.P)
    spec = PolicySpec(policy_id or Path(policy_path).stem, "learned", params=params)
    w = cfg.workers if workers is None else workers
    return evaluate_policy(spec, cfg.eval, cfg.costs, cfg.gen, w)


def report(run_dirs) -> list[dict]:
    """One summary row per run; refuses runs whose evaluation basis differs."""
    rows, basis = [], None
    for d in map(Path, run_dirs):
        cfg = cfgmod.load(d / "config.toml")
        key = cfg.digest(EVAL_BASIS)
        if basis is None:
            basis = key
        elif key != basis:
            raise cfgmod.ConfigError(str(d), "run was evaluated under a different configuration; "
                                     "refusing to aggregate")
        recs = read_records(d / "records.csv")
        costs = [float(r["eval_cost"]) for r in recs]
        finite = [c for c in costs if c == c]
        best = min(finite) if finite else float("nan")
        rows.append({
            "run": d.name, "iterations": len(recs),
            "dataset_size": int(recs[-1]["dataset_size"]) if recs else 0,
            "best_iteration": costs.index(best) + 1 if finite else 0,
            "best_eval_cost": best, "final_eval_cost": costs[-1] if costs else float("nan"),
        })
    if rows:
        ref = rows[0]["best_eval_cost"]
        for r in rows:
            r["improvement_pct"] = 100.0 * (ref - r["best_eval_cost"]) / ref if ref else 0.0
    return rows


def format_report(rows: list[dict]) -> str:
    cols = ["run", "iterations", "dataset_size", "best_iteration", "best_eval_cost",
            "final_eval_cost", "improvement_pct"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([f"{r[c]:.2f}" if isinstance(r[c], float) else r[c] for c in cols])
    return buf.getvalue()


__all__ = ["EVAL_BASIS", "metrics_csv", "write_metrics", "baseline_specs", "run_baselines",
           "train_run", "evaluate_artifact", "report", "format_report"]
