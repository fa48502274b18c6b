"""Command-line entry point ``ppa-imitation``.

Subcommands: gen, solve, export-mps, baseline, train, evaluate, report.
Errors exit non-zero with a one-line JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..core import CostParams, EpisodeRealization, Patient
from ..generator import sample_episode
from ..milp import SolveLimits, build_ppa_model, export_mps, solve_ppa
from ..rng import RngStream
from . import config as cfgmod
from . import runs


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = 1):
        super().__init__(message)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message, 2)


def _load_config(path) -> cfgmod.RunConfig:
    if path is None:
        return cfgmod.profile("desk")
    if not Path(path).is_file():
        raise CliError("missing_file", f"config file not found: {path}")
    return cfgmod.load(path)


def _read_instance(path):
    """Instance JSON (``patients`` plus optional ``costs``/``residual``) or an
    episode JSON-lines file."""
    p = Path(path)
    if not p.is_file():
        raise CliError("missing_file", f"instance file not found: {path}")
    text = p.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        ep = EpisodeRealization.from_jsonl(text)
        P = json.loads(text.splitlines()[0]).get("P", ep.P)
        return list(ep.patients), None, CostParams(L=(7,) * P)
    costs = CostParams(**{k: tuple(v) if isinstance(v, list) else v
                          for k, v in doc.get("costs", {}).items()})
    patients = [Patient.from_dict(r) for r in doc["patients"]]
    res = doc.get("residual")
    residual = None if res is None else (res["slots"], res["minutes"])
    return patients, residual, costs


def _limits(args) -> SolveLimits:
    return SolveLimits(args.time_limit, args.gap_limit, args.node_limit)


def cmd_gen(args) -> dict:
    cfg = _load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.master_seed if args.seed is None else args.seed
    files = []
    for j in range(args.n):
        ep = sample_episode(cfg.gen, RngStream(seed, "gen", j))
        name = f"episode_{j:05d}.jsonl"
        (out / name).write_text(ep.to_jsonl(cfg.gen.P), encoding="utf-8")
        files.append(name)
    manifest = {"seed": seed, "n": args.n, "config_hash": cfg.digest(("gen",)),
                "gen": cfg.raw["gen"], "files": files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return {"written": len(files), "out": str(out)}


def cmd_solve(args) -> dict:
    patients, residual, costs = _read_instance(args.instance)
    sol, actions = solve_ppa(patients, residual, costs, _limits(args), method=args.method)
    out = {
        "status": sol.status.value, "objective": sol.objective, "best_bound": sol.best_bound,
        "gap": sol.gap, "actions": actions,
        "stats": {"wall_time": sol.stats.wall_time, "nodes": sol.stats.nodes,
                  "simplex_iterations": sol.stats.simplex_iterations},
    }
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2), encoding="utf-8")
    return out


def cmd_export_mps(args) -> dict:
    patients, residual, costs = _read_instance(args.instance)
    data = export_mps(build_ppa_model(patients, residual, costs))
    Path(args.out).write_bytes(data)
    return {"out": args.out, "bytes": len(data)}


def cmd_baseline(args) -> dict:
    cfg = _load_config(args.config)
    rows = runs.run_baselines(cfg, args.workers)
    text = runs.metrics_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)
    return {"rows": [r.to_dict() for r in rows]}


def cmd_train(args) -> dict:
    cfg = _load_config(args.config)

    def log(rec):
        print(json.dumps({"iteration": rec.iteration, "dataset_size": rec.dataset_size,
                          "train_loss": rec.train_loss, "eval_cost": rec.eval_cost}),
              file=sys.stderr)
    res = runs.train_run(cfg, args.out, args.workers, log=log if args.verbose else None)
    return {"out": args.out, "iterations": len(res.records), "best_iteration": res.best_iteration,
            "dataset_size": len(res.dataset)}


def cmd_evaluate(args) -> dict:
    cfg = _load_config(args.config)
    if not Path(args.policy).is_file():
        raise CliError("missing_file", f"policy artifact not found: {args.policy}")
    row = runs.evaluate_artifact(cfg, args.policy, args.policy_id, args.workers)
    text = runs.metrics_csv([row])
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)
    return row.to_dict()


def cmd_report(args) -> dict:
    for d in args.runs:
        if not (Path(d) / "records.csv").is_file():
            raise CliError("missing_file", f"no records.csv in {d}")
    rows = runs.report(args.runs)
    sys.stdout.write(runs.format_report(rows))
    return {"runs": len(rows)}


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ppa-imitation", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, config=True, workers=True):
        if config:
            p.add_argument("--config", help="run configuration (TOML); default: desk profile")
        if workers:
            p.add_argument("--workers", type=int, default=None,
                           help="worker processes (env PPA_IMITATION_WORKERS overrides)")

    p = sub.add_parser("gen", help="write an episode corpus and manifest")
    common(p, workers=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_gen)

    for name, fn, hlp in (("solve", cmd_solve, "solve one instance"),
                          ("export-mps", cmd_export_mps, "write the instance model as MPS")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("instance")
        p.add_argument("--out", required=(name == "export-mps"))
        if name == "solve":
            p.add_argument("--method", choices=("assign", "lp"), default="assign")
            p.add_argument("--time-limit", type=float, default=None)
            p.add_argument("--gap-limit", type=float, default=None)
            p.add_argument("--node-limit", type=int, default=None)
        p.set_defaults(fn=fn)

    p = sub.add_parser("baseline", help="evaluate greedy, two-stage and hindsight policies")
    common(p)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("train", help="run DAgger as configured")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a policy artifact")
    common(p)
    p.add_argument("policy")
    p.add_argument("--policy-id")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("report", help="summarise training runs")
    p.add_argument("runs", nargs="+")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        result = args.fn(args)
        if args.command in ("gen", "solve", "export-mps", "train"):
            print(json.dumps(result))
        return 0
    except CliError as exc:
        err = {"error": exc.kind, "message": str(exc)}
        code = exc.code
    except cfgmod.ConfigError as exc:
        err = {"error": "config", "path": exc.path, "message": str(exc)}
        code = 2
    except (ValueError, KeyError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        code = 1
    print(json.dumps(err), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
