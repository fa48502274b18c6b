"""Run configuration: a TOML file with sections ``run``, ``gen``, ``costs``,
``expert``, ``dagger``, ``train`` and ``eval``.

Every key is checked against ``SCHEMA`` before anything runs; unknown
sections or keys are errors.  Missing keys take the defaults of the
corresponding dataclasses.  See ``configs/desk.toml`` for an annotated
example.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..core import CostParams
from ..dagger import DaggerConfig, DecisionRule
from ..evaluation import EvalConfig
from ..experts import EXPERT_KINDS, ExpertSpec
from ..generator import GenConfig
from ..learner import TrainConfig
from ..milp.model import SolveLimits

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Schema violation; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_num = (int, float)

# section -> key -> accepted python types (after TOML parsing)
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {"name": (str,), "master_seed": (int,), "workers": (int,)},
    "gen": {
        "mu_K": _num, "sigma_K": _num, "p_class1": _num, "beta_params": (list,),
        "lognormal_params": (list,), "physician_weights": (list,), "alpha": _num,
        "eligibility_size_range": (list,),
    },
    "costs": {"c_rej": (list,), "pref_ratio": _num, "T": _num, "L": (list,)},
    "expert": {
        "kind": (str,), "n_scenarios": (int,), "time_limit": _num, "gap_limit": _num,
        "node_limit": (int,), "baseline_scenarios": (int,),
    },
    "dagger": {
        "I": (int,), "H": (int,), "J": (int,), "skip_prob": _num, "rule": (str,),
        "lambda": _num, "beta0": _num, "threshold": _num, "initial_policy": (str,),
        "plateau": (int,), "eval_every_iteration": (bool,),
    },
    "train": {
        "learning_rate": _num, "epochs": (int,), "batch_size": (int,), "seed": (int,),
        "l2": _num, "warm_epochs": (int,), "warm_start": (bool,),
    },
    "eval": {"n_test_episodes": (int,), "test_seed_base": (int,)},
}


def validate(doc: dict) -> None:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a table")
    for sec, body in doc.items():
        if sec not in SCHEMA:
            raise ConfigError(sec, f"unknown section (allowed: {', '.join(SCHEMA)})")
        if not isinstance(body, dict):
            raise ConfigError(sec, "section must be a table")
        for key, val in body.items():
            allowed = SCHEMA[sec].get(key)
            if allowed is None:
                raise ConfigError(f"{sec}.{key}", "unknown key")
            if isinstance(val, bool) and bool not in allowed:
                raise ConfigError(f"{sec}.{key}", f"expected {allowed[0].__name__}, got bool")
            if not isinstance(val, allowed):
                raise ConfigError(f"{sec}.{key}",
                                  f"expected {' or '.join(t.__name__ for t in allowed)}, "
                                  f"got {type(val).__name__}")


@dataclass(frozen=True)
class RunConfig:
    name: str
    master_seed: int
    workers: int | None
    gen: GenConfig
    costs: CostParams
    expert: ExpertSpec
    baseline_scenarios: int
    dagger: DaggerConfig
    train: TrainConfig
    eval: EvalConfig
    raw: dict

    def digest(self, sections=None) -> str:
        """Hash of the resolved sections (all by default)."""
        part = self.raw if sections is None else {k: self.raw.get(k, {}) for k in sections}
        blob = json.dumps(part, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_toml(self) -> str:
        return dump_toml(self.raw)


def _build(section: str, fn, **kw):
    try:
        return fn(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc)) from None


def _resolved(doc: dict) -> dict:
    """Fill defaults so the snapshot written to a run directory is complete."""
    g, c, e, d, t, v = (doc.get(s, {}) for s in ("gen", "costs", "expert", "dagger", "train", "eval"))
    gen = GenConfig()
    costs = CostParams()
    tc = TrainConfig()
    ev = EvalConfig()
    dr = DecisionRule()
    out = {
        "run": {"name": doc.get("run", {}).get("name", "run"),
                "master_seed": doc.get("run", {}).get("master_seed", 0)},
        "gen": {
            "mu_K": float(g.get("mu_K", gen.mu_K)), "sigma_K": float(g.get("sigma_K", gen.sigma_K)),
            "p_class1": float(g.get("p_class1", gen.p_class1)),
            "beta_params": [list(map(float, x)) for x in g.get("beta_params", gen.beta_params)],
            "lognormal_params": [list(map(float, x))
                                 for x in g.get("lognormal_params", gen.lognormal_params)],
            "physician_weights": list(map(float, g.get("physician_weights", gen.physician_weights))),
            "alpha": float(g.get("alpha", gen.alpha)),
        },
        "costs": {
            "c_rej": list(map(float, c.get("c_rej", costs.c_rej))),
            "pref_ratio": float(c.get("pref_ratio", costs.pref_ratio)),
            "T": float(c.get("T", costs.T)), "L": list(map(int, c.get("L", costs.L))),
        },
        "expert": {"kind": e.get("kind", "two_stage"), "n_scenarios": e.get("n_scenarios", 10),
                   "baseline_scenarios": e.get("baseline_scenarios", e.get("n_scenarios", 10))},
        "dagger": {
            "I": d.get("I", 1), "H": d.get("H", 10), "J": d.get("J", 1),
            "skip_prob": float(d.get("skip_prob", 0.0)), "rule": d.get("rule", dr.kind),
            "lambda": float(d.get("lambda", dr.lam)), "beta0": float(d.get("beta0", dr.beta0)),
            "threshold": float(d.get("threshold", dr.threshold)),
            "initial_policy": d.get("initial_policy", "uniform"), "plateau": d.get("plateau", 0),
            "eval_every_iteration": d.get("eval_every_iteration", True),
        },
        "train": {
            "learning_rate": float(t.get("learning_rate", tc.learning_rate)),
            "epochs": t.get("epochs", tc.epochs), "batch_size": t.get("batch_size", tc.batch_size),
            "seed": t.get("seed", tc.seed), "l2": float(t.get("l2", tc.l2)),
            "warm_epochs": t.get("warm_epochs", tc.warm_epochs),
            "warm_start": t.get("warm_start", tc.warm_start),
        },
        "eval": {"n_test_episodes": v.get("n_test_episodes", ev.n_test_episodes),
                 "test_seed_base": v.get("test_seed_base", ev.test_seed_base)},
    }
    if "eligibility_size_range" in g:
        out["gen"]["eligibility_size_range"] = list(map(int, g["eligibility_size_range"]))
    for key in ("time_limit", "gap_limit", "node_limit"):
        if key in e:
            out["expert"][key] = e[key]
    if "workers" in doc.get("run", {}):
        out["run"]["workers"] = doc["run"]["workers"]
    return out


def from_dict(doc: dict) -> RunConfig:
    validate(doc)
    raw = _resolved(doc)
    g = raw["gen"]
    gen = _build("gen", GenConfig, mu_K=g["mu_K"], sigma_K=g["sigma_K"], p_class1=g["p_class1"],
                 beta_params=tuple(map(tuple, g["beta_params"])),
                 lognormal_params=tuple(map(tuple, g["lognormal_params"])),
                 physician_weights=tuple(g["physician_weights"]), alpha=g["alpha"],
                 eligibility_size_range=(tuple(g["eligibility_size_range"])
                                         if "eligibility_size_range" in g else None))
    c = raw["costs"]
    costs = _build("costs", CostParams, c_rej=tuple(c["c_rej"]), pref_ratio=c["pref_ratio"],
                   T=c["T"], L=tuple(c["L"]))
    if costs.P != gen.P:
        raise ConfigError("costs.L", f"{costs.P} physicians but gen has {gen.P} weights")
    e = raw["expert"]
    if e["kind"] not in EXPERT_KINDS:
        raise ConfigError("expert.kind", f"must be one of {EXPERT_KINDS}")
    limits = _build("expert", SolveLimits, time_limit=e.get("time_limit"),
                    gap_limit=e.get("gap_limit"), node_limit=e.get("node_limit"))
    expert = _build("expert", ExpertSpec, kind=e["kind"], n_scenarios=e["n_scenarios"],
                    limits=limits)
    v = raw["eval"]
    ev = _build("eval", EvalConfig, n_test_episodes=v["n_test_episodes"],
                test_seed_base=v["test_seed_base"])
    d = raw["dagger"]
    rule = _build("dagger", DecisionRule, kind=d["rule"], lam=d["lambda"], beta0=d["beta0"],
                  threshold=d["threshold"])
    workers = raw["run"].get("workers")
    dag = _build("dagger", DaggerConfig, I=d["I"], H=d["H"], J=d["J"], skip_prob=d["skip_prob"],
                 experts=(expert,), rule=rule, initial_policy=d["initial_policy"],
                 plateau=d["plateau"] or None, eval=ev if d["eval_every_iteration"] else None,
                 workers=workers)
    t = raw["train"]
    tc = _build("train", TrainConfig, learning_rate=t["learning_rate"], epochs=t["epochs"],
                batch_size=t["batch_size"], seed=t["seed"], l2=t["l2"],
                warm_epochs=t["warm_epochs"], warm_start=t["warm_start"])
    return RunConfig(raw["run"]["name"], raw["run"]["master_seed"], workers, gen, costs, expert,
                     e["baseline_scenarios"], dag, tc, ev, raw)


def loads(text: str) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<toml>", str(exc)) from None
    return from_dict(doc)


def load(path) -> RunConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


def profile(name: str) -> RunConfig:
    """Bundled profile (``desk`` or ``full``)."""
    text = resources.files("ppa_imitation").joinpath("configs", f"{name}.toml").read_text("utf-8")
    return loads(text)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return str(v)


def dump_toml(doc: dict) -> str:
    lines = []
    for sec, body in doc.items():
        lines.append(f"[{sec}]")
        for k, v in body.items():
            if v is None:
                continue
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    return "\n".join(lines)


def with_overrides(cfg: RunConfig, **sections) -> RunConfig:
    """Copy of ``cfg`` with some keys replaced, e.g. ``dagger={"I": 2}``."""
    doc = json.loads(json.dumps(cfg.raw))
    for sec, body in sections.items():
        doc.setdefault(sec, {}).update(body)
        for k in [k for k, v in doc[sec].items() if v is None]:
            del doc[sec][k]
    return from_dict(doc)


__all__ = ["ConfigError", "SCHEMA", "RunConfig", "validate", "from_dict", "loads", "load",
           "profile", "dump_toml", "with_overrides"]
