import json
import os
import subprocess
import sys

import pytest

from ppa_imitation.harness import config as cfgmod
from ppa_imitation.harness.cli import main
from ppa_imitation.core import Patient
from ppa_imitation.milp import brute_force_assign
from ppa_imitation.core import CostParams

TINY = """
[run]
name = "tiny"
master_seed = 5

[gen]
mu_K = 12.0
sigma_K = 2.0

[expert]
kind = "two_stage"
n_scenarios = 2
node_limit = 20000

[dagger]
I = 1
H = 2

[train]
epochs = 3

[eval]
n_test_episodes = 2
test_seed_base = 4242
"""


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(TINY)
    return path


def test_profiles_load():
    desk = cfgmod.profile("desk")
    assert desk.costs.P == 4 and desk.gen.mu_K == 30.0
    assert desk.expert.kind == "two_stage" and desk.expert.n_scenarios == 10
    assert desk.eval.n_test_episodes == 100
    full = cfgmod.profile("full")
    assert full.gen.mu_K == 100.0


def test_schema_rejects_unknown_keys_and_types():
    with pytest.raises(cfgmod.ConfigError) as err:
        cfgmod.loads("[gen]\nmu = 3\n")
    assert err.value.path == "gen.mu"
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.loads("[nonsense]\n")
    with pytest.raises(cfgmod.ConfigError) as err:
        cfgmod.loads('[dagger]\nI = "two"\n')
    assert err.value.path == "dagger.I"
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.loads("[costs]\nL = [7, 7]\n")          # 2 physicians vs 4 weights
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.loads('[expert]\nkind = "oracle"\n')
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.loads("[dagger\n")


def test_snapshot_roundtrip():
    cfg = cfgmod.profile("desk")
    again = cfgmod.loads(cfg.to_toml())
    assert again.raw == cfg.raw
    assert again.digest() == cfg.digest()
    changed = cfgmod.with_overrides(cfg, dagger={"I": 3})
    assert changed.dagger.I == 3 and changed.digest() != cfg.digest()
    assert changed.digest(("gen", "costs", "eval")) == cfg.digest(("gen", "costs", "eval"))


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_gen(tmp_path, tiny, capsys):
    code, out, _ = _run(["gen", "--config", str(tiny), "--n", "10", "--out", str(tmp_path / "d")],
                        capsys)
    assert code == 0
    files = sorted(p.name for p in (tmp_path / "d").iterdir())
    assert len(files) == 11 and "manifest.json" in files
    man = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert man["seed"] == 5 and len(man["config_hash"]) == 16


def test_cli_solve_matches_brute_force(tmp_path, capsys):
    pats = [Patient(0, 30.0, 1, 1, (1, 2), 0.1), Patient(1, 40.0, 2, 1, (1,), 0.4),
            Patient(2, 50.0, 1, 2, (2,), 0.7)]
    doc = {"patients": [p.to_dict() for p in pats], "costs": {"L": [1, 1], "T": 60.0}}
    (tmp_path / "tiny.json").write_text(json.dumps(doc))
    code, out, _ = _run(["solve", str(tmp_path / "tiny.json")], capsys)
    assert code == 0
    sol = json.loads(out)
    bf = brute_force_assign(pats, None, CostParams(L=(1, 1), T=60.0))
    assert sol["objective"] == bf.objective and sol["status"] == "Optimal"
    code, out, _ = _run(["export-mps", str(tmp_path / "tiny.json"), "--out",
                         str(tmp_path / "t.mps")], capsys)
    assert code == 0 and (tmp_path / "t.mps").read_text().startswith("NAME")


def test_cli_errors_are_json(tmp_path, capsys):
    code, _, err = _run(["frobnicate"], capsys)
    assert code != 0 and json.loads(err)["error"] == "usage"
    code, _, err = _run(["solve", str(tmp_path / "missing.json")], capsys)
    assert code != 0 and json.loads(err)["error"] == "missing_file"
    bad = tmp_path / "bad.toml"
    bad.write_text("[gen]\nwhat = 1\n")
    code, _, err = _run(["baseline", "--config", str(bad)], capsys)
    assert code != 0 and json.loads(err)["path"] == "gen.what"


def test_cli_train_evaluate_report(tmp_path, tiny, capsys):
    run = tmp_path / "run"
    code, out, _ = _run(["train", "--config", str(tiny), "--out", str(run)], capsys)
    assert code == 0
    assert sorted(p.name for p in run.glob("policy_*.json")) == ["policy_i1.json"]
    assert len((run / "records.csv").read_text().splitlines()) == 2
    assert cfgmod.load(run / "config.toml").raw == cfgmod.load(tiny).raw
    csv = tmp_path / "m.csv"
    code, _, _ = _run(["evaluate", "--config", str(tiny), str(run / "policy_i1.json"),
                       "--out", str(csv)], capsys)
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "policy_id,n_episodes,avg_cost,p1_rejected,p2_rejected,undesirable"
    assert lines[1].startswith("policy_i1,2,")
    code, out, _ = _run(["report", str(run)], capsys)
    assert code == 0 and out.splitlines()[1].startswith("run,1,")
    # a second run under a different evaluation block cannot be aggregated
    other = tmp_path / "c2.toml"
    other.write_text(TINY.replace("test_seed_base = 4242", "test_seed_base = 1"))
    run2 = tmp_path / "run2"
    assert main(["train", "--config", str(other), "--out", str(run2)]) == 0
    capsys.readouterr()
    code, _, err = _run(["report", str(run), str(run2)], capsys)
    assert code != 0 and json.loads(err)["error"] == "config"


def test_cli_baseline(tmp_path, tiny, capsys):
    code, _, _ = _run(["baseline", "--config", str(tiny), "--out", str(tmp_path / "b.csv")], capsys)
    assert code == 0
    rows = (tmp_path / "b.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["greedy", "two_stage_2", "hindsight"]


def test_workers_env_override(tiny, tmp_path, monkeypatch):
    from ppa_imitation.parallel import resolve_workers
    monkeypatch.setenv("PPA_IMITATION_WORKERS", "3")
    assert resolve_workers(1) == 3
    monkeypatch.setenv("PPA_IMITATION_WORKERS", "x")
    with pytest.raises(ValueError):
        resolve_workers()


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ppa_imitation.harness.cli", "--help"],
                          capture_output=True, text=True, env={**os.environ})
    assert proc.returncode == 0 and "gen" in proc.stdout
