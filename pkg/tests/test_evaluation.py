import numpy as np
import pytest

from ppa_imitation.core import CostParams
from ppa_imitation.evaluation import (EvalConfig, MetricsRow, PolicySpec, evaluate_policy,
                                      run_episode, sign_test, summarize)
from ppa_imitation.experts import ExpertSpec
from ppa_imitation.generator import GenConfig
from ppa_imitation.learner import PolicyParams

PARAMS = CostParams()
GEN = GenConfig(mu_K=20.0, sigma_K=3.0)
CFG = EvalConfig(6, 99)


def test_config_guards():
    with pytest.raises(ValueError):
        EvalConfig(0)
    with pytest.raises(ValueError):
        PolicySpec("x", "magic")
    with pytest.raises(ValueError):
        PolicySpec("x", "expert")
    with pytest.raises(ValueError):
        PolicySpec("x", "learned")


def test_hindsight_is_lowest_on_paired_episodes():
    hind = evaluate_policy(PolicySpec("h", "hindsight"), CFG, PARAMS, GEN)
    greedy = evaluate_policy(PolicySpec("g", "greedy"), CFG, PARAMS, GEN)
    learned = evaluate_policy(PolicySpec("l", "learned", params=PolicyParams.init(4, 1)),
                              CFG, PARAMS, GEN)
    for other in (greedy, learned):
        assert all(h <= o for h, o in zip(hind.episode_costs, other.episode_costs))


def test_paired_episodes_identical_across_policies():
    a = [CFG.episode(j, GEN) for j in range(CFG.n_test_episodes)]
    b = [CFG.episode(j, GEN) for j in range(CFG.n_test_episodes)]
    assert a == b


def test_workers_do_not_change_metrics():
    spec = PolicySpec("t", "expert", ExpertSpec("two_stage", 2))
    a = evaluate_policy(spec, CFG, PARAMS, GEN, workers=1)
    b = evaluate_policy(spec, CFG, PARAMS, GEN, workers=3)
    assert a.csv_row() == b.csv_row()
    assert a.episode_costs == b.episode_costs


def test_metrics_row_format():
    row = MetricsRow("p", 1234.5678, 1.0, 2.0, 3.0, 0.01, 10)
    assert row.csv_row() == ["p", "10", "1234.57", "1.00", "2.00", "3.00"]
    with pytest.raises(ValueError):
        summarize("p", [])


def test_sign_test():
    wins, n, p = sign_test([2, 2, 2, 2, 2, 1], [1, 1, 1, 1, 1, 1])
    assert (wins, n) == (5, 5)
    assert p == pytest.approx(1 / 32)
    assert sign_test([1, 1], [1, 1]) == (0, 0, 1.0)
    assert sign_test([0, 0, 0], [1, 1, 1])[2] == 1.0


def test_episode_outcome_counts():
    ep = CFG.episode(0, GEN)
    out = run_episode(PolicySpec("g", "greedy"), ep, 0, 99, PARAMS, GEN)
    rejections = 200 * out.p1_rejected + 50 * out.p2_rejected
    # each undesirable assignment costs 5 (priority 2) or 20 (priority 1)
    assert rejections + 5 * out.undesirable <= out.cost <= rejections + 20 * out.undesirable
    assert out.n_decisions == len(ep)
