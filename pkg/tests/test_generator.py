import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppa_imitation.experts import EpisodeContext
from ppa_imitation.generator import (GenConfig, ScenarioSchedule, sample_eligibility,
                                     sample_episode, sample_future_scenarios)
from ppa_imitation.rng import RngStream

from conftest import DESK_GEN


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(physician_weights=(0.5, 0.4))
    with pytest.raises(ValueError):
        GenConfig(eligibility_size_range=(0, 2))
    with pytest.raises(ValueError):
        GenConfig(sigma_K=0.0)
    assert GenConfig().eligibility_size_range == (1, 4)
    assert GenConfig.uniform_weights(3).P == 3


def test_same_stream_same_episode():
    a = sample_episode(DESK_GEN, RngStream(7, "eval", 3))
    b = sample_episode(DESK_GEN, RngStream(7, "eval", 3))
    c = sample_episode(DESK_GEN, RngStream(7, "eval", 4))
    assert a == b
    assert a != c


@given(st.integers(0, 2**40))
def test_episode_invariants(seed):
    ep = sample_episode(DESK_GEN, RngStream(seed, "g"))
    scores = [p.arrival_score for p in ep.patients]
    assert scores == sorted(scores)
    for p in ep.patients:
        assert p.preferred in p.eligible
        assert set(p.eligible) <= {1, 2, 3, 4}
        assert p.duration > 0


def test_eligibility_size_range_respected():
    cfg = GenConfig(eligibility_size_range=(2, 3))
    g = np.random.default_rng(0)
    sizes = {len(sample_eligibility(cfg, g)[0]) for _ in range(300)}
    assert sizes == {2, 3}


def test_preferred_follows_weights():
    g = np.random.default_rng(1)
    cfg = GenConfig(eligibility_size_range=(4, 4))
    prefs = np.array([sample_eligibility(cfg, g)[1] for _ in range(4000)])
    share = np.bincount(prefs, minlength=5)[1:] / len(prefs)
    assert np.allclose(share, cfg.physician_weights, atol=0.03)


def _context(ep, k):
    p = ep.patients[k]
    return EpisodeContext(k, p.arrival_score, ((7,) * 4, (110.0,) * 4), gen_config=DESK_GEN)


@given(st.integers(0, 2**30), st.integers(0, 20))
def test_scenarios_follow_current_arrival(seed, k):
    ep = sample_episode(DESK_GEN, RngStream(seed, "s"))
    k = min(k, len(ep) - 1)
    ctx = _context(ep, k)
    sc = sample_future_scenarios(ctx, 5, RngStream(seed, "scen"), DESK_GEN)
    assert len(sc) == 5
    for fut in sc.scenarios:
        scores = [p.arrival_score for p in fut]
        assert scores == sorted(scores)
        assert all(s > ctx.current_score for s in scores)


def test_future_count_matches_conditional_mean():
    # With the current arrival at epoch k, the total is conditioned on K >= k + 1.
    ep = sample_episode(DESK_GEN, RngStream(1, "s"))
    ctx = _context(ep, 0)
    sc = sample_future_scenarios(ctx, 3000, RngStream(2, "scen"), DESK_GEN)
    mean = np.mean([len(f) for f in sc.scenarios])
    assert abs(mean - (DESK_GEN.mu_K - 1)) < 0.3


def test_late_scores_concentrate_class1():
    # Near the end of the day only high arrival scores remain; Beta(3,1) dominates there.
    ctx = EpisodeContext(20, 0.9, ((7,) * 4, (110.0,) * 4), gen_config=DESK_GEN)
    sc = sample_future_scenarios(ctx, 400, RngStream(3, "late"), DESK_GEN)
    pats = [p for f in sc.scenarios for p in f]
    share1 = np.mean([p.priority == 1 for p in pats])
    assert share1 > 0.5


def test_schedule():
    s = ScenarioSchedule(10, late_epoch=20, late_bonus=5)
    assert s.count(3) == 10 and s.count(20) == 15
