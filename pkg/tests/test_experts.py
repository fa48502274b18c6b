import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppa_imitation.core import (CostParams, Patient, SystemState, feasible_actions,
                                rollout_cost, states_along)
from ppa_imitation.experts import (EpisodeContext, ExpertLabel, ExpertSpec, aggregate_frequency,
                                   aggregated_deterministic, deterministic_action,
                                   full_information_action, full_information_labels,
                                   myopic_action, two_stage_action)
from ppa_imitation.generator import sample_episode
from ppa_imitation.milp import brute_force_assign, solve_ppa
from ppa_imitation.rng import RngStream

from conftest import DESK_GEN

PARAMS = CostParams()


def _mid_state(seed, k=5):
    ep = sample_episode(DESK_GEN, RngStream(seed, "x"))
    hind = full_information_labels(ep, PARAMS).actions
    k = min(k, len(ep) - 1)
    return ep, states_along(ep, hind[:k + 1], PARAMS)[k]


def test_labels():
    lab = ExpertLabel.hard(2)
    assert lab.target(3).tolist() == [0, 0, 1, 0]
    soft = ExpertLabel.soft([0.25, 0.25, 0.5, 0.0])
    assert soft.action == 2
    assert ExpertLabel.soft([0.5, 0.5, 0, 0]).action == 0
    with pytest.raises(ValueError):
        ExpertLabel.soft([0.5, 0.6])
    with pytest.raises(ValueError):
        soft.target(4)


def test_aggregate_frequency():
    f = aggregate_frequency([1, 1, 0, 3], 3)
    assert f.tolist() == [0.25, 0.5, 0.0, 0.25]
    with pytest.raises(ValueError):
        aggregate_frequency([], 3)
    with pytest.raises(ValueError):
        aggregate_frequency([4], 3)


def test_myopic_prefers_preferred():
    params = CostParams(L=(1, 1, 1))
    p = Patient(0, 10.0, 1, 2, (1, 2, 3), 0.2)
    s = SystemState.initial(p, params)
    assert myopic_action(s, params).action == 2
    s = SystemState.from_resources(0, p, [1, 0, 1], [0, 0, 0], [0, 0, 0])
    picks = {myopic_action(s, params, RngStream(1, "m", 0, 0, c)).action for c in range(40)}
    assert picks == {1, 3}
    s = SystemState.from_resources(0, p, [0, 0, 0], [0, 0, 0], [0, 0, 0])
    assert myopic_action(s, params).action == 0


@given(st.integers(0, 10**6))
def test_hindsight_labels_are_optimal_and_feasible(seed):
    ep = sample_episode(DESK_GEN.__class__(mu_K=8, sigma_K=1), RngStream(seed, "h"))
    params = CostParams(L=(2, 2, 2, 2), T=40.0)
    lab = full_information_labels(ep, params)
    cost, _ = rollout_cost(ep, lab.actions, params)
    assert lab.optimal
    assert cost == lab.objective
    if (params.P + 1) ** len(ep) <= 2 * 10**5:
        assert brute_force_assign(list(ep.patients), None, params, 10**6).objective == cost


def test_full_information_off_path_matches_on_path():
    ep, state = _mid_state(3)
    lab = full_information_labels(ep, PARAMS)
    k = state.epoch
    ctx = EpisodeContext.hindsight(state, PARAMS, ep.patients[k + 1:])
    a = full_information_action(state, ctx, PARAMS).action
    # any optimal action is fine; it must reach the hindsight optimum from here
    sol, acts = solve_ppa(list(ep.patients[k:]), state.residual(PARAMS), PARAMS)
    fixed = lab.actions[:k] + acts
    assert rollout_cost(ep, fixed, PARAMS)[0] == lab.objective
    assert a in feasible_actions(state, PARAMS)


def test_sampling_experts_refuse_future():
    ep, state = _mid_state(4)
    ctx = EpisodeContext.hindsight(state, PARAMS, ep.patients[state.epoch + 1:])
    with pytest.raises(ValueError):
        two_stage_action(state, ctx, 3, PARAMS, rng=RngStream(0))
    with pytest.raises(ValueError):
        deterministic_action(state, ctx, PARAMS, rng=RngStream(0))
    samp = EpisodeContext.sampling(state, PARAMS, DESK_GEN)
    with pytest.raises(ValueError):
        full_information_action(state, samp, PARAMS)
    with pytest.raises(ValueError):
        EpisodeContext(0, 0.1, ((1,), (1.0,)))


@given(st.integers(0, 10**6))
def test_expert_actions_feasible_and_reproducible(seed):
    ep, state = _mid_state(seed % 50, k=seed % 20)
    feas = feasible_actions(state, PARAMS)
    for kind in ("myopic", "deterministic", "two_stage", "full_information"):
        spec = ExpertSpec(kind, 3)
        a = spec.query(state, ep, PARAMS, DESK_GEN, RngStream(seed, "q", 0, 0, 1))
        b = spec.query(state, ep, PARAMS, DESK_GEN, RngStream(seed, "q", 0, 0, 1))
        assert a.action == b.action
        assert a.action in feas


@given(st.integers(0, 10**6), st.integers(1, 6))
def test_aggregated_soft_labels(seed, n):
    ep, state = _mid_state(seed % 30, k=seed % 15)
    ctx = EpisodeContext.sampling(state, PARAMS, DESK_GEN)
    lab = aggregated_deterministic(state, ctx, n, PARAMS, rng=RngStream(seed, "agg"))
    assert lab.kind == "soft"
    assert abs(lab.freq.sum() - 1.0) <= 1e-9
    assert lab.freq[~np.isin(np.arange(PARAMS.P + 1), feasible_actions(state, PARAMS))].sum() == 0
    if n == 1:
        assert sorted(lab.freq.tolist()) == [0.0] * PARAMS.P + [1.0]
    with pytest.raises(TypeError):
        aggregated_deterministic(state, ctx, n, PARAMS, rng=np.random.default_rng(0))


def test_two_stage_respects_time_budget_status():
    ep, state = _mid_state(6)
    ctx = EpisodeContext.sampling(state, PARAMS, DESK_GEN)
    from ppa_imitation.milp import SolveLimits
    lab = two_stage_action(state, ctx, 4, PARAMS, SolveLimits(node_limit=1), RngStream(1))
    assert lab.action in feasible_actions(state, PARAMS)
    assert lab.stats.n_sub_solves >= 1


def test_spec_validation():
    with pytest.raises(ValueError):
        ExpertSpec("oracle")
    with pytest.raises(ValueError):
        ExpertSpec("two_stage", 0)
