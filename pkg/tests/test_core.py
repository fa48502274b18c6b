import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppa_imitation.core import (REJECT, CostParams, EpisodeRealization, InfeasibleActionError,
                                Patient, SystemState, can_assign, feasible_actions, feasible_mask,
                                rollout_cost, simulate, states_along, step_cost, transition,
                                with_patient)
from ppa_imitation.generator import sample_episode
from ppa_imitation.rng import RngStream

from conftest import DESK_GEN


def _patient(**kw):
    base = dict(id=0, duration=20.0, priority=1, preferred=1, eligible=(1, 2), arrival_score=0.5)
    base.update(kw)
    return Patient(**base)


def test_patient_validation():
    with pytest.raises(ValueError):
        _patient(eligible=())
    with pytest.raises(ValueError):
        _patient(preferred=3)
    with pytest.raises(ValueError):
        _patient(duration=0.0)
    with pytest.raises(ValueError):
        _patient(priority=3)
    with pytest.raises(ValueError):
        _patient(arrival_score=1.5)


def test_cost_params_validation():
    with pytest.raises(ValueError):
        CostParams(c_rej=(50.0, 200.0))
    with pytest.raises(ValueError):
        CostParams(pref_ratio=1.0)
    with pytest.raises(ValueError):
        CostParams(L=(0, 7))
    p = CostParams()
    assert p.P == 4
    assert p.c_pref == (20.0, 5.0)


def test_step_costs():
    params = CostParams(L=(2, 2))
    s = SystemState.initial(_patient(priority=1), params)
    assert step_cost(s, REJECT, params) == 200.0
    assert step_cost(s, 1, params) == 0.0
    assert step_cost(s, 2, params) == 20.0
    s2 = SystemState.initial(_patient(priority=2), params)
    assert step_cost(s2, REJECT, params) == 50.0
    assert step_cost(s2, 2, params) == 5.0


def test_transition_updates_resources():
    params = CostParams(L=(2, 2), T=50.0)
    s = SystemState.initial(_patient(duration=30.0), params)
    nxt = _patient(id=1, duration=25.0, priority=2, preferred=2, arrival_score=0.6)
    s1 = transition(s, 1, nxt, params)
    assert s1.epoch == 1
    assert s1.physicians[0].slots_left == 1
    assert s1.physicians[0].workload == 30.0
    assert s1.physicians[0].priority1_count == 1
    assert s1.physicians[1].is_preferred
    # 25 more minutes no longer fit physician 1
    assert can_assign(s1, 1, params) == "workload"
    with pytest.raises(InfeasibleActionError) as err:
        transition(s1, 1, None, params)
    assert "workload" in str(err.value)


def test_eligibility_and_slots_checked():
    params = CostParams(L=(1, 1, 1))
    s = SystemState.initial(_patient(eligible=(1, 2), preferred=1), params)
    assert can_assign(s, 3, params) == "eligibility"
    s1 = transition(s, 1, _patient(id=1, arrival_score=0.6), params)
    assert can_assign(s1, 1, params) == "slots"
    assert feasible_actions(s1, params) == [0, 2]
    assert feasible_mask(s1, params).tolist() == [True, False, True, False]


def test_rejection_always_feasible():
    params = CostParams(L=(1,))
    s = SystemState.initial(_patient(eligible=(1,), duration=200.0), params)
    assert feasible_actions(s, params) == [REJECT]
    assert transition(s, REJECT, None, params).physicians[0].slots_left == 1


def test_episode_roundtrip_and_ordering():
    ep = sample_episode(DESK_GEN, RngStream(3, "t"))
    back = EpisodeRealization.from_jsonl(ep.to_jsonl())
    assert back == ep
    with pytest.raises(ValueError):
        EpisodeRealization(tuple(reversed(ep.patients)))
    with pytest.raises(ValueError):
        EpisodeRealization(())
    bad = ep.to_jsonl().splitlines()
    with pytest.raises(ValueError):
        EpisodeRealization.from_jsonl("\n".join(bad[:-1]))


def test_simulate_counts():
    params = CostParams()
    ep = sample_episode(DESK_GEN, RngStream(4, "t"))
    m = simulate(ep, params, lambda s, k: REJECT)
    n1 = sum(p.priority == 1 for p in ep.patients)
    assert m.p1_rejected == n1 and m.p2_rejected == len(ep) - n1
    assert m.cost == 200.0 * n1 + 50.0 * (len(ep) - n1)
    assert m.undesirable == 0


@given(st.integers(0, 10**6))
def test_random_feasible_rollouts_respect_capacity(seed):
    params = CostParams()
    ep = sample_episode(DESK_GEN, RngStream(seed, "prop"))
    g = np.random.default_rng(seed)
    picks = []

    def policy(state, k):
        a = int(g.choice(feasible_actions(state, params)))
        picks.append(a)
        return a
    m = simulate(ep, params, policy)
    cost, _ = rollout_cost(ep, picks, params)
    assert cost == m.cost
    states = states_along(ep, picks, params)
    final = transition(states[-1], picks[-1], None, params)
    for p, ph in enumerate(final.physicians):
        assert 0 <= ph.slots_left <= params.L[p]
        assert ph.workload <= params.T + 1e-9
    assert m.cost >= 0


def test_with_patient_recomputes_eligibility():
    params = CostParams(L=(2, 2))
    s = SystemState.initial(_patient(eligible=(1,), preferred=1), params)
    s2 = with_patient(s, _patient(eligible=(2,), preferred=2))
    assert s2.eligibility == (False, True)
    assert s2.physicians[1].is_preferred
