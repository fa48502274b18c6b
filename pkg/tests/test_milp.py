import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from ppa_imitation.core import CostParams, Patient
from ppa_imitation.generator import sample_episode
from ppa_imitation.milp import (BACKEND, EQ, GE, LE, ModelBuilder, SolveLimits, SolveStatus,
                                SolverError, brute_force_assign, brute_force_solve,
                                build_ppa_model, build_sppa_model, export_mps, first_action,
                                objective_step, solve_assignment, solve_lp, solve_mip, solve_ppa,
                                solve_sppa_by_enumeration)
from ppa_imitation.milp import _assign_py, _lp_py
from ppa_imitation.milp.assign import cost_step, instance_arrays, search_order
from ppa_imitation.rng import RngStream

from conftest import DESK_GEN, patient_lists, random_patients, random_residual


# ---------------------------------------------------------------- LP kernel

@st.composite
def bounded_lps(draw):
    n = draw(st.integers(1, 6))
    m = draw(st.integers(0, 5))
    g = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    c = g.integers(-5, 6, size=n).astype(float)
    A = g.integers(-3, 4, size=(m, n)).astype(float)
    sense = g.choice([LE, GE, EQ], size=m, p=[0.6, 0.25, 0.15])
    lb = np.zeros(n)
    ub = g.integers(1, 5, size=n).astype(float)
    x0 = g.uniform(lb, ub)
    rhs = A @ x0 + np.where(sense == LE, 1.0, np.where(sense == GE, -1.0, 0.0))
    # Occasionally an infeasible row.
    if m and g.random() < 0.15:
        rhs[0] = -100.0 if sense[0] != GE else 100.0
    return c, A, sense, rhs, lb, ub


def _scipy(c, A, sense, rhs, lb, ub):
    le, ge, eq = sense == LE, sense == GE, sense == EQ
    A_ub = np.vstack([A[le], -A[ge]]) if (le | ge).any() else None
    b_ub = np.concatenate([rhs[le], -rhs[ge]]) if (le | ge).any() else None
    r = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A[eq] if eq.any() else None,
                b_eq=rhs[eq] if eq.any() else None, bounds=list(zip(lb, ub)), method="highs")
    return r


@given(bounded_lps())
def test_lp_kernel_matches_scipy(lp):
    c, A, sense, rhs, lb, ub = lp
    status, x, obj, _ = _lp_py.lp_solve(c, A, sense, rhs, lb, ub)
    ref = _scipy(c, A, sense, rhs, lb, ub)
    if ref.status == 2:
        assert status == _lp_py.INFEASIBLE
        return
    assert status == _lp_py.OPTIMAL
    assert obj == pytest.approx(ref.fun, abs=1e-7)
    assert (x >= lb - 1e-9).all() and (x <= ub + 1e-9).all()


def test_lp_on_textbook_problem():
    b = ModelBuilder()
    b.add_var("x", "continuous", ub=10, cost=-3)
    b.add_var("y", "continuous", ub=10, cost=-5)
    b.add_constraint({"x": 1}, LE, 4)
    b.add_constraint({"y": 2}, LE, 12)
    b.add_constraint({"x": 3, "y": 2}, LE, 18)
    sol = solve_lp(b.build(), relax=False)
    assert sol.status == "Optimal"
    assert sol.objective == pytest.approx(-36.0)
    assert sol.x == pytest.approx([2.0, 6.0])


def test_lp_relax_flag_guards_integers():
    b = ModelBuilder()
    b.add_var("z", cost=1.0)
    with pytest.raises(ValueError):
        solve_lp(b.build(), relax=False)


@pytest.mark.skipif(BACKEND != "cython", reason="compiled kernels not built")
@given(bounded_lps())
def test_lp_compiled_kernel_identical(lp):
    from ppa_imitation.milp import _lp_core
    a = _lp_py.lp_solve(*lp)
    b = _lp_core.lp_solve(*lp)
    assert a[0] == b[0] and a[3] == b[3]
    if a[0] == _lp_py.OPTIMAL:
        assert np.array_equal(a[1], b[1]) and a[2] == b[2]


# ---------------------------------------------------------------- models and MIP

def test_model_validation():
    b = ModelBuilder()
    b.add_var("x")
    with pytest.raises(ValueError):
        b.add_var("x")
    with pytest.raises(KeyError):
        b.add_constraint({"nope": 1}, LE, 1)
    with pytest.raises(ValueError):
        b.add_var("y", kind="integer")


def test_ppa_model_structure():
    params = CostParams(L=(2, 2))
    pats = [Patient(0, 10.0, 1, 1, (1, 2), 0.1), Patient(1, 20.0, 2, 2, (2,), 0.2)]
    m = build_ppa_model(pats, None, params)
    # one reject variable per patient plus one per eligible physician
    assert m.n_vars == 2 + 2 + 1
    assert m.is_int.all()
    x = np.zeros(m.n_vars)
    for j, key in enumerate(m.keys):
        if key[0] == "u":
            x[j] = 1
    assert m.is_feasible(x)
    assert m.objective(x) == 250.0


@given(patient_lists(max_k=5, max_p=3, min_k=1))
def test_mip_matches_brute_force(inst):
    pats, residual, params = inst
    model = build_ppa_model(pats, residual, params)
    sol = solve_mip(model)
    bf = brute_force_solve(pats, residual, params)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == bf.objective
    assert model.is_feasible(sol.x)
    assert model.objective(sol.x) == sol.objective


@given(patient_lists(max_k=7, max_p=3))
def test_assignment_search_matches_brute_force(inst):
    pats, residual, params = inst
    res = solve_assignment(pats, residual, params)
    bf = brute_force_assign(pats, residual, params)
    assert res.optimal
    assert res.objective == bf.objective
    if not pats:
        return
    # the returned plan is feasible and achieves the reported value
    model = build_ppa_model(pats, residual, params)
    sol, acts = solve_ppa(pats, residual, params)
    assert acts == list(res.actions)
    assert model.is_feasible(sol.x)
    assert model.objective(sol.x) == pytest.approx(res.objective, abs=1e-9)


def test_brute_force_on_binary_model():
    b = ModelBuilder()
    b.add_var("x", cost=-2.0)
    b.add_var("y", cost=-3.0)
    b.add_constraint({"x": 1, "y": 1}, LE, 1)
    sol = brute_force_solve(b.build())
    assert sol.objective == -3.0
    b.add_constraint({"x": 1, "y": 1}, GE, 3)
    assert brute_force_solve(b.build()).status is SolveStatus.INFEASIBLE


def test_brute_force_size_cap():
    g = np.random.default_rng(0)
    pats = random_patients(g, 12, 3)
    with pytest.raises(ValueError):
        brute_force_assign(pats, None, CostParams(L=(4, 4, 4)), size_cap=1000)


def test_node_limit_reports_gap():
    ep = sample_episode(DESK_GEN, RngStream(2, "ep"))
    params = CostParams()
    sol = solve_mip(build_ppa_model(list(ep.patients), None, params), SolveLimits(node_limit=3))
    assert sol.status in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE_WITHIN_LIMITS)
    assert sol.stats.nodes <= 3
    assert sol.best_bound <= sol.objective + 1e-9
    if sol.status is SolveStatus.FEASIBLE_WITHIN_LIMITS:
        assert sol.gap > 0


def test_mip_infeasible_and_limit_errors():
    b = ModelBuilder()
    b.add_var("x")
    b.add_constraint({"x": 1}, GE, 2)
    assert solve_mip(b.build()).status is SolveStatus.INFEASIBLE
    b = ModelBuilder()
    for i in range(6):
        b.add_var(f"x{i}", cost=1.0)
    b.add_constraint({f"x{i}": 2 for i in range(6)}, EQ, 3)
    with pytest.raises(SolverError):
        solve_mip(b.build(), SolveLimits(node_limit=0))


def test_objective_step():
    params = CostParams()
    pats = random_patients(np.random.default_rng(1), 4, 4)
    assert objective_step(build_ppa_model(pats, None, params)) == 5.0
    assert cost_step([200.0, 50.0, 20.0, 5.0]) == 5.0
    assert cost_step([0.5, 0.25]) == 0.25
    assert cost_step([math.pi, 1.0]) == -1.0


def test_search_order():
    order = search_order(np.array([10.0, 30.0, 30.0]), np.array([50.0, 50.0, 200.0]))
    assert order.tolist() == [2, 1, 0]


# ---------------------------------------------------------------- assignment kernels

def _kernel_args(seed):
    g = np.random.default_rng(seed)
    P = int(g.integers(1, 5))
    pats = random_patients(g, int(g.integers(0, 20)), P)
    params = CostParams(L=(7,) * P)
    t, rc, pc, pref, elig = instance_arrays(pats, params)
    order = search_order(t, rc)
    S, W = random_residual(g, P, 6, 110.0)
    kw = dict(step=5.0, node_limit=int(g.integers(1, 3000)), sc_sg=int(g.integers(1, 11)))
    return (t[order], rc[order], pc[order], pref[order], elig[order], S, W), kw


@pytest.mark.skipif(BACKEND != "cython", reason="compiled kernels not built")
@given(st.integers(0, 2**32 - 1))
def test_assign_compiled_kernel_identical(seed):
    from ppa_imitation.milp import _assign_core
    args, kw = _kernel_args(seed)
    a = _assign_py.assign_solve(*args, **kw)
    b = _assign_core.assign_solve(*args, **kw)
    assert a[0] == b[0] and a[1] == b[1] and a[3] == b[3] and a[4] == b[4] and a[5] == b[5]
    assert np.array_equal(a[2], b[2]) and np.array_equal(a[6], b[6])


def test_assign_limit_keeps_feasible_incumbent():
    ep = sample_episode(DESK_GEN, RngStream(20, "ep"))
    params = CostParams()
    res = solve_assignment(list(ep.patients), None, params, SolveLimits(node_limit=1))
    model = build_ppa_model(list(ep.patients), None, params)
    sol, acts = solve_ppa(list(ep.patients), None, params, SolveLimits(node_limit=1))
    assert model.is_feasible(sol.x)
    assert res.best_bound <= res.objective + 1e-9


def test_solve_ppa_methods_agree_on_desk_episode():
    ep = sample_episode(DESK_GEN, RngStream(5, "ep"))
    pats = list(ep.patients[:10])
    a, _ = solve_ppa(pats, None, CostParams(), method="assign")
    b, _ = solve_ppa(pats, None, CostParams(), method="lp")
    assert a.objective == b.objective
    with pytest.raises(ValueError):
        solve_ppa(pats, None, CostParams(), method="nope")


# ---------------------------------------------------------------- two-stage

@st.composite
def sppa_instances(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    g = np.random.default_rng(seed)
    P = int(g.integers(1, 4))
    params = CostParams(L=(3,) * P)
    first = random_patients(g, 1, P)[0]
    scen = [random_patients(g, int(g.integers(0, 5)), P) for _ in range(int(g.integers(1, 4)))]
    return first, scen, random_residual(g, P, 3, 70.0), params


@given(sppa_instances())
def test_enumeration_matches_extensive_form(inst):
    first, scen, residual, params = inst
    model = build_sppa_model(first, scen, residual, params)
    ext = solve_mip(model)
    for method in ("assign", "lp"):
        res = solve_sppa_by_enumeration(first, scen, residual, params, method=method)
        assert res.exact
        assert abs(res.value - ext.objective) <= 1e-9 * max(1.0, abs(ext.objective))
        # the chosen first action reaches the same value when fixed in the model
        assert res.values[res.action] == res.value
    # the extensive form's own first action is one of the optimal candidates
    lp_vals = solve_sppa_by_enumeration(first, scen, residual, params, method="lp").values
    assert lp_vals[first_action(model, ext.x)] == pytest.approx(ext.objective, abs=1e-9)


def test_enumeration_needs_scenarios():
    p = Patient(0, 10.0, 1, 1, (1,), 0.5)
    with pytest.raises(ValueError):
        solve_sppa_by_enumeration(p, [], None, CostParams(L=(2,)))


# ---------------------------------------------------------------- MPS

def test_mps_layout():
    pats = [Patient(0, 10.0, 1, 1, (1, 2), 0.1)]
    text = export_mps(build_ppa_model(pats, None, CostParams(L=(2, 2)))).decode("ascii")
    lines = text.splitlines()
    assert lines[0].startswith("NAME")
    for head in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
        assert head in lines
    assert sum(line.startswith(" BV ") for line in lines) == 3


@given(patient_lists(max_k=6, max_p=3, min_k=1))
def test_mps_roundtrip_through_highs(tmp_path_factory, inst):
    highspy = pytest.importorskip("highspy")
    pats, residual, params = inst
    model = build_ppa_model(pats, residual, params)
    path = tmp_path_factory.mktemp("mps") / "m.mps"
    path.write_bytes(export_mps(model))
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(path))
    h.run()
    ours = solve_mip(model).objective
    assert h.getInfo().objective_function_value == pytest.approx(ours, abs=1e-6)


def test_empty_instances():
    with pytest.raises(ValueError):
        build_ppa_model([], None, CostParams())
    assert solve_assignment([], None, CostParams()).objective == 0.0
    assert brute_force_solve([], None, CostParams()).objective == 0.0
