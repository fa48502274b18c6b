"""Compare the compiled kernels with the numpy fallback.

Both backends run the same inputs; results must agree exactly, and the
table reports median wall time per call.

    python benchmarks/bench_kernel.py [--episodes 8] [--repeat 3] [--nodes 20000]
"""

import argparse
import statistics
import time

import numpy as np

from ppa_imitation.core import CostParams
from ppa_imitation.generator import GenConfig, sample_episode
from ppa_imitation.milp import _assign_py, _lp_py, build_ppa_model
from ppa_imitation.milp.assign import (QUICK, THOROUGH, _grid_scale, cost_step, instance_arrays,
                                      search_order)
from ppa_imitation.rng import RngStream

try:
    from ppa_imitation.milp import _assign_core, _lp_core
except ImportError:
    _assign_core = _lp_core = None


def _timed(fn, args, kw, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args, **kw)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def assign_cases(n_episodes, preset, node_limit):
    params = CostParams()
    gen = GenConfig(mu_K=30.0, sigma_K=4.0)
    for s in range(n_episodes):
        pats = list(sample_episode(gen, RngStream(s, "bench")).patients)
        t, rc, pc, pref, elig = instance_arrays(pats, params)
        o = search_order(t, rc)
        step = cost_step(np.concatenate([rc, pc]))
        S = np.array(params.L, dtype=np.int64)
        W = np.full(params.P, params.T)
        kw = dict(preset, step=step, node_limit=node_limit)
        kw["sc"] = _grid_scale(len(pats), S, W, preset["sc"])
        yield (t[o], rc[o], pc[o], pref[o], elig[o], S, W), kw


def lp_cases(n_episodes):
    params = CostParams()
    gen = GenConfig(mu_K=30.0, sigma_K=4.0)
    for s in range(n_episodes):
        m = build_ppa_model(list(sample_episode(gen, RngStream(s, "bench")).patients), None, params)
        yield (m.c, m.A, m.sense, m.rhs, m.lb, m.ub), {}


def _same(a, b):
    for x, y in zip(a, b):
        if isinstance(x, np.ndarray):
            if not np.array_equal(x, y):
                return False
        elif x != y:
            return False
    return True


def run(name, py_fn, cy_fn, cases, repeat):
    tp, tc, agree = [], [], True
    for args, kw in cases:
        t1, r1 = _timed(py_fn, args, kw, repeat)
        tp.append(t1)
        if cy_fn is not None:
            t2, r2 = _timed(cy_fn, args, kw, repeat)
            tc.append(t2)
            agree &= _same(r1, r2)
    py = statistics.median(tp)
    if cy_fn is None:
        print(f"{name:<22} python {py * 1e3:9.2f} ms   compiled  (not built)")
        return
    cy = statistics.median(tc)
    print(f"{name:<22} python {py * 1e3:9.2f} ms   compiled {cy * 1e3:8.2f} ms   "
          f"speed-up {py / cy:6.1f}x   identical={agree}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--nodes", type=int, default=20000, help="node cap per assignment solve")
    args = ap.parse_args()
    print(f"{args.episodes} desk-scale sessions, median of {args.repeat} runs per call")
    cy_assign = _assign_core.assign_solve if _assign_core else None
    cy_lp = _lp_core.lp_solve if _lp_core else None
    run("assign (quick)", _assign_py.assign_solve, cy_assign,
        list(assign_cases(args.episodes, QUICK, args.nodes)), args.repeat)
    run("assign (thorough)", _assign_py.assign_solve, cy_assign,
        list(assign_cases(args.episodes, THOROUGH, args.nodes)), args.repeat)
    run("LP relaxation", _lp_py.lp_solve, cy_lp, list(lp_cases(args.episodes)), args.repeat)


if __name__ == "__main__":
    main()
