"""Exact solver for assignment-with-rejection instances (pure Python/numpy).

Problem: patients ``k = 0..n-1`` are each assigned to one eligible physician
or rejected.  Physician ``p`` accepts at most ``S[p]`` patients with total
duration at most ``W[p]``.  Rejection costs ``rc[k]``; assignment to a
physician other than ``pref[k]`` costs ``pc[k]``.

Method: depth-first branch-and-bound over patients in index order.  Bounds
come from the Lagrangian relaxation of the one-action-per-patient rows: for
multipliers ``lam`` each physician solves a cardinality-constrained knapsack,
done by dynamic programming on durations floored to a ``1/sc`` grid (flooring
only enlarges the feasible sets, so the bound stays valid).  Multipliers are
tuned at the root with a Polyak subgradient method and then frozen; suffix
DP tables ``F[p][i][s][c]`` make every node bound O(P).

``_assign_core.pyx`` mirrors this module operation for operation.
"""

from __future__ import annotations

import math
import time

import numpy as np

OPTIMAL = 0
LIMIT = 1

CLOSE_REL = 1e-6
GRID_EPS = 1e-9


def _prunable(bound, ub, step, gap_limit):
    if ub == math.inf:
        return False
    if step > 0.0:
        if bound > ub - step + 1e-6 * step:
            return True
    elif bound >= ub - CLOSE_REL * max(abs(ub), 1e-9):
        return True
    if gap_limit >= 0.0 and bound >= ub - gap_limit * max(abs(ub), 1e-9):
        return True
    return False


def _grid(t, sc):
    """Floored integer weights (never larger than the true scaled weight)."""
    w = np.floor(t * sc - GRID_EPS)
    return np.maximum(w, 0.0).astype(np.int64)


def _cap(W, sc):
    return int(math.floor(W * sc + GRID_EPS))


def _tables(lam, cost, elig, wgt, S, C):
    """Suffix knapsack tables per physician; values ``lam[k] - cost[k, p]``."""
    n, P = cost.shape
    out = []
    for p in range(P):
        F = np.zeros((n + 1, S[p] + 1, C[p] + 1))
        for i in range(n - 1, -1, -1):
            F[i] = F[i + 1]
            v = lam[i] - cost[i, p]
            w = wgt[i]
            if elig[i, p] and v > 0.0 and w <= C[p] and S[p] >= 1:
                cand = F[i + 1, :-1, :C[p] + 1 - w] + v
                F[i, 1:, w:] = np.maximum(F[i + 1, 1:, w:], cand)
        out.append(F)
    return out


def _picks(F, elig_p, wgt, s, c, n):
    """Backtrack the optimal knapsack set of one physician from layer 0."""
    chosen = np.zeros(n, dtype=bool)
    for i in range(n):
        if s <= 0:
            break
        if F[i, s, c] != F[i + 1, s, c]:
            chosen[i] = True
            s -= 1
            c -= wgt[i]
    return chosen


def _suffix(lam):
    n = lam.shape[0]
    out = np.zeros(n + 1)
    acc = 0.0
    for i in range(n - 1, -1, -1):
        acc = acc + lam[i]
        out[i] = acc
    return out


def _evaluate(act, rc, cost):
    total = 0.0
    for k in range(act.shape[0]):
        a = act[k]
        total = total + (rc[k] if a == 0 else cost[k, a - 1])
    return total


def _options(pref_k, P):
    return [pref_k] + [p for p in range(P) if p != pref_k]


def _greedy(t, pref, elig, S, W, hint=None):
    """Patients in index order; ``hint[k, p]`` restricts the first pass."""
    n, P = elig.shape
    Sr = S.copy()
    Wr = W.copy()
    act = np.zeros(n, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    if hint is not None:
        for k in range(n):
            for p in _options(pref[k], P):
                if hint[k, p] and elig[k, p] and Sr[p] >= 1 and t[k] <= Wr[p]:
                    act[k] = p + 1
                    Sr[p] -= 1
                    Wr[p] = Wr[p] - t[k]
                    done[k] = True
                    break
    for k in range(n):
        if done[k]:
            continue
        p = pref[k]
        if elig[k, p] and Sr[p] >= 1 and t[k] <= Wr[p]:
            best = p
        else:
            best = -1
            for q in range(P):
                if q != p and elig[k, q] and Sr[q] >= 1 and t[k] <= Wr[q]:
                    if best < 0 or Wr[q] > Wr[best]:
                        best = q
        if best >= 0:
            act[k] = best + 1
            Sr[best] -= 1
            Wr[best] = Wr[best] - t[k]
    return act


def _local_search(act, t, rc, cost, pref, elig, S, W):
    """First-improvement descent over insert / relocate / swap moves.

    Returns an improved copy of ``act`` (or ``act`` itself).  Residual
    workloads are updated incrementally; the caller re-verifies feasibility.
    """
    n, P = elig.shape
    act = act.copy()
    Sr = S.copy()
    Wr = W.copy()
    for k in range(n):
        a = act[k]
        if a > 0:
            Sr[a - 1] -= 1
            Wr[a - 1] = Wr[a - 1] - t[k]
    improved = True
    while improved:
        improved = False
        for k in range(n):
            a = act[k]
            if a == 0:
                cur = rc[k]
            else:
                cur = cost[k, a - 1]
            if cur == 0.0:
                continue
            for p in _options(pref[k], P):
                if p == a - 1 or not elig[k, p] or cost[k, p] >= cur:
                    continue
                gain = cur - cost[k, p]
                # k leaves its physician before entering p.
                if a > 0:
                    Sr[a - 1] += 1
                    Wr[a - 1] = Wr[a - 1] + t[k]
                if Sr[p] >= 1 and t[k] <= Wr[p]:
                    act[k] = p + 1
                    Sr[p] -= 1
                    Wr[p] = Wr[p] - t[k]
                    improved = True
                    break
                # Make room at p by moving out one patient j (relocate or reject).
                done = False
                for j in range(n):
                    if act[j] != p + 1:
                        continue
                    if Sr[p] < 0 or t[k] > Wr[p] + t[j]:
                        continue
                    best_q = -1
                    best_c = rc[j]
                    for q in _options(pref[j], P):
                        if q == p or not elig[j, q] or cost[j, q] >= best_c:
                            continue
                        if Sr[q] >= 1 and t[j] <= Wr[q]:
                            best_q = q
                            best_c = cost[j, q]
                            break
                    if gain - (best_c - cost[j, p]) > 1e-12:
                        act[j] = best_q + 1 if best_q >= 0 else 0
                        Wr[p] = Wr[p] + t[j]
                        if best_q >= 0:
                            Sr[best_q] -= 1
                            Wr[best_q] = Wr[best_q] - t[j]
                        act[k] = p + 1
                        Wr[p] = Wr[p] - t[k]
                        improved = True
                        done = True
                        break
                if done:
                    break
                if a > 0:
                    Sr[a - 1] -= 1
                    Wr[a - 1] = Wr[a - 1] - t[k]
    return act


def _feasible(act, t, elig, S, W):
    P = S.shape[0]
    used = np.zeros(P, dtype=np.int64)
    Wr = W.copy()
    for k in range(act.shape[0]):
        a = act[k]
        if a == 0:
            continue
        p = a - 1
        if not (0 <= p < P) or not elig[k, p] or used[p] + 1 > S[p] or t[k] > Wr[p]:
            return False
        used[p] += 1
        Wr[p] = Wr[p] - t[k]
    return True


def _consider(a, ub, best_act, t, rc, cost, pref, elig, S, W):
    if a.shape[0] != elig.shape[0] or not _feasible(a, t, elig, S, W):
        return ub, best_act
    b = _local_search(a, t, rc, cost, pref, elig, S, W)
    if _feasible(b, t, elig, S, W):
        a = b
    v = _evaluate(a, rc, cost)
    if v < ub:
        return v, a.copy()
    return ub, best_act


def assign_solve(t, rc, pc, pref, elig, S, W, *, node_limit=1_000_000, time_limit=-1.0,
                 gap_limit=-1.0, step=-1.0, sc=10, sc_sg=10, max_sg_iter=60, lam0=None,
                 start=None):
    """Returns ``(status, objective, actions, bound, nodes, sg_iters, lam)``.

    ``actions[k]`` is 0 for rejection or ``p + 1``.  Negative limits disable
    the corresponding criterion; ``step > 0`` declares that every attainable
    objective value is a multiple of ``step``.
    """
    t0 = time.perf_counter()
    t = np.ascontiguousarray(t, dtype=np.float64)
    rc = np.ascontiguousarray(rc, dtype=np.float64)
    pc = np.ascontiguousarray(pc, dtype=np.float64)
    pref = np.ascontiguousarray(pref, dtype=np.int64)
    elig = np.ascontiguousarray(elig, dtype=np.int8)
    S = np.ascontiguousarray(S, dtype=np.int64)
    W = np.ascontiguousarray(W, dtype=np.float64)
    n, P = elig.shape

    cost = np.empty((n, P))
    for k in range(n):
        for p in range(P):
            cost[k, p] = 0.0 if p == pref[k] else pc[k]

    # Incumbent: all-reject, then the caller's start and the greedy pass,
    # each polished by local search.
    best_act = np.zeros(n, dtype=np.int64)
    ub = _evaluate(best_act, rc, cost)
    if start is not None:
        ub, best_act = _consider(np.asarray(start, dtype=np.int64), ub, best_act,
                                 t, rc, cost, pref, elig, S, W)
    ub, best_act = _consider(_greedy(t, pref, elig, S, W), ub, best_act,
                             t, rc, cost, pref, elig, S, W)

    wgt = _grid(t, sc)
    C = np.array([_cap(W[p], sc) for p in range(P)], dtype=np.int64)
    wgt_sg = _grid(t, sc_sg)
    C_sg = np.array([_cap(W[p], sc_sg) for p in range(P)], dtype=np.int64)

    if lam0 is None:
        lam = 0.5 * rc
    else:
        lam = np.minimum(np.maximum(np.asarray(lam0, dtype=np.float64), 0.0), rc)
    best_lam = lam.copy()
    best_lb = -math.inf
    mu = 1.0
    stall = 0
    sg_iters = 0
    if n == 0 or not _prunable(0.0, ub, step, gap_limit):
        while sg_iters < max_sg_iter:
            if time_limit >= 0.0 and time.perf_counter() - t0 >= time_limit:
                break
            sg_iters += 1
            tabs = _tables(lam, cost, elig, wgt_sg, S, C_sg)
            Lval = _suffix(lam)[0]
            g = np.ones(n)
            picks = np.zeros((n, P), dtype=bool)
            for p in range(P):
                Lval = Lval - tabs[p][0, S[p], C_sg[p]]
                picks[:, p] = _picks(tabs[p], elig[:, p], wgt_sg, S[p], C_sg[p], n)
            for k in range(n):
                for p in range(P):
                    if picks[k, p]:
                        g[k] = g[k] - 1.0
            if Lval > best_lb:
                best_lb = Lval
                best_lam = lam.copy()
                stall = 0
            else:
                stall += 1
                if stall >= 5:
                    mu = mu * 0.5
                    stall = 0
            ub, best_act = _consider(_greedy(t, pref, elig, S, W, picks), ub, best_act,
                                     t, rc, cost, pref, elig, S, W)
            if _prunable(best_lb, ub, step, gap_limit) or mu < 0.01:
                break
            norm = 0.0
            for k in range(n):
                norm = norm + g[k] * g[k]
            if norm == 0.0:
                break
            theta = mu * (ub - Lval) / norm
            for k in range(n):
                x = lam[k] + theta * g[k]
                lam[k] = 0.0 if x < 0.0 else (rc[k] if x > rc[k] else x)

    # Frozen multipliers for the tree search.
    lam = best_lam
    tabs = _tables(lam, cost, elig, wgt, S, C)
    lsuf = _suffix(lam)

    Sr = S.copy()
    Wr = W.copy()
    Ci = C.copy()
    act = np.zeros(n, dtype=np.int64)
    nodes = 0
    stopped = False
    gap_pruned = math.inf

    def h(i):
        tot = 0.0
        for p in range(P):
            tot = tot + tabs[p][i, Sr[p], Ci[p]]
        return lsuf[i] - tot

    def child_bound(i, g, o):
        # o in 0..P-1 assigns, o == P rejects
        if o == P:
            return g + rc[i] + h(i + 1)
        tot = 0.0
        for p in range(P):
            if p == o:
                wn = Wr[p] - t[i]
                cn = _cap(wn, sc)
                if cn > C[p]:
                    cn = C[p]
                tot = tot + tabs[p][i + 1, Sr[p] - 1, cn]
            else:
                tot = tot + tabs[p][i + 1, Sr[p], Ci[p]]
        return g + cost[i, o] + lsuf[i + 1] - tot

    def gap_only(bound):
        return not _prunable(bound, ub, step, -1.0)

    root = h(0) if n else 0.0
    if _prunable(root, ub, step, gap_limit):
        if gap_only(root):
            gap_pruned = min(gap_pruned, root)
        depth = -1
    else:
        depth = 0
    # Per-depth resume pointer into the option order, saved state for undo.
    nxt = np.zeros(n + 1, dtype=np.int64)
    gsave = np.zeros(n + 1)
    wsave = np.zeros(n + 1)
    csave = np.zeros(n + 1, dtype=np.int64)
    g = 0.0
    while depth >= 0:
        if depth == n:
            if g < ub:
                ub = g
                best_act = act.copy()
            depth -= 1
            if depth >= 0:
                a = act[depth]
                if a > 0:
                    Sr[a - 1] += 1
                    Wr[a - 1] = wsave[depth]
                    Ci[a - 1] = csave[depth]
                g = gsave[depth]
            continue
        i = depth
        opts = _options(pref[i], P) + [P]
        entered = False
        while nxt[i] < P + 1:
            o = opts[nxt[i]]
            if o < P and not (elig[i, o] and Sr[o] >= 1 and t[i] <= Wr[o]):
                nxt[i] += 1
                continue
            if nodes >= node_limit or (
                    time_limit >= 0.0 and (nodes & 255) == 0
                    and time.perf_counter() - t0 >= time_limit):
                stopped = True
                break
            nodes += 1
            b = child_bound(i, g, o)
            nxt[i] += 1
            if _prunable(b, ub, step, gap_limit):
                if gap_only(b) and b < gap_pruned:
                    gap_pruned = b
                continue
            gsave[i] = g
            if o == P:
                act[i] = 0
                g = g + rc[i]
            else:
                act[i] = o + 1
                wsave[i] = Wr[o]
                csave[i] = Ci[o]
                Sr[o] -= 1
                Wr[o] = Wr[o] - t[i]
                cn = _cap(Wr[o], sc)
                Ci[o] = cn if cn < C[o] else C[o]
                g = g + cost[i, o]
            depth += 1
            nxt[depth] = 0
            entered = True
            break
        if stopped:
            break
        if entered:
            continue
        depth -= 1
        if depth >= 0:
            a = act[depth]
            if a > 0:
                Sr[a - 1] += 1
                Wr[a - 1] = wsave[depth]
                Ci[a - 1] = csave[depth]
            g = gsave[depth]

    if stopped:
        # Open subtrees: untried options at every depth of the current path.
        open_lb = math.inf
        d = depth
        while d >= 0:
            opts = _options(pref[d], P) + [P]
            for j in range(nxt[d], P + 1):
                o = opts[j]
                if o < P and not (elig[d, o] and Sr[o] >= 1 and t[d] <= Wr[o]):
                    continue
                b = child_bound(d, g, o)
                if b < open_lb:
                    open_lb = b
            d -= 1
            if d >= 0:
                a = act[d]
                if a > 0:
                    Sr[a - 1] += 1
                    Wr[a - 1] = wsave[d]
                    Ci[a - 1] = csave[d]
                g = gsave[d]
        bound = min(ub, open_lb, gap_pruned)
    else:
        bound = min(ub, gap_pruned)
    closed = ub - bound <= CLOSE_REL * max(abs(ub), 1e-9)
    if step > 0.0 and bound > ub - step + 1e-6 * step:
        closed = True
    status = OPTIMAL if closed else LIMIT
    if closed:
        bound = ub
    return status, ub, best_act, bound, nodes, sg_iters, lam
