# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled assignment branch-and-bound; mirrors ``_assign_py`` exactly."""

import time

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs, floor, fmax
from libc.string cimport memcpy
from cpython.mem cimport PyMem_Malloc, PyMem_Free

cnp.import_array()

cdef enum:
    OPTIMAL = 0
    LIMIT = 1

cdef double CLOSE_REL = 1e-6
cdef double GRID_EPS = 1e-9


cdef inline bint _prunable(double bound, double ub, double step, double gap_limit) noexcept nogil:
    if ub == INFINITY:
        return False
    if step > 0.0:
        if bound > ub - step + 1e-6 * step:
            return True
    elif bound >= ub - CLOSE_REL * fmax(fabs(ub), 1e-9):
        return True
    if gap_limit >= 0.0 and bound >= ub - gap_limit * fmax(fabs(ub), 1e-9):
        return True
    return False


cdef inline long _cap(double W, double sc) noexcept nogil:
    return <long>floor(W * sc + GRID_EPS)


cdef struct Inst:
    long n
    long P
    double* t
    double* rc
    double* cost      # n x P
    long* pref
    cnp.int8_t* elig  # n x P
    long* S
    double* W


cdef void _options(long pref_k, long P, long* out) noexcept nogil:
    cdef long p, j = 1
    out[0] = pref_k
    for p in range(P):
        if p != pref_k:
            out[j] = p
            j += 1


cdef double _evaluate(Inst* I, long* act) noexcept nogil:
    cdef double total = 0.0
    cdef long k, a
    for k in range(I.n):
        a = act[k]
        if a == 0:
            total = total + I.rc[k]
        else:
            total = total + I.cost[k * I.P + a - 1]
    return total


cdef bint _feasible(Inst* I, long* act, long* used, double* Wr) noexcept nogil:
    cdef long k, a, p, P = I.P
    for p in range(P):
        used[p] = 0
        Wr[p] = I.W[p]
    for k in range(I.n):
        a = act[k]
        if a == 0:
            continue
        p = a - 1
        if not (0 <= p < P) or not I.elig[k * P + p] or used[p] + 1 > I.S[p] or I.t[k] > Wr[p]:
            return False
        used[p] += 1
        Wr[p] = Wr[p] - I.t[k]
    return True


cdef void _greedy(Inst* I, cnp.int8_t* hint, long* act, long* Sr, double* Wr,
                  cnp.int8_t* done, long* opts) noexcept nogil:
    cdef long n = I.n, P = I.P, k, p, q, j, best
    for p in range(P):
        Sr[p] = I.S[p]
        Wr[p] = I.W[p]
    for k in range(n):
        act[k] = 0
        done[k] = 0
    if hint != NULL:
        for k in range(n):
            _options(I.pref[k], P, opts)
            for j in range(P):
                p = opts[j]
                if hint[k * P + p] and I.elig[k * P + p] and Sr[p] >= 1 and I.t[k] <= Wr[p]:
                    act[k] = p + 1
                    Sr[p] -= 1
                    Wr[p] = Wr[p] - I.t[k]
                    done[k] = 1
                    break
    for k in range(n):
        if done[k]:
            continue
        p = I.pref[k]
        if I.elig[k * P + p] and Sr[p] >= 1 and I.t[k] <= Wr[p]:
            best = p
        else:
            best = -1
            for q in range(P):
                if q != p and I.elig[k * P + q] and Sr[q] >= 1 and I.t[k] <= Wr[q]:
                    if best < 0 or Wr[q] > Wr[best]:
                        best = q
        if best >= 0:
            act[k] = best + 1
            Sr[best] -= 1
            Wr[best] = Wr[best] - I.t[k]


cdef void _local_search(Inst* I, long* act, long* Sr, double* Wr, long* opts,
                        long* opts2) noexcept nogil:
    cdef long n = I.n, P = I.P, k, a, p, j, q, jj, ii, best_q
    cdef double cur, gain, best_c
    cdef bint improved = True, done
    for p in range(P):
        Sr[p] = I.S[p]
        Wr[p] = I.W[p]
    for k in range(n):
        a = act[k]
        if a > 0:
            Sr[a - 1] -= 1
            Wr[a - 1] = Wr[a - 1] - I.t[k]
    while improved:
        improved = False
        for k in range(n):
            a = act[k]
            if a == 0:
                cur = I.rc[k]
            else:
                cur = I.cost[k * P + a - 1]
            if cur == 0.0:
                continue
            _options(I.pref[k], P, opts)
            for ii in range(P):
                p = opts[ii]
                if p == a - 1 or not I.elig[k * P + p] or I.cost[k * P + p] >= cur:
                    continue
                gain = cur - I.cost[k * P + p]
                if a > 0:
                    Sr[a - 1] += 1
                    Wr[a - 1] = Wr[a - 1] + I.t[k]
                if Sr[p] >= 1 and I.t[k] <= Wr[p]:
                    act[k] = p + 1
                    Sr[p] -= 1
                    Wr[p] = Wr[p] - I.t[k]
                    improved = True
                    break
                done = False
                for j in range(n):
                    if act[j] != p + 1:
                        continue
                    if Sr[p] < 0 or I.t[k] > Wr[p] + I.t[j]:
                        continue
                    best_q = -1
                    best_c = I.rc[j]
                    _options(I.pref[j], P, opts2)
                    for jj in range(P):
                        q = opts2[jj]
                        if q == p or not I.elig[j * P + q] or I.cost[j * P + q] >= best_c:
                            continue
                        if Sr[q] >= 1 and I.t[j] <= Wr[q]:
                            best_q = q
                            best_c = I.cost[j * P + q]
                            break
                    if gain - (best_c - I.cost[j * P + p]) > 1e-12:
                        act[j] = best_q + 1 if best_q >= 0 else 0
                        Wr[p] = Wr[p] + I.t[j]
                        if best_q >= 0:
                            Sr[best_q] -= 1
                            Wr[best_q] = Wr[best_q] - I.t[j]
                        act[k] = p + 1
                        Wr[p] = Wr[p] - I.t[k]
                        improved = True
                        done = True
                        break
                if done:
                    break
                if a > 0:
                    Sr[a - 1] -= 1
                    Wr[a - 1] = Wr[a - 1] - I.t[k]


cdef class _Work:
    """Scratch buffers shared by the heuristics."""
    cdef long[::1] a
    cdef long[::1] b
    cdef long[::1] Sr
    cdef double[::1] Wr
    cdef cnp.int8_t[::1] done
    cdef long[::1] opts
    cdef long[::1] opts2

    def __init__(self, long n, long P):
        self.a = np.zeros(max(n, 1), dtype=np.int64)
        self.b = np.zeros(max(n, 1), dtype=np.int64)
        self.Sr = np.zeros(P, dtype=np.int64)
        self.Wr = np.zeros(P)
        self.done = np.zeros(max(n, 1), dtype=np.int8)
        self.opts = np.zeros(P + 1, dtype=np.int64)
        self.opts2 = np.zeros(P + 1, dtype=np.int64)


cdef double _consider(Inst* I, _Work w, long* cand, double ub, long* best_act) noexcept:
    """Polish ``cand`` by local search and keep it if it beats ``ub``."""
    cdef long n = I.n, k
    cdef double v
    if not _feasible(I, cand, &w.Sr[0], &w.Wr[0]):
        return ub
    for k in range(n):
        w.b[k] = cand[k]
    _local_search(I, &w.b[0], &w.Sr[0], &w.Wr[0], &w.opts[0], &w.opts2[0])
    if _feasible(I, &w.b[0], &w.Sr[0], &w.Wr[0]):
        for k in range(n):
            cand[k] = w.b[k]
    v = _evaluate(I, cand)
    if v < ub:
        for k in range(n):
            best_act[k] = cand[k]
        return v
    return ub


cdef void _tables(Inst* I, double* lam, long* wgt, long* C, double** F) noexcept nogil:
    cdef long n = I.n, P = I.P, p, i, s, c, w, S, Cp, layer
    cdef double v, cand
    cdef double* cur
    cdef double* nxt
    for p in range(P):
        S = I.S[p]
        Cp = C[p]
        layer = (S + 1) * (Cp + 1)
        nxt = F[p] + n * layer
        for c in range(layer):
            nxt[c] = 0.0
        for i in range(n - 1, -1, -1):
            cur = F[p] + i * layer
            nxt = F[p] + (i + 1) * layer
            memcpy(cur, nxt, layer * sizeof(double))
            v = lam[i] - I.cost[i * P + p]
            w = wgt[i]
            if I.elig[i * P + p] and v > 0.0 and w <= Cp and S >= 1:
                for s in range(1, S + 1):
                    for c in range(w, Cp + 1):
                        cand = nxt[(s - 1) * (Cp + 1) + c - w] + v
                        if cand > nxt[s * (Cp + 1) + c]:
                            cur[s * (Cp + 1) + c] = cand


cdef inline double _F(double** F, long* S, long* C, long p, long i, long s, long c) noexcept nogil:
    return F[p][(i * (S[p] + 1) + s) * (C[p] + 1) + c]


def assign_solve(t, rc, pc, pref, elig, S, W, *, long node_limit=1_000_000,
                 double time_limit=-1.0, double gap_limit=-1.0, double step=-1.0,
                 long sc=10, long sc_sg=10, long max_sg_iter=60, lam0=None, start=None):
    """See ``_assign_py.assign_solve``."""
    t0 = time.perf_counter()
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[::1] rcv = np.ascontiguousarray(rc, dtype=np.float64)
    cdef double[::1] pcv = np.ascontiguousarray(pc, dtype=np.float64)
    cdef long[::1] prefv = np.ascontiguousarray(pref, dtype=np.int64)
    elig_arr = np.ascontiguousarray(elig, dtype=np.int8)
    cdef long n = elig_arr.shape[0], P = elig_arr.shape[1]
    cdef cnp.int8_t[::1] eligv = elig_arr.reshape(-1) if n * P else np.zeros(1, dtype=np.int8)
    cdef long[::1] Sv = np.ascontiguousarray(S, dtype=np.int64)
    cdef double[::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef long k, p, i, j, o, a, it, d
    cdef double v

    cost_arr = np.empty((max(n, 1), P))
    cdef double[:, ::1] cost = cost_arr
    for k in range(n):
        for p in range(P):
            cost[k, p] = 0.0 if p == prefv[k] else pcv[k]

    cdef Inst I
    I.n = n
    I.P = P
    I.t = &tv[0] if n else NULL
    I.rc = &rcv[0] if n else NULL
    I.cost = &cost[0, 0]
    I.pref = &prefv[0] if n else NULL
    I.elig = &eligv[0]
    I.S = &Sv[0]
    I.W = &Wv[0]

    cdef _Work wk = _Work(n, P)
    best_arr = np.zeros(max(n, 1), dtype=np.int64)
    cdef long[::1] best_act = best_arr
    cand_arr = np.zeros(max(n, 1), dtype=np.int64)
    cdef long[::1] cand = cand_arr
    cdef double ub = _evaluate(&I, &best_act[0])
    if start is not None:
        st = np.asarray(start, dtype=np.int64)
        if st.shape[0] == n:
            for k in range(n):
                cand[k] = st[k]
            ub = _consider(&I, wk, &cand[0], ub, &best_act[0])
    _greedy(&I, NULL, &cand[0], &wk.Sr[0], &wk.Wr[0], &wk.done[0], &wk.opts[0])
    ub = _consider(&I, wk, &cand[0], ub, &best_act[0])

    cdef long[::1] wgt = np.maximum(np.floor(np.asarray(tv) * sc - GRID_EPS), 0.0).astype(np.int64) \
        if n else np.zeros(1, dtype=np.int64)
    cdef long[::1] wgt_sg = np.maximum(np.floor(np.asarray(tv) * sc_sg - GRID_EPS), 0.0).astype(np.int64) \
        if n else np.zeros(1, dtype=np.int64)
    cdef long[::1] C = np.array([_cap(Wv[p], sc) for p in range(P)], dtype=np.int64)
    cdef long[::1] C_sg = np.array([_cap(Wv[p], sc_sg) for p in range(P)], dtype=np.int64)

    lam_arr = 0.5 * np.asarray(rcv) if lam0 is None else np.minimum(
        np.maximum(np.asarray(lam0, dtype=np.float64), 0.0), np.asarray(rcv))
    lam_arr = np.ascontiguousarray(lam_arr, dtype=np.float64).copy()
    if n == 0:
        lam_arr = np.zeros(1)
    cdef double[::1] lam = lam_arr
    best_lam_arr = lam_arr.copy()
    cdef double[::1] best_lam = best_lam_arr
    cdef double best_lb = -INFINITY, mu = 1.0, Lval, norm, theta, x
    cdef long stall = 0, sg_iters = 0
    cdef double[::1] g = np.zeros(max(n, 1))
    cdef cnp.int8_t[::1] picks = np.zeros(max(n * P, 1), dtype=np.int8)
    cdef long s_, c_

    tabs = [np.zeros((n + 1) * (Sv[p] + 1) * (C_sg[p] + 1)) for p in range(P)]
    cdef double** F = <double**> PyMem_Malloc(max(P, 1) * sizeof(double*))
    cdef double[::1] tmp
    for p in range(P):
        tmp = tabs[p]
        F[p] = &tmp[0]
    try:
        if n == 0 or not _prunable(0.0, ub, step, gap_limit):
            while sg_iters < max_sg_iter:
                if time_limit >= 0.0 and time.perf_counter() - t0 >= time_limit:
                    break
                sg_iters += 1
                _tables(&I, &lam[0], &wgt_sg[0], &C_sg[0], F)
                Lval = 0.0
                for i in range(n - 1, -1, -1):
                    Lval = Lval + lam[i]
                for k in range(n):
                    g[k] = 1.0
                for k in range(n * P):
                    picks[k] = 0
                for p in range(P):
                    Lval = Lval - _F(F, &Sv[0], &C_sg[0], p, 0, Sv[p], C_sg[p])
                    s_ = Sv[p]
                    c_ = C_sg[p]
                    for i in range(n):
                        if s_ <= 0:
                            break
                        if _F(F, &Sv[0], &C_sg[0], p, i, s_, c_) != _F(F, &Sv[0], &C_sg[0], p, i + 1, s_, c_):
                            picks[i * P + p] = 1
                            s_ -= 1
                            c_ -= wgt_sg[i]
                for k in range(n):
                    for p in range(P):
                        if picks[k * P + p]:
                            g[k] = g[k] - 1.0
                if Lval > best_lb:
                    best_lb = Lval
                    for k in range(n):
                        best_lam[k] = lam[k]
                    stall = 0
                else:
                    stall += 1
                    if stall >= 5:
                        mu = mu * 0.5
                        stall = 0
                _greedy(&I, &picks[0], &cand[0], &wk.Sr[0], &wk.Wr[0], &wk.done[0], &wk.opts[0])
                ub = _consider(&I, wk, &cand[0], ub, &best_act[0])
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
                    lam[k] = 0.0 if x < 0.0 else (rcv[k] if x > rcv[k] else x)
    finally:
        PyMem_Free(F)

    for k in range(n):
        lam[k] = best_lam[k]
    tabs = [np.zeros((n + 1) * (Sv[p] + 1) * (C[p] + 1)) for p in range(P)]
    F = <double**> PyMem_Malloc(max(P, 1) * sizeof(double*))
    for p in range(P):
        tmp = tabs[p]
        F[p] = &tmp[0]
    cdef double[::1] lsuf = np.zeros(n + 1)
    cdef double acc = 0.0
    for i in range(n - 1, -1, -1):
        acc = acc + lam[i]
        lsuf[i] = acc

    cdef long[::1] Sr = np.array(Sv, dtype=np.int64)
    cdef double[::1] Wr = np.array(Wv, dtype=np.float64)
    cdef long[::1] Ci = np.array(C, dtype=np.int64)
    act_arr = np.zeros(max(n, 1), dtype=np.int64)
    cdef long[::1] act = act_arr
    cdef long nodes = 0, depth, cn
    cdef bint stopped = False, entered
    cdef double gap_pruned = INFINITY, root, b, tot, gcur, open_lb, bound
    cdef long[::1] nxt = np.zeros(n + 1, dtype=np.int64)
    cdef double[::1] gsave = np.zeros(n + 1)
    cdef double[::1] wsave = np.zeros(n + 1)
    cdef long[::1] csave = np.zeros(n + 1, dtype=np.int64)
    cdef long[::1] opts = np.zeros((n + 1) * (P + 1), dtype=np.int64)
    cdef long* Sp = &Sv[0]
    cdef long* Cp = &C[0]
    for i in range(n):
        _options(prefv[i], P, &opts[i * (P + 1)])
        opts[i * (P + 1) + P] = P

    try:
        _tables(&I, &lam[0], &wgt[0], &C[0], F)
        if n:
            tot = 0.0
            for p in range(P):
                tot = tot + _F(F, Sp, Cp, p, 0, Sr[p], Ci[p])
            root = lsuf[0] - tot
        else:
            root = 0.0
        if _prunable(root, ub, step, gap_limit):
            if not _prunable(root, ub, step, -1.0):
                gap_pruned = root
            depth = -1
        else:
            depth = 0
        gcur = 0.0
        while depth >= 0:
            if depth == n:
                if gcur < ub:
                    ub = gcur
                    for k in range(n):
                        best_act[k] = act[k]
                depth -= 1
                if depth >= 0:
                    a = act[depth]
                    if a > 0:
                        Sr[a - 1] += 1
                        Wr[a - 1] = wsave[depth]
                        Ci[a - 1] = csave[depth]
                    gcur = gsave[depth]
                continue
            i = depth
            entered = False
            while nxt[i] < P + 1:
                o = opts[i * (P + 1) + nxt[i]]
                if o < P and not (eligv[i * P + o] and Sr[o] >= 1 and tv[i] <= Wr[o]):
                    nxt[i] += 1
                    continue
                if nodes >= node_limit or (
                        time_limit >= 0.0 and (nodes & 255) == 0
                        and time.perf_counter() - t0 >= time_limit):
                    stopped = True
                    break
                nodes += 1
                # child bound
                tot = 0.0
                if o == P:
                    for p in range(P):
                        tot = tot + _F(F, Sp, Cp, p, i + 1, Sr[p], Ci[p])
                    b = gcur + rcv[i] + (lsuf[i + 1] - tot)
                else:
                    for p in range(P):
                        if p == o:
                            cn = _cap(Wr[p] - tv[i], sc)
                            if cn > C[p]:
                                cn = C[p]
                            tot = tot + _F(F, Sp, Cp, p, i + 1, Sr[p] - 1, cn)
                        else:
                            tot = tot + _F(F, Sp, Cp, p, i + 1, Sr[p], Ci[p])
                    b = gcur + cost[i, o] + lsuf[i + 1] - tot
                nxt[i] += 1
                if _prunable(b, ub, step, gap_limit):
                    if not _prunable(b, ub, step, -1.0) and b < gap_pruned:
                        gap_pruned = b
                    continue
                gsave[i] = gcur
                if o == P:
                    act[i] = 0
                    gcur = gcur + rcv[i]
                else:
                    act[i] = o + 1
                    wsave[i] = Wr[o]
                    csave[i] = Ci[o]
                    Sr[o] -= 1
                    Wr[o] = Wr[o] - tv[i]
                    cn = _cap(Wr[o], sc)
                    Ci[o] = cn if cn < C[o] else C[o]
                    gcur = gcur + cost[i, o]
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
                gcur = gsave[depth]

        if stopped:
            open_lb = INFINITY
            d = depth
            while d >= 0:
                for j in range(nxt[d], P + 1):
                    o = opts[d * (P + 1) + j]
                    if o < P and not (eligv[d * P + o] and Sr[o] >= 1 and tv[d] <= Wr[o]):
                        continue
                    tot = 0.0
                    if o == P:
                        for p in range(P):
                            tot = tot + _F(F, Sp, Cp, p, d + 1, Sr[p], Ci[p])
                        b = gcur + rcv[d] + (lsuf[d + 1] - tot)
                    else:
                        for p in range(P):
                            if p == o:
                                cn = _cap(Wr[p] - tv[d], sc)
                                if cn > C[p]:
                                    cn = C[p]
                                tot = tot + _F(F, Sp, Cp, p, d + 1, Sr[p] - 1, cn)
                            else:
                                tot = tot + _F(F, Sp, Cp, p, d + 1, Sr[p], Ci[p])
                        b = gcur + cost[d, o] + lsuf[d + 1] - tot
                    if b < open_lb:
                        open_lb = b
                d -= 1
                if d >= 0:
                    a = act[d]
                    if a > 0:
                        Sr[a - 1] += 1
                        Wr[a - 1] = wsave[d]
                        Ci[a - 1] = csave[d]
                    gcur = gsave[d]
            bound = min(ub, open_lb, gap_pruned)
        else:
            bound = min(ub, gap_pruned)
    finally:
        PyMem_Free(F)

    closed = ub - bound <= CLOSE_REL * fmax(fabs(ub), 1e-9)
    if step > 0.0 and bound > ub - step + 1e-6 * step:
        closed = True
    if closed:
        bound = ub
    return (OPTIMAL if closed else LIMIT), ub, best_arr[:n].copy(), bound, nodes, sg_iters, \
        lam_arr[:n].copy()
