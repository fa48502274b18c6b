# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bounded-variable primal simplex (Bland's rule).

Mirrors ``_lp_py.lp_solve`` operation for operation; see that module for the
column layout.  Results must match the pure-Python backend bit for bit (up to
the sign of zeros).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, isfinite, fabs

cnp.import_array()

cdef enum:
    OPTIMAL = 0
    INFEASIBLE = 1
    UNBOUNDED = 2
    ITERATION_LIMIT = 3

cdef double PIVOT_TOL = 1e-9
cdef double COST_TOL = 1e-9
cdef double FEAS_TOL = 1e-9
cdef double PHASE1_TOL = 1e-8
cdef double TIE_TOL = 1e-12


cdef int _simplex(double[:, ::1] T, double[::1] xB, long[::1] basis, cnp.int8_t[::1] at_ub,
                  double[::1] lo, double[::1] hi, double[::1] cost,
                  long max_iter, long* iters, double[::1] d, double[::1] t,
                  cnp.int8_t[::1] is_basic) nogil:
    cdef Py_ssize_t m = T.shape[0], N = T.shape[1]
    cdef Py_ssize_t i, k, j, r, leave
    cdef long key, lvar
    cdef double cb, direction, a, tmin, flip, step, piv, f, dj, enter_val, bl, bu, tv

    for k in range(N):
        d[k] = cost[k]
        is_basic[k] = 0
    for i in range(m):
        cb = cost[basis[i]]
        if cb != 0.0:
            for k in range(N):
                d[k] -= cb * T[i, k]
        is_basic[basis[i]] = 1

    while True:
        if iters[0] >= max_iter:
            return ITERATION_LIMIT
        j = -1
        for k in range(N):
            if lo[k] < hi[k] and not is_basic[k]:
                if (not at_ub[k] and d[k] < -COST_TOL) or (at_ub[k] and d[k] > COST_TOL):
                    j = k
                    break
        if j < 0:
            return OPTIMAL
        direction = -1.0 if at_ub[j] else 1.0

        tmin = INFINITY
        for i in range(m):
            a = direction * T[i, j]
            bl = lo[basis[i]]
            bu = hi[basis[i]]
            tv = INFINITY
            if a > PIVOT_TOL and isfinite(bl):
                tv = (xB[i] - bl) / a
            elif a < -PIVOT_TOL and isfinite(bu):
                tv = (bu - xB[i]) / (-a)
            if tv < 0.0:
                tv = 0.0
            t[i] = tv
            if tv < tmin:
                tmin = tv
        flip = hi[j] - lo[j]
        if flip < tmin:
            tmin = flip
        if tmin == INFINITY:
            return UNBOUNDED
        leave = -1
        key = j if flip <= tmin + TIE_TOL else N
        for i in range(m):
            if t[i] <= tmin + TIE_TOL and basis[i] < key:
                key = basis[i]
                leave = i

        step = direction * tmin
        for i in range(m):
            xB[i] -= step * T[i, j]
        iters[0] += 1
        if leave < 0:
            at_ub[j] = 0 if at_ub[j] else 1
            continue

        r = leave
        lvar = basis[r]
        at_ub[lvar] = 1 if direction * T[r, j] < 0.0 else 0
        enter_val = (hi[j] if at_ub[j] else lo[j]) + step
        piv = T[r, j]
        for k in range(N):
            T[r, k] /= piv
        for i in range(m):
            if i == r:
                continue
            f = T[i, j]
            for k in range(N):
                T[i, k] -= f * T[r, k]
        dj = d[j]
        for k in range(N):
            d[k] -= dj * T[r, k]
        basis[r] = j
        xB[r] = enter_val
        is_basic[lvar] = 0
        is_basic[j] = 1


def lp_solve(c, A, sense, b, lb, ub, long max_iter=100000):
    """Minimise ``c @ x`` s.t. ``A x (sense) b``, ``lb <= x <= ub``."""
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[::1] lbv = np.ascontiguousarray(lb, dtype=np.float64)
    cdef double[::1] ubv = np.ascontiguousarray(ub, dtype=np.float64)
    cdef long[::1] sv = np.ascontiguousarray(sense, dtype=np.int64)
    cdef Py_ssize_t m = Av.shape[0], n = Av.shape[1]
    cdef Py_ssize_t i, j, k, na, N
    cdef double v, infeas, obj

    for j in range(n):
        if lbv[j] > ubv[j]:
            return INFEASIBLE, np.full(n, np.nan), np.inf, 0

    cdef double[::1] val = np.empty(n)
    for j in range(n):
        if isfinite(lbv[j]):
            val[j] = lbv[j]
        elif isfinite(ubv[j]):
            val[j] = ubv[j]
        else:
            raise ValueError("free structural variables are not supported")

    cdef double[::1] res = np.array(bv, copy=True)
    for j in range(n):
        if val[j] != 0.0:
            for i in range(m):
                res[i] -= Av[i, j] * val[j]

    cdef double[::1] s_lo = np.empty(m)
    cdef double[::1] s_hi = np.empty(m)
    for i in range(m):
        s_lo[i] = -INFINITY if sv[i] > 0 else 0.0
        s_hi[i] = INFINITY if sv[i] < 0 else 0.0

    cdef long[::1] single_row = np.full(n, -1, dtype=np.int64)
    cdef long cnt, last
    for j in range(n):
        cnt = 0
        last = -1
        for i in range(m):
            if Av[i, j] != 0.0:
                cnt += 1
                if last < 0:
                    last = i
        if cnt == 1:
            single_row[j] = last
    cdef cnp.int8_t[::1] used = np.zeros(n, dtype=np.int8)

    cdef long[::1] basis = np.empty(m, dtype=np.int64)
    cdef double[::1] xB = np.empty(m)
    cdef double[::1] pivcoef = np.ones(m)
    cdef long[::1] art_row = np.empty(m, dtype=np.int64)
    cdef double[::1] art_sign = np.empty(m)
    cdef bint placed
    na = 0
    for i in range(m):
        if s_lo[i] - FEAS_TOL <= res[i] <= s_hi[i] + FEAS_TOL:
            basis[i] = n + i
            xB[i] = res[i]
            continue
        placed = False
        for j in range(n):
            if single_row[j] != i or used[j]:
                continue
            v = val[j] + res[i] / Av[i, j]
            if lbv[j] - FEAS_TOL <= v <= ubv[j] + FEAS_TOL:
                basis[i] = j
                xB[i] = v
                pivcoef[i] = Av[i, j]
                used[j] = 1
                placed = True
                break
        if not placed:
            art_row[na] = i
            art_sign[na] = 1.0 if res[i] >= 0.0 else -1.0
            basis[i] = n + m + na
            xB[i] = fabs(res[i])
            pivcoef[i] = art_sign[na]
            na += 1

    N = n + m + na
    cdef double[:, ::1] T = np.zeros((m, N))
    for i in range(m):
        for j in range(n):
            T[i, j] = Av[i, j]
        T[i, n + i] = 1.0
    for k in range(na):
        T[art_row[k], n + m + k] = art_sign[k]
    for i in range(m):
        if pivcoef[i] != 1.0:
            v = pivcoef[i]
            for k in range(N):
                T[i, k] /= v

    cdef double[::1] lo = np.empty(N)
    cdef double[::1] hi = np.empty(N)
    cdef cnp.int8_t[::1] at_ub = np.zeros(N, dtype=np.int8)
    for j in range(n):
        lo[j] = lbv[j]
        hi[j] = ubv[j]
        at_ub[j] = 0 if isfinite(lbv[j]) else 1
    for i in range(m):
        lo[n + i] = s_lo[i]
        hi[n + i] = s_hi[i]
        at_ub[n + i] = 1 if sv[i] > 0 else 0
    for k in range(na):
        lo[n + m + k] = 0.0
        hi[n + m + k] = INFINITY

    cdef double[::1] d = np.empty(N)
    cdef double[::1] t = np.empty(m)
    cdef cnp.int8_t[::1] is_basic = np.zeros(N, dtype=np.int8)
    cdef double[::1] cost = np.zeros(N)
    cdef long iters = 0
    cdef int status

    if na:
        for k in range(na):
            cost[n + m + k] = 1.0
        with nogil:
            status = _simplex(T, xB, basis, at_ub, lo, hi, cost, max_iter, &iters, d, t, is_basic)
        if status != OPTIMAL:
            return status, np.full(n, np.nan), np.inf, iters
        infeas = 0.0
        for i in range(m):
            if basis[i] >= n + m:
                infeas += xB[i]
        if infeas > PHASE1_TOL:
            return INFEASIBLE, np.full(n, np.nan), np.inf, iters
        for k in range(na):
            hi[n + m + k] = 0.0
            at_ub[n + m + k] = 0
            cost[n + m + k] = 0.0

    for j in range(n):
        cost[j] = cv[j]
    with nogil:
        status = _simplex(T, xB, basis, at_ub, lo, hi, cost, max_iter, &iters, d, t, is_basic)
    if status != OPTIMAL:
        return status, np.full(n, np.nan), np.inf, iters

    x_arr = np.empty(n)
    cdef double[::1] x = x_arr
    for j in range(n):
        x[j] = ubv[j] if at_ub[j] else lbv[j]
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = xB[i]
    for j in range(n):
        if x[j] < lbv[j]:
            x[j] = lbv[j]
        if x[j] > ubv[j]:
            x[j] = ubv[j]
    obj = 0.0
    for j in range(n):
        obj += cv[j] * x[j]
    return OPTIMAL, x_arr, obj, iters
