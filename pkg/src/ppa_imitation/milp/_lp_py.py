"""Bounded-variable primal simplex, pure-Python/numpy backend.

Dense tableau method with Bland's rule.  Every floating-point update is an
elementwise operation performed in a fixed order, so the compiled backend in
``_lp_core.pyx`` reproduces these results bit for bit.

Layout of the working columns: structurals ``0..n-1``, one slack per row
``n..n+m-1`` (bounds ``[0, inf)`` for <=, ``(-inf, 0]`` for >=, ``[0, 0]``
for =), then one artificial per row that could not be given a feasible basic
variable.
"""

import numpy as np

OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = 0, 1, 2, 3

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-9
PHASE1_TOL = 1e-8
TIE_TOL = 1e-12


def _simplex(T, xB, basis, at_ub, lo, hi, cost, max_iter, iters):
    m, N = T.shape
    d = cost.copy()
    for i in range(m):
        cb = cost[basis[i]]
        if cb != 0.0:
            d -= cb * T[i, :]
    is_basic = np.zeros(N, dtype=bool)
    is_basic[basis] = True
    movable = lo < hi
    while True:
        if iters >= max_iter:
            return ITERATION_LIMIT, iters
        eligible = movable & ~is_basic & (((~at_ub) & (d < -COST_TOL)) | (at_ub & (d > COST_TOL)))
        cand = np.flatnonzero(eligible)
        if cand.size == 0:
            return OPTIMAL, iters
        j = int(cand[0])
        direction = -1.0 if at_ub[j] else 1.0

        col = T[:, j]
        alpha = direction * col
        bl = lo[basis]
        bu = hi[basis]
        t = np.full(m, np.inf)
        dec = (alpha > PIVOT_TOL) & np.isfinite(bl)
        inc = (alpha < -PIVOT_TOL) & np.isfinite(bu)
        t[dec] = (xB[dec] - bl[dec]) / alpha[dec]
        t[inc] = (bu[inc] - xB[inc]) / (-alpha[inc])
        t[t < 0.0] = 0.0
        flip = hi[j] - lo[j]
        tmin = min(float(t.min()) if m else np.inf, flip)
        if tmin == np.inf:
            return UNBOUNDED, iters
        # Bland tie-break: smallest variable index among minimising candidates.
        rows = np.flatnonzero(t <= tmin + TIE_TOL)
        leave, key = -1, (j if flip <= tmin + TIE_TOL else N)
        for r in rows:
            if basis[r] < key:
                key = int(basis[r])
                leave = int(r)

        step = direction * tmin
        xB -= step * col
        iters += 1
        if leave < 0:
            at_ub[j] = not at_ub[j]
            continue

        r = leave
        lvar = basis[r]
        at_ub[lvar] = alpha[r] < 0.0
        enter_val = (hi[j] if at_ub[j] else lo[j]) + step
        piv = T[r, j]
        T[r, :] /= piv
        f = T[:, j].copy()
        f[r] = 0.0
        T -= np.outer(f, T[r, :])
        dj = d[j]
        d -= dj * T[r, :]
        basis[r] = j
        xB[r] = enter_val
        is_basic[lvar] = False
        is_basic[j] = True


def lp_solve(c, A, sense, b, lb, ub, max_iter=100000):
    """Minimise ``c @ x`` s.t. ``A x (sense) b``, ``lb <= x <= ub``.

    ``sense[i]`` is -1 for <=, 0 for =, +1 for >=.  Returns
    ``(status, x, objective, iterations)``.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    sense = np.asarray(sense)
    m, n = A.shape

    if (lb > ub).any():
        return INFEASIBLE, np.full(n, np.nan), np.inf, 0

    val = np.where(np.isfinite(lb), lb, ub)
    if not np.isfinite(val).all():
        raise ValueError("free structural variables are not supported")

    r = b.copy()
    for j in range(n):
        if val[j] != 0.0:
            r -= A[:, j] * val[j]

    s_lo = np.where(sense > 0, -np.inf, 0.0)
    s_hi = np.where(sense < 0, np.inf, 0.0)

    nnz = (A != 0.0).sum(axis=0)
    single_row = np.where(nnz == 1, (A != 0.0).argmax(axis=0), -1) if m else np.full(n, -1)
    used = np.zeros(n, dtype=bool)

    basis = np.empty(m, dtype=np.int64)
    xB = np.empty(m)
    pivcoef = np.ones(m)
    art_rows, art_sign = [], []
    for i in range(m):
        if s_lo[i] - FEAS_TOL <= r[i] <= s_hi[i] + FEAS_TOL:
            basis[i] = n + i
            xB[i] = r[i]
            continue
        placed = False
        for j in np.flatnonzero(single_row == i):
            if used[j]:
                continue
            v = val[j] + r[i] / A[i, j]
            if lb[j] - FEAS_TOL <= v <= ub[j] + FEAS_TOL:
                basis[i] = j
                xB[i] = v
                pivcoef[i] = A[i, j]
                used[j] = True
                placed = True
                break
        if not placed:
            sign = 1.0 if r[i] >= 0.0 else -1.0
            art_rows.append(i)
            art_sign.append(sign)
            basis[i] = n + m + len(art_rows) - 1
            xB[i] = abs(r[i])
            pivcoef[i] = sign

    na = len(art_rows)
    N = n + m + na
    T = np.zeros((m, N))
    T[:, :n] = A
    T[np.arange(m), n + np.arange(m)] = 1.0
    for a, (i, sign) in enumerate(zip(art_rows, art_sign)):
        T[i, n + m + a] = sign
    for i in range(m):
        if pivcoef[i] != 1.0:
            T[i, :] /= pivcoef[i]

    lo = np.concatenate([lb, s_lo, np.zeros(na)])
    hi = np.concatenate([ub, s_hi, np.full(na, np.inf)])
    at_ub = np.zeros(N, dtype=bool)
    at_ub[:n] = ~np.isfinite(lb)
    at_ub[n:n + m] = sense > 0

    iters = 0
    if na:
        cost1 = np.zeros(N)
        cost1[n + m:] = 1.0
        status, iters = _simplex(T, xB, basis, at_ub, lo, hi, cost1, max_iter, iters)
        if status != OPTIMAL:
            return status, np.full(n, np.nan), np.inf, iters
        infeas = 0.0
        for i in range(m):
            if basis[i] >= n + m:
                infeas += xB[i]
        if infeas > PHASE1_TOL:
            return INFEASIBLE, np.full(n, np.nan), np.inf, iters
        hi[n + m:] = 0.0
        at_ub[n + m:] = False

    cost2 = np.zeros(N)
    cost2[:n] = c
    status, iters = _simplex(T, xB, basis, at_ub, lo, hi, cost2, max_iter, iters)
    if status != OPTIMAL:
        return status, np.full(n, np.nan), np.inf, iters

    x = np.where(at_ub[:n], ub, lb)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = xB[i]
    x = np.minimum(np.maximum(x, lb), ub)
    obj = 0.0
    for j in range(n):
        obj += c[j] * x[j]
    return OPTIMAL, x, obj, iters
