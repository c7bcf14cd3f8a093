"""Pure-numpy bounded-variable simplex kernel (fallback backend).

Solves   maximize c'x   s.t.   A x = b,   lo <= x <= hi
with entries of lo/hi allowed to be -inf/+inf. Inequalities must be converted
to equalities with slack variables by the caller (see limbplan.opt.linprog).

Two entry points, shared contract with the compiled backend in _simplex.pyx:

* cold_solve:    two-phase primal simplex from scratch.
* warm_resolve:  dual simplex restart from a stored basis after bound changes
                 only (the branch-and-bound workhorse); falls back to
                 NEED_COLD when the warm start cannot be trusted.

Pivoting is deterministic: Dantzig pricing with first-index tie-breaking,
switching to Bland's rule after a run of degenerate pivots. The basis inverse
is kept explicitly (problems here are small and dense) and refreshed
periodically.
"""

from __future__ import annotations

import numpy as np

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITER_LIMIT = 3
NUMERICAL = 4
NEED_COLD = 5

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FREE = 3

_FEAS_TOL = 1e-9
_DUAL_TOL = 1e-9
_PIVOT_TOL = 1e-9
_ZERO_SNAP = 1e-12
_DEGEN_LIMIT = 60
_REFRESH_EVERY = 100

BACKEND_NAME = "python"


def _nonbasic_value(j, vstat, lo, hi):
    s = vstat[j]
    if s == AT_LOWER:
        return lo[j]
    if s == AT_UPPER:
        return hi[j]
    return 0.0


class _Workspace:
    """Extended problem [A | I] with explicit basis inverse."""

    def __init__(self, A, b, lo, hi):
        A = np.ascontiguousarray(A, dtype=float)
        self.m, self.n = A.shape
        self.A = np.hstack([A, np.eye(self.m)])  # (m, n + m)
        self.b = np.asarray(b, dtype=float).copy()
        self.lo = np.concatenate([lo, np.zeros(self.m)])
        self.hi = np.concatenate([hi, np.zeros(self.m)])
        self.ntot = self.n + self.m
        self.basis = np.zeros(self.m, dtype=np.int64)
        self.vstat = np.zeros(self.ntot, dtype=np.int8)
        self.Binv = np.zeros((self.m, self.m))
        self.xB = np.zeros(self.m)

    def nonbasic_values(self):
        v = np.where(self.vstat == AT_UPPER, self.hi, self.lo)
        v[self.vstat == FREE] = 0.0
        v[self.vstat == BASIC] = 0.0
        return v

    def refresh(self):
        """Recompute Binv and xB from the basis; False if the basis is singular."""
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(self.Binv)):
            return False
        v = self.nonbasic_values()
        rhs = self.b - self.A @ v
        self.xB = self.Binv @ rhs
        return True

    def solution(self):
        x = self.nonbasic_values()
        x[self.basis] = self.xB
        return x


def _primal_loop(w: _Workspace, c, max_iter, phase1):
    """Primal simplex iterations; returns (status, iterations)."""
    m, ntot = w.m, w.ntot
    bland = False
    degen_run = 0
    since_refresh = 0
    it = 0
    while True:
        if phase1:
            art = w.basis >= w.n
            art_sum = float(np.abs(w.xB[art]).sum())
            if art_sum <= _FEAS_TOL:
                return OPTIMAL, it
        if it >= max_iter:
            return ITER_LIMIT, it
        it += 1

        y = w.Binv.T @ c[w.basis]
        d = c - y @ w.A
        movable = (w.hi - w.lo) > _ZERO_SNAP
        eligible = np.zeros(ntot, dtype=bool)
        eligible |= (w.vstat == AT_LOWER) & (d > _DUAL_TOL) & movable
        eligible |= (w.vstat == AT_UPPER) & (d < -_DUAL_TOL) & movable
        eligible |= (w.vstat == FREE) & (np.abs(d) > _DUAL_TOL)
        idx = np.flatnonzero(eligible)
        if idx.size == 0:
            return OPTIMAL, it
        if bland:
            j = int(idx[0])
        else:
            j = int(idx[np.argmax(np.abs(d[idx]))])
        sigma = 1.0 if (w.vstat[j] == AT_LOWER or d[j] > 0) else -1.0

        col = w.Binv @ w.A[:, j]
        col[np.abs(col) < _ZERO_SNAP] = 0.0

        # Ratio test: entering moves by delta >= 0, basics change by -sigma*delta*col.
        step = sigma * col
        lim = np.inf
        leave = -1
        if np.isfinite(w.lo[j]) and np.isfinite(w.hi[j]):
            lim = w.hi[j] - w.lo[j]
        dec = step > _PIVOT_TOL
        inc = step < -_PIVOT_TOL
        ratios = np.full(m, np.inf)
        lo_b = w.lo[w.basis]
        hi_b = w.hi[w.basis]
        ratios[dec] = (w.xB[dec] - lo_b[dec]) / step[dec]
        ratios[inc] = (w.xB[inc] - hi_b[inc]) / step[inc]
        ratios[~np.isfinite(ratios)] = np.inf
        np.maximum(ratios, 0.0, out=ratios)
        rmin = ratios.min() if m else np.inf
        if rmin < lim:
            # Rows tie within tolerance: prefer the largest pivot for stability,
            # then the lowest variable index (pure lowest-index in Bland mode).
            tie = np.flatnonzero(ratios <= rmin * (1 + 1e-9) + 1e-12)
            if bland:
                leave = int(tie[np.argmin(w.basis[tie])])
            else:
                piv = np.abs(step[tie])
                best = tie[piv >= piv.max() * (1 - 1e-9)]
                leave = int(best[np.argmin(w.basis[best])])
            delta = float(max(ratios[leave], 0.0))
        else:
            if not np.isfinite(lim):
                return (OPTIMAL, it) if phase1 else (UNBOUNDED, it)
            delta = float(lim)

        if delta <= _ZERO_SNAP:
            degen_run += 1
            if degen_run > _DEGEN_LIMIT:
                bland = True
        else:
            degen_run = 0
            bland = False

        if leave < 0:
            # Bound flip, no basis change.
            w.xB -= delta * step
            w.vstat[j] = AT_UPPER if w.vstat[j] == AT_LOWER else AT_LOWER
            continue

        out = int(w.basis[leave])
        enter_val = _nonbasic_value(j, w.vstat, w.lo, w.hi) + sigma * delta
        w.xB -= delta * step
        # Leaving variable settles on the bound it hit.
        w.vstat[out] = AT_LOWER if step[leave] > 0 else AT_UPPER
        if out >= w.n:
            w.lo[out] = 0.0
            w.hi[out] = 0.0
            w.vstat[out] = AT_LOWER
        piv = col[leave]
        if abs(piv) < _ZERO_SNAP:
            return NUMERICAL, it
        w.basis[leave] = j
        w.vstat[j] = BASIC
        # Product-form update of Binv.
        brow = w.Binv[leave, :] / piv
        w.Binv -= np.outer(col, brow)
        w.Binv[leave, :] = brow
        w.xB[leave] = enter_val

        since_refresh += 1
        if since_refresh >= _REFRESH_EVERY:
            since_refresh = 0
            if not w.refresh():
                return NUMERICAL, it


def _singleton_columns(A, n):
    """row -> column holding that row's only nonzero (any safe pivot size).

    Slack columns of inequality rows look exactly like this (row scaling may
    shrink them below 1); a crash basis built from them leaves phase 1 with
    only the rows that have no singleton column.
    """
    nnz = np.count_nonzero(A, axis=0)
    out = {}
    for j in np.flatnonzero(nnz == 1):
        i = int(np.flatnonzero(A[:, j])[0])
        if i not in out and abs(A[i, j]) > 1e-8:
            out[i] = j
    return out


def cold_solve(A, b, c, lo, hi, max_iter=0):
    """Two-phase primal simplex. Returns (status, x, obj, iters, basis, vstat)."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if not max_iter:
        max_iter = 50 * (m + n) + 200

    w = _Workspace(A, b, lo, hi)
    # Nonbasic start for structurals: bound nearest zero, else free at zero.
    for j in range(n):
        if np.isfinite(lo[j]):
            w.vstat[j] = AT_LOWER
        elif np.isfinite(hi[j]):
            w.vstat[j] = AT_UPPER
        else:
            w.vstat[j] = FREE
    v = w.nonbasic_values()
    r = w.b - w.A[:, :n] @ v[:n]

    # Crash: a singleton +-1 column whose implied value sits within its bounds
    # takes the row; only the rows left over get artificials in phase 1.
    art = np.arange(n, n + m)
    singles = _singleton_columns(A, n)
    basis = art.copy()
    for i, j in singles.items():
        val = (r[i] + A[i, j] * v[j]) / A[i, j]
        if lo[j] - _FEAS_TOL <= val <= hi[j] + _FEAS_TOL:
            basis[i] = j
    crash = basis < n
    if np.any(crash):
        w.basis = basis
        w.vstat[basis[crash]] = BASIC
        w.vstat[art] = BASIC  # rows without a crash column keep artificials
        w.vstat[art[crash]] = AT_LOWER
        w.lo[art] = 0.0
        w.hi[art] = 0.0
        if not w.refresh():  # diagonal +-1 basis: cannot actually fail
            return NUMERICAL, w.solution()[:n], np.nan, 0, w.basis, w.vstat
        resid = w.xB - np.clip(w.xB, w.lo[w.basis], w.hi[w.basis])
        rows_bad = np.flatnonzero((np.abs(resid) > _FEAS_TOL) | (basis >= n))
    else:
        rows_bad = np.arange(m)

    sign = np.ones(m)
    if rows_bad.size == m and not np.any(crash):
        sign = np.where(r >= 0.0, 1.0, -1.0)
        w.basis = art.copy()
        w.vstat[art] = BASIC
        w.Binv = np.eye(m)
        w.xB = r.copy()
        w.lo[art] = np.where(sign > 0, 0.0, -np.inf)
        w.hi[art] = np.where(sign > 0, np.inf, 0.0)
        c1 = np.zeros(w.ntot)
        c1[art] = -sign
    else:
        # Crash rows that landed outside their bounds re-enter via artificials
        # carrying the infeasibility; in-bounds rows keep their crash columns.
        c1 = np.zeros(w.ntot)
        for i in rows_bad:
            out = int(w.basis[i])
            if out < n:
                w.vstat[out] = (AT_LOWER if abs(w.xB[i] - w.lo[out])
                                <= abs(w.xB[i] - w.hi[out]) else AT_UPPER)
                if not np.isfinite(w.lo[out]) and not np.isfinite(w.hi[out]):
                    w.vstat[out] = FREE
            w.basis[i] = art[i]
            w.vstat[art[i]] = BASIC
        if not w.refresh():
            return NUMERICAL, w.solution()[:n], np.nan, 0, w.basis, w.vstat
        for i in rows_bad:
            ai = art[i]
            if w.xB[i] >= 0.0:
                w.lo[ai], w.hi[ai] = 0.0, np.inf
                c1[ai] = -1.0
            else:
                w.lo[ai], w.hi[ai] = -np.inf, 0.0
                c1[ai] = 1.0

    status, it1 = _primal_loop(w, c1, max_iter, phase1=True)
    if status in (NUMERICAL, ITER_LIMIT):
        return status, w.solution()[:n], np.nan, it1, w.basis, w.vstat
    art_mask = w.basis >= n
    if float(np.abs(w.xB[art_mask]).sum()) > 1e-7 * (1.0 + float(np.abs(w.b).max(initial=0.0))):
        x = w.solution()[:n]
        return INFEASIBLE, x, np.nan, it1, w.basis, w.vstat

    # Pin artificials at zero; pivot basic ones out where a real column allows.
    w.lo[art] = 0.0
    w.hi[art] = 0.0
    for j in art:
        if w.vstat[j] != BASIC:
            w.vstat[j] = AT_LOWER
    for row in np.flatnonzero(w.basis >= n):
        alpha = w.Binv[row, :] @ w.A[:, :n]
        alpha[w.vstat[:n] == BASIC] = 0.0
        k = int(np.argmax(np.abs(alpha)))
        if abs(alpha[k]) <= 1e-7:
            continue  # redundant row; the artificial stays basic pinned at zero
        out = int(w.basis[row])
        col = w.Binv @ w.A[:, k]
        piv = col[row]
        w.basis[row] = k
        w.vstat[k] = BASIC
        w.vstat[out] = AT_LOWER
        brow = w.Binv[row, :] / piv
        w.Binv -= np.outer(col, brow)
        w.Binv[row, :] = brow
    # xB (and any drift in Binv) is recomputed from the final basis.
    if not w.refresh():
        return NUMERICAL, w.solution()[:n], np.nan, it1, w.basis, w.vstat

    c2 = np.concatenate([c, np.zeros(m)])
    status, it2 = _primal_loop(w, c2, max_iter, phase1=False)
    x = w.solution()[:n]
    obj = float(c @ x)
    return status, x, obj, it1 + it2, w.basis.copy(), w.vstat.copy()


def warm_resolve(A, b, c, lo, hi, basis, vstat, max_iter=0):
    """Dual simplex restart after bound changes; NEED_COLD when not trustworthy.

    The stored basis must come from a previous solve of the same (A, b, c);
    only lo/hi may differ. Runs dual iterations until primal feasible, then a
    primal cleanup pass (usually zero iterations) to restore optimality.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if not max_iter:
        max_iter = 50 * (m + n) + 200

    w = _Workspace(A, b, lo, hi)
    w.basis = np.asarray(basis, dtype=np.int64).copy()
    w.vstat = np.asarray(vstat, dtype=np.int8).copy()
    # Artificials stay pinned at zero for restarts.
    if not w.refresh():
        return NEED_COLD, None, np.nan, 0, w.basis, w.vstat

    cext = np.concatenate([c, np.zeros(m)])
    it = 0
    while True:
        if it >= max_iter:
            return NEED_COLD, None, np.nan, it, w.basis, w.vstat
        it += 1
        lo_b = w.lo[w.basis]
        hi_b = w.hi[w.basis]
        viol_lo = lo_b - w.xB
        viol_hi = w.xB - hi_b
        viol = np.maximum(viol_lo, viol_hi)
        r = int(np.argmax(viol)) if m else -1
        if r < 0 or viol[r] <= 1e-8:
            break
        need_increase = viol_lo[r] > viol_hi[r]

        y = w.Binv.T @ cext[w.basis]
        d = cext - y @ w.A
        alpha = w.Binv[r, :] @ w.A
        movable = (w.hi - w.lo) > _ZERO_SNAP
        if need_increase:
            cand = ((w.vstat == AT_LOWER) & (alpha < -_PIVOT_TOL) & movable) | (
                (w.vstat == AT_UPPER) & (alpha > _PIVOT_TOL) & movable
            ) | ((w.vstat == FREE) & (np.abs(alpha) > _PIVOT_TOL))
        else:
            cand = ((w.vstat == AT_LOWER) & (alpha > _PIVOT_TOL) & movable) | (
                (w.vstat == AT_UPPER) & (alpha < -_PIVOT_TOL) & movable
            ) | ((w.vstat == FREE) & (np.abs(alpha) > _PIVOT_TOL))
        idx = np.flatnonzero(cand)
        if idx.size == 0:
            x = w.solution()[:n]
            return INFEASIBLE, x, np.nan, it, w.basis, w.vstat
        theta = np.abs(d[idx]) / np.abs(alpha[idx])
        tie = np.flatnonzero(theta <= theta.min() * (1 + 1e-9) + 1e-12)
        sub = idx[tie]
        piv_mag = np.abs(alpha[sub])
        best = sub[piv_mag >= piv_mag.max() * (1 - 1e-9)]
        j = int(best.min())

        col = w.Binv @ w.A[:, j]
        piv = col[r]
        if abs(piv) < _PIVOT_TOL:
            return NEED_COLD, None, np.nan, it, w.basis, w.vstat
        target = lo_b[r] if need_increase else hi_b[r]
        delta_e = (w.xB[r] - target) / piv
        out = int(w.basis[r])
        enter_val = _nonbasic_value(j, w.vstat, w.lo, w.hi) + delta_e
        w.xB -= delta_e * col
        w.vstat[out] = AT_LOWER if need_increase else AT_UPPER
        if out >= n:
            w.vstat[out] = AT_LOWER
        w.basis[r] = j
        w.vstat[j] = BASIC
        brow = w.Binv[r, :] / piv
        w.Binv -= np.outer(col, brow)
        w.Binv[r, :] = brow
        w.xB[r] = enter_val
        if it % _REFRESH_EVERY == 0 and not w.refresh():
            return NEED_COLD, None, np.nan, it, w.basis, w.vstat

    if not w.refresh():
        return NEED_COLD, None, np.nan, it, w.basis, w.vstat
    cext = np.concatenate([c, np.zeros(m)])
    status, it2 = _primal_loop(w, cext, max_iter, phase1=False)
    it += it2
    if status in (NUMERICAL, ITER_LIMIT):
        return NEED_COLD, None, np.nan, it, w.basis, w.vstat
    x = w.solution()[:n]
    # Warm restarts must not drift off the new bounds.
    if np.any(x < lo - 1e-6) or np.any(x > hi + 1e-6):
        return NEED_COLD, None, np.nan, it, w.basis, w.vstat
    return status, x, float(c @ x), it, w.basis.copy(), w.vstat.copy()
