# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled bounded-variable simplex kernel (BLAS-backed).

Twin of ``_simplex_py``: same entry points (``cold_solve``/``warm_resolve``),
same status codes, same tolerances, same ratio-test and Bland-fallback rules.
The speed comes from implementation choices that do not change the contract:
the constraint matrix is walked through a compressed sparse column view,
reduced costs are updated incrementally from the pivot row (recomputed at
every basis refresh), the dense basis inverse is maintained with BLAS rank-1
updates, and pricing uses devex reference weights (the numpy twin uses plain
Dantzig pricing, so the two backends may visit different optimal vertices of
degenerate problems; they agree on status and objective, which is what the
cross-backend tests assert).
"""

import weakref

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, isfinite
from scipy.linalg.cython_blas cimport daxpy, dgemv, dger

cnp.import_array()

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

BACKEND_NAME = "cython"

cdef double _FEAS_TOL = 1e-9
cdef double _DUAL_TOL = 1e-9
cdef double _PIVOT_TOL = 1e-9
cdef double _ZERO_SNAP = 1e-12
cdef int _DEGEN_LIMIT = 60
# The numpy twin refactors every 100 pivots. Here the refactor (a dense
# inverse) is the single most expensive step, so the interval is longer;
# reduced costs are recomputed at each refactor, and downstream feasibility
# tolerances bound any drift a run of rank-1 updates can introduce.
cdef int _REFRESH_EVERY = 250

cdef int _AT_LOWER = 0
cdef int _AT_UPPER = 1
cdef int _BASIC = 2
cdef int _FREE = 3

cdef int _OPTIMAL = 0
cdef int _INFEASIBLE = 1
cdef int _UNBOUNDED = 2
cdef int _ITER_LIMIT = 3
cdef int _NUMERICAL = 4
cdef int _NEED_COLD = 5


cdef class _State:
    """Extended problem [A | I] with CSC column access and dense F-order Binv."""

    cdef Py_ssize_t m, n, ntot, nnz
    cdef long drift  # rank-1 updates applied to binv since the last refactor
    cdef cnp.int64_t[::1] indptr, indices
    cdef double[::1] data
    cdef double[::1] b, lo, hi, binv, xb, d
    cdef double[::1] col, brow, arow, ybuf, rhs, cbbuf, devex
    cdef cnp.int64_t[::1] basis
    cdef cnp.int8_t[::1] vstat
    cdef object Adense  # (m, n) numpy view kept for dense basis gathers


# Branch and bound re-solves the same constraint matrix with patched bounds
# hundreds of times; the sparse view of the last matrix seen is kept so those
# calls skip the O(m*n) rebuild. Keyed by object identity, guarded by a
# weakref so a recycled id cannot alias a different matrix. Only read-only
# arrays participate: a writable matrix may be mutated in place between calls
# (some callers rewrite one column per solve), which identity cannot see.
_csc_cache = {"ref": None, "key": 0, "csc": None}

# Solved states from recent warm/cold calls, keyed by (matrix id, final basis
# bytes). A warm restart whose starting basis matches a cached entry reuses
# that basis inverse (an O(m^2) copy) instead of refactoring (O(m^3)); the
# carried ``drift`` count keeps the every-_REFRESH_EVERY refactor policy
# honest across the handoff. Two slots cover the dominant pop patterns in
# best-bound search (dive into a child / return to the sibling).
_warm_cache = {}
_WARM_CACHE_SLOTS = 2
warm_cache_stats = {"hit": 0, "miss": 0}


cdef void _warm_cache_put(object A, _State s):
    if A.flags.writeable:
        return
    key = (id(A), bytes(memoryview(np.asarray(s.basis))))
    _warm_cache.pop(key, None)
    _warm_cache[key] = (weakref.ref(A), s)
    while len(_warm_cache) > _WARM_CACHE_SLOTS:
        _warm_cache.pop(next(iter(_warm_cache)))


cdef _State _warm_cache_get(object A, object basis):
    if A.flags.writeable:
        return None
    key = (id(A), bytes(memoryview(np.ascontiguousarray(basis, dtype=np.int64))))
    entry = _warm_cache.get(key)
    if entry is None or entry[0]() is not A:
        return None
    return entry[1]


cdef _State _make_state(object A, object b, object lo, object hi):
    cdef _State s = _State()
    A = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1]
    s.m, s.n, s.ntot = m, n, n + m
    s.Adense = A
    s.b = np.asarray(b, dtype=np.float64).copy()
    s.lo = np.concatenate([np.asarray(lo, dtype=np.float64), np.zeros(m)])
    s.hi = np.concatenate([np.asarray(hi, dtype=np.float64), np.zeros(m)])

    cached = _csc_cache["ref"]
    if (not A.flags.writeable and cached is not None
            and _csc_cache["key"] == id(A) and cached() is A):
        s.indptr, s.indices, s.data = _csc_cache["csc"]
        s.nnz = s.indices.shape[0]
    else:
        _build_csc(s, A)
        if not A.flags.writeable:
            _csc_cache["ref"] = weakref.ref(A)
            _csc_cache["key"] = id(A)
            _csc_cache["csc"] = (s.indptr, s.indices, s.data)

    s.binv = np.zeros(m * m)
    s.xb = np.zeros(m)
    s.d = np.zeros(s.ntot)
    s.col = np.zeros(m)
    s.brow = np.zeros(m)
    s.arow = np.zeros(s.ntot)
    s.ybuf = np.zeros(m)
    s.rhs = np.zeros(m)
    s.cbbuf = np.zeros(m)
    s.devex = np.ones(s.ntot)
    s.basis = np.zeros(m, dtype=np.int64)
    s.vstat = np.zeros(s.ntot, dtype=np.int8)
    return s


cdef void _build_csc(_State s, object A):
    """CSC of [A | I]: artificial column n+i holds the single entry e_i = 1."""
    cdef const double[:, ::1] Av = A
    cdef Py_ssize_t m = s.m, n = s.n
    cdef Py_ssize_t i, j, t
    cdef Py_ssize_t nnz = m
    for i in range(m):
        for j in range(n):
            if Av[i, j] != 0.0:
                nnz += 1
    s.nnz = nnz
    s.indptr = np.zeros(s.ntot + 1, dtype=np.int64)
    s.indices = np.zeros(nnz, dtype=np.int64)
    s.data = np.zeros(nnz, dtype=np.float64)
    t = 0
    for j in range(n):
        s.indptr[j] = t
        for i in range(m):
            if Av[i, j] != 0.0:
                s.indices[t] = i
                s.data[t] = Av[i, j]
                t += 1
    for j in range(m):
        s.indptr[n + j] = t
        s.indices[t] = j
        s.data[t] = 1.0
        t += 1
    s.indptr[s.ntot] = t


cdef inline double _nb_value(_State s, Py_ssize_t j):
    if s.vstat[j] == _AT_LOWER:
        return s.lo[j]
    if s.vstat[j] == _AT_UPPER:
        return s.hi[j]
    return 0.0


cdef void _col_of(_State s, Py_ssize_t j):
    """col = Binv @ a_j (sparse column of [A|I], dense F-order Binv)."""
    cdef Py_ssize_t t, i, k
    cdef int m = <int> s.m, one = 1
    cdef double v
    for k in range(s.m):
        s.col[k] = 0.0
    for t in range(s.indptr[j], s.indptr[j + 1]):
        i = s.indices[t]
        v = s.data[t]
        daxpy(&m, &v, &s.binv[i * s.m], &one, &s.col[0], &one)


cdef void _row_of(_State s, Py_ssize_t r):
    """brow = row r of Binv (strided read out of the F-order buffer)."""
    cdef Py_ssize_t k
    for k in range(s.m):
        s.brow[k] = s.binv[r + k * s.m]


cdef void _arow_of(_State s):
    """arow[j] = brow . a_j for every column of [A|I] (call _row_of first)."""
    cdef Py_ssize_t j, t
    cdef double acc
    for j in range(s.ntot):
        acc = 0.0
        for t in range(s.indptr[j], s.indptr[j + 1]):
            acc += s.brow[s.indices[t]] * s.data[t]
        s.arow[j] = acc


cdef void _compute_d(_State s, double[::1] cvec):
    """Reduced costs from scratch: y = Binv^T c_B, d = c - y^T [A|I]."""
    cdef Py_ssize_t k, j, t
    cdef int m = <int> s.m, one = 1
    cdef double zero = 0.0, oned = 1.0, acc
    cdef char *transt = b'T'
    if m > 0:
        for k in range(s.m):
            s.cbbuf[k] = cvec[s.basis[k]]
        dgemv(transt, &m, &m, &oned, &s.binv[0], &m, &s.cbbuf[0], &one,
              &zero, &s.ybuf[0], &one)
    for j in range(s.ntot):
        acc = cvec[j]
        for t in range(s.indptr[j], s.indptr[j + 1]):
            acc -= s.ybuf[s.indices[t]] * s.data[t]
        s.d[j] = acc


cdef void _pivot_binv(_State s, Py_ssize_t leave, double piv):
    """Product-form update; expects col = Binv a_j and brow = old row leave."""
    cdef int m = <int> s.m, one = 1
    cdef double alpha = -1.0 / piv
    cdef Py_ssize_t k
    dger(&m, &m, &alpha, &s.col[0], &one, &s.brow[0], &one, &s.binv[0], &m)
    for k in range(s.m):
        s.binv[leave + k * s.m] = s.brow[k] / piv
    s.drift += 1


cdef void _update_d(_State s, Py_ssize_t j, double piv):
    """d after the pivot: d -= (d_j / piv) * arow (then d_j exactly 0)."""
    cdef double ratio = s.d[j] / piv
    cdef Py_ssize_t k
    if ratio != 0.0:
        for k in range(s.ntot):
            s.d[k] -= ratio * s.arow[k]
    s.d[j] = 0.0


cdef bint _refactor(_State s):
    """Recompute Binv as a dense inverse of the basis; False if singular."""
    cdef Py_ssize_t k, j, t
    B = np.zeros((s.m, s.m))
    cdef double[:, ::1] Bv = B
    cdef const double[:, ::1] Av = s.Adense
    for k in range(s.m):
        j = s.basis[k]
        if j < s.n:
            for t in range(s.m):
                Bv[t, k] = Av[t, j]
        else:
            Bv[j - s.n, k] = 1.0
    try:
        Binv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.isfinite(Binv)):
        return False
    binv_f = np.asfortranarray(Binv).ravel(order="F")
    cdef double[::1] bf = binv_f
    for k in range(s.m * s.m):
        s.binv[k] = bf[k]
    s.drift = 0
    return True


cdef void _recompute_xb(_State s):
    """xB = Binv (b - N v) for the current Binv, bounds, and vstat."""
    cdef Py_ssize_t k, j, t
    cdef int m = <int> s.m, one = 1
    cdef double v, zero = 0.0, oned = 1.0
    cdef char *transn = b'N'
    # rhs = b - sum over nonbasic columns of their bound value.
    for k in range(s.m):
        s.rhs[k] = s.b[k]
    for j in range(s.ntot):
        if s.vstat[j] == _BASIC:
            continue
        v = _nb_value(s, j)
        if v != 0.0:
            for t in range(s.indptr[j], s.indptr[j + 1]):
                s.rhs[s.indices[t]] -= v * s.data[t]
    if m > 0:
        dgemv(transn, &m, &m, &oned, &s.binv[0], &m, &s.rhs[0], &one,
              &zero, &s.xb[0], &one)


cdef bint _refresh(_State s):
    """Refactor Binv and recompute xB from the basis; False if singular."""
    if not _refactor(s):
        return False
    _recompute_xb(s)
    return True


cdef object _solution(_State s):
    """Structural part of the current vertex."""
    x = np.zeros(s.ntot)
    cdef double[::1] xv = x
    cdef Py_ssize_t j, k
    for j in range(s.ntot):
        if s.vstat[j] != _BASIC:
            xv[j] = _nb_value(s, j)
    for k in range(s.m):
        xv[s.basis[k]] = s.xb[k]
    return x[:s.n]


cdef int _primal_loop(_State s, double[::1] cvec, long max_iter, bint phase1,
                      long* iters_out):
    """Primal simplex with devex pricing, Bland fallback; twin of the numpy
    loop but with incrementally maintained reduced costs."""
    cdef bint bland = False
    cdef int degen_run = 0
    cdef long it = 0
    cdef Py_ssize_t j, k, r, leave, out, tie_n
    cdef double art_sum, dd, best, sigma, lim, rmin, ratio, step_r, thresh
    cdef double piv_mag, delta, piv, enter_val, score, wj, wcand, wmax
    cdef bint movable, elig
    _compute_d(s, cvec)
    for k in range(s.ntot):
        s.devex[k] = 1.0
    while True:
        if phase1:
            art_sum = 0.0
            for k in range(s.m):
                if s.basis[k] >= s.n:
                    art_sum += fabs(s.xb[k])
            if art_sum <= _FEAS_TOL:
                iters_out[0] = it
                return _OPTIMAL
        if it >= max_iter:
            iters_out[0] = it
            return _ITER_LIMIT
        it += 1

        # Entering variable: first eligible (Bland) or best d^2 / devex weight
        # (first index on ties). Eligibility thresholds match the numpy twin.
        j = -1
        best = 0.0
        for k in range(s.ntot):
            if s.vstat[k] == _BASIC:
                continue
            dd = s.d[k]
            movable = (s.hi[k] - s.lo[k]) > _ZERO_SNAP
            if s.vstat[k] == _AT_LOWER:
                elig = movable and dd > _DUAL_TOL
            elif s.vstat[k] == _AT_UPPER:
                elig = movable and dd < -_DUAL_TOL
            else:
                elig = fabs(dd) > _DUAL_TOL
            if not elig:
                continue
            if bland:
                j = k
                break
            score = dd * dd / s.devex[k]
            if score > best:
                best = score
                j = k
        if j < 0:
            iters_out[0] = it
            return _OPTIMAL
        sigma = 1.0 if (s.vstat[j] == _AT_LOWER or s.d[j] > 0) else -1.0

        _col_of(s, j)
        for k in range(s.m):
            if fabs(s.col[k]) < _ZERO_SNAP:
                s.col[k] = 0.0

        lim = INFINITY
        if isfinite(s.lo[j]) and isfinite(s.hi[j]):
            lim = s.hi[j] - s.lo[j]
        rmin = INFINITY
        for k in range(s.m):
            step_r = sigma * s.col[k]
            if step_r > _PIVOT_TOL:
                ratio = (s.xb[k] - s.lo[s.basis[k]]) / step_r
            elif step_r < -_PIVOT_TOL:
                ratio = (s.xb[k] - s.hi[s.basis[k]]) / step_r
            else:
                continue
            if not isfinite(ratio):
                continue
            if ratio < 0.0:
                ratio = 0.0
            if ratio < rmin:
                rmin = ratio

        leave = -1
        if rmin < lim:
            # Ties within tolerance: largest pivot, then lowest basis index
            # (pure lowest-basis-index under Bland).
            thresh = rmin * (1.0 + 1e-9) + 1e-12
            piv_mag = 0.0
            tie_n = 0
            for k in range(s.m):
                step_r = sigma * s.col[k]
                if step_r > _PIVOT_TOL:
                    ratio = (s.xb[k] - s.lo[s.basis[k]]) / step_r
                elif step_r < -_PIVOT_TOL:
                    ratio = (s.xb[k] - s.hi[s.basis[k]]) / step_r
                else:
                    continue
                if not isfinite(ratio):
                    continue
                if ratio < 0.0:
                    ratio = 0.0
                if ratio > thresh:
                    continue
                tie_n += 1
                if bland:
                    if leave < 0 or s.basis[k] < s.basis[leave]:
                        leave = k
                elif fabs(step_r) > piv_mag * (1.0 + 1e-9):
                    piv_mag = fabs(step_r)
                    leave = k
                elif fabs(step_r) >= piv_mag * (1.0 - 1e-9) and \
                        s.basis[k] < s.basis[leave]:
                    leave = k
            step_r = sigma * s.col[leave]
            if step_r > _PIVOT_TOL:
                delta = (s.xb[leave] - s.lo[s.basis[leave]]) / step_r
            else:
                delta = (s.xb[leave] - s.hi[s.basis[leave]]) / step_r
            if delta < 0.0:
                delta = 0.0
        else:
            if not isfinite(lim):
                if not phase1 and s.drift > 0:
                    # An unbounded ray found on a drifted inverse is not a
                    # certificate; refactor and rescan before believing it.
                    if not _refresh(s):
                        iters_out[0] = it
                        return _NUMERICAL
                    _compute_d(s, cvec)
                    continue
                iters_out[0] = it
                return _OPTIMAL if phase1 else _UNBOUNDED
            delta = lim

        if delta <= _ZERO_SNAP:
            degen_run += 1
            if degen_run > _DEGEN_LIMIT:
                bland = True
        else:
            degen_run = 0
            bland = False

        if leave < 0:
            # Bound flip: no basis change, reduced costs unchanged.
            for k in range(s.m):
                s.xb[k] -= delta * sigma * s.col[k]
            s.vstat[j] = _AT_UPPER if s.vstat[j] == _AT_LOWER else _AT_LOWER
            continue

        out = s.basis[leave]
        piv = s.col[leave]
        if fabs(piv) < _ZERO_SNAP:
            iters_out[0] = it
            return _NUMERICAL
        enter_val = _nb_value(s, j) + sigma * delta
        for k in range(s.m):
            s.xb[k] -= delta * sigma * s.col[k]
        s.vstat[out] = _AT_LOWER if sigma * s.col[leave] > 0 else _AT_UPPER
        if out >= s.n:
            s.lo[out] = 0.0
            s.hi[out] = 0.0
            s.vstat[out] = _AT_LOWER

        _row_of(s, leave)
        _arow_of(s)
        _update_d(s, j, piv)
        # Devex weight update; reference framework resets when weights blow up.
        wj = s.devex[j]
        wmax = 1.0
        for k in range(s.ntot):
            ratio = s.arow[k] / piv
            wcand = ratio * ratio * wj
            if wcand > s.devex[k]:
                s.devex[k] = wcand
            if s.devex[k] > wmax:
                wmax = s.devex[k]
        wcand = wj / (piv * piv)
        s.devex[out] = wcand if wcand > 1.0 else 1.0
        if wmax > 1e7:
            for k in range(s.ntot):
                s.devex[k] = 1.0
        s.basis[leave] = j
        s.vstat[j] = _BASIC
        _pivot_binv(s, leave, piv)
        s.xb[leave] = enter_val

        if s.drift >= _REFRESH_EVERY:
            if not _refresh(s):
                iters_out[0] = it
                return _NUMERICAL
            _compute_d(s, cvec)


def _singleton_columns(A, n):
    """row -> column holding that row's only nonzero (any safe pivot size)."""
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
    lo_in = np.asarray(lo, dtype=float)
    hi_in = np.asarray(hi, dtype=float)
    if not max_iter:
        max_iter = 50 * (m + n) + 200

    cdef _State s = _make_state(A, b, lo_in, hi_in)
    lo_ext = np.asarray(s.lo)
    hi_ext = np.asarray(s.hi)
    vstat = np.asarray(s.vstat)
    basis_view = np.asarray(s.basis)

    for j in range(n):
        if np.isfinite(lo_in[j]):
            vstat[j] = AT_LOWER
        elif np.isfinite(hi_in[j]):
            vstat[j] = AT_UPPER
        else:
            vstat[j] = FREE
    v = np.where(vstat[:n] == AT_UPPER, hi_ext[:n], lo_ext[:n])
    v[vstat[:n] == FREE] = 0.0
    r = np.asarray(s.b) - A @ v

    # Crash: singleton columns take their rows when the implied value fits the
    # bounds; leftover rows get artificials carrying the phase-1 infeasibility.
    art = np.arange(n, n + m)
    singles = _singleton_columns(A, n)
    basis = art.copy()
    for i, j in singles.items():
        val = (r[i] + A[i, j] * v[j]) / A[i, j]
        if lo_in[j] - _FEAS_TOL <= val <= hi_in[j] + _FEAS_TOL:
            basis[i] = j
    crash = basis < n
    c1 = np.zeros(n + m)
    if np.any(crash):
        basis_view[:] = basis
        vstat[basis[crash]] = BASIC
        vstat[art] = BASIC
        vstat[art[crash]] = AT_LOWER
        lo_ext[art] = 0.0
        hi_ext[art] = 0.0
        if not _refresh(s):
            return NUMERICAL, _solution(s), np.nan, 0, basis_view.copy(), vstat.copy()
        xb = np.asarray(s.xb)
        resid = xb - np.clip(xb, lo_ext[basis], hi_ext[basis])
        rows_bad = np.flatnonzero((np.abs(resid) > _FEAS_TOL) | (basis >= n))
    else:
        rows_bad = np.arange(m)

    if rows_bad.size == m and not np.any(crash):
        sign = np.where(r >= 0.0, 1.0, -1.0)
        basis_view[:] = art
        vstat[art] = BASIC
        lo_ext[art] = np.where(sign > 0, 0.0, -np.inf)
        hi_ext[art] = np.where(sign > 0, np.inf, 0.0)
        np.asarray(s.binv).reshape(m, m)[:, :] = np.eye(m)  # F==C for identity
        s.drift = 0
        np.asarray(s.xb)[:] = r
        c1[art] = -sign
    else:
        for i in rows_bad:
            out = int(basis_view[i])
            if out < n:
                xbi = float(np.asarray(s.xb)[i])
                if not np.isfinite(lo_ext[out]) and not np.isfinite(hi_ext[out]):
                    vstat[out] = FREE
                else:
                    vstat[out] = (AT_LOWER if abs(xbi - lo_ext[out])
                                  <= abs(xbi - hi_ext[out]) else AT_UPPER)
            basis_view[i] = art[i]
            vstat[art[i]] = BASIC
        if not _refresh(s):
            return NUMERICAL, _solution(s), np.nan, 0, basis_view.copy(), vstat.copy()
        xb = np.asarray(s.xb)
        for i in rows_bad:
            ai = art[i]
            if xb[i] >= 0.0:
                lo_ext[ai], hi_ext[ai] = 0.0, np.inf
                c1[ai] = -1.0
            else:
                lo_ext[ai], hi_ext[ai] = -np.inf, 0.0
                c1[ai] = 1.0

    cdef long it1 = 0, it2 = 0
    cdef double[::1] c1v = c1
    status = _primal_loop(s, c1v, max_iter, True, &it1)
    if status in (NUMERICAL, ITER_LIMIT):
        return status, _solution(s), np.nan, int(it1), basis_view.copy(), vstat.copy()
    xb = np.asarray(s.xb)
    art_mask = basis_view >= n
    if float(np.abs(xb[art_mask]).sum()) > 1e-7 * (1.0 + float(np.abs(np.asarray(s.b)).max(initial=0.0))):
        return INFEASIBLE, _solution(s), np.nan, int(it1), basis_view.copy(), vstat.copy()

    # Pin artificials at zero; pivot basic ones out where a real column allows.
    lo_ext[art] = 0.0
    hi_ext[art] = 0.0
    for j in art:
        if vstat[j] != BASIC:
            vstat[j] = AT_LOWER
    cdef Py_ssize_t row_c, k_c
    cdef double piv_c
    for row in np.flatnonzero(basis_view >= n):
        row_c = row
        _row_of(s, row_c)
        _arow_of(s)
        alpha = np.asarray(s.arow)[:n].copy()
        alpha[vstat[:n] == BASIC] = 0.0
        k = int(np.argmax(np.abs(alpha)))
        if abs(alpha[k]) <= 1e-7:
            continue  # redundant row; the artificial stays basic pinned at zero
        k_c = k
        out = int(basis_view[row])
        _col_of(s, k_c)
        piv_c = s.col[row_c]
        basis_view[row] = k
        vstat[k] = BASIC
        vstat[out] = AT_LOWER
        _pivot_binv(s, row_c, piv_c)
    if not _refresh(s):
        return NUMERICAL, _solution(s), np.nan, int(it1), basis_view.copy(), vstat.copy()

    c2 = np.concatenate([c, np.zeros(m)])
    cdef double[::1] c2v = c2
    status = _primal_loop(s, c2v, max_iter, False, &it2)
    x = _solution(s)
    obj = float(c @ x)
    if status == OPTIMAL:
        _warm_cache_put(A, s)
    return status, x, obj, int(it1 + it2), basis_view.copy(), vstat.copy()


def warm_resolve(A, b, c, lo, hi, basis, vstat, max_iter=0):
    """Dual simplex restart after bound changes; NEED_COLD when not trustworthy."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    lo_in = np.asarray(lo, dtype=float)
    hi_in = np.asarray(hi, dtype=float)
    if not max_iter:
        max_iter = 50 * (m + n) + 200

    cdef _State s = _make_state(A, b, lo_in, hi_in)
    basis_view = np.asarray(s.basis)
    vstat_view = np.asarray(s.vstat)
    basis_view[:] = np.asarray(basis, dtype=np.int64)
    vstat_view[:] = np.asarray(vstat, dtype=np.int8)

    # The inverse depends only on (matrix, basis), not on bounds, so a restart
    # whose basis matches a recently solved state can copy that inverse
    # (O(m^2)) instead of refactoring (O(m^3)). Carried drift keeps the
    # refactor interval honest across the handoff.
    cdef _State cached = _warm_cache_get(A, basis_view)
    if cached is not None and cached.drift < _REFRESH_EVERY:
        np.asarray(s.binv)[:] = np.asarray(cached.binv)
        s.drift = cached.drift
        _recompute_xb(s)
        warm_cache_stats["hit"] += 1
    else:
        warm_cache_stats["miss"] += 1
        if not _refresh(s):
            return NEED_COLD, None, np.nan, 0, basis_view.copy(), vstat_view.copy()

    cext = np.concatenate([c, np.zeros(m)])
    cdef double[::1] cv = cext
    _compute_d(s, cv)

    cdef long it = 0, it2 = 0
    cdef Py_ssize_t r, k, j, out
    cdef double worst, viol, vlo, vhi, theta_min, theta, piv, delta_e
    cdef double piv_mag, target, enter_val, thresh
    cdef bint need_increase, cand
    while True:
        if it >= max_iter:
            return NEED_COLD, None, np.nan, int(it), basis_view.copy(), vstat_view.copy()
        it += 1
        r = -1
        worst = 0.0
        for k in range(s.m):
            vlo = s.lo[s.basis[k]] - s.xb[k]
            vhi = s.xb[k] - s.hi[s.basis[k]]
            viol = vlo if vlo > vhi else vhi
            if viol > worst:
                worst = viol
                r = k
        if r < 0 or worst <= 1e-8:
            break
        need_increase = (s.lo[s.basis[r]] - s.xb[r]) > (s.xb[r] - s.hi[s.basis[r]])

        _row_of(s, r)
        _arow_of(s)
        # Entering column: min |d|/|alpha|, ties -> largest |alpha|, lowest index.
        j = -1
        theta_min = INFINITY
        for k in range(s.ntot):
            if s.vstat[k] == _BASIC:
                continue
            if (s.hi[k] - s.lo[k]) > _ZERO_SNAP:
                if need_increase:
                    cand = ((s.vstat[k] == _AT_LOWER and s.arow[k] < -_PIVOT_TOL)
                            or (s.vstat[k] == _AT_UPPER and s.arow[k] > _PIVOT_TOL)
                            or (s.vstat[k] == _FREE and fabs(s.arow[k]) > _PIVOT_TOL))
                else:
                    cand = ((s.vstat[k] == _AT_LOWER and s.arow[k] > _PIVOT_TOL)
                            or (s.vstat[k] == _AT_UPPER and s.arow[k] < -_PIVOT_TOL)
                            or (s.vstat[k] == _FREE and fabs(s.arow[k]) > _PIVOT_TOL))
            else:
                cand = s.vstat[k] == _FREE and fabs(s.arow[k]) > _PIVOT_TOL
            if not cand:
                continue
            theta = fabs(s.d[k]) / fabs(s.arow[k])
            if theta < theta_min:
                theta_min = theta
        if not isfinite(theta_min):
            if s.drift > 0:
                # No entering candidate on a drifted inverse is not an
                # infeasibility certificate; refactor and rescan.
                if not _refresh(s):
                    return (NEED_COLD, None, np.nan, int(it),
                            basis_view.copy(), vstat_view.copy())
                _compute_d(s, cv)
                continue
            _warm_cache_put(A, s)
            return (INFEASIBLE, _solution(s), np.nan, int(it),
                    basis_view.copy(), vstat_view.copy())
        thresh = theta_min * (1.0 + 1e-9) + 1e-12
        piv_mag = 0.0
        for k in range(s.ntot):
            if s.vstat[k] == _BASIC:
                continue
            if (s.hi[k] - s.lo[k]) > _ZERO_SNAP:
                if need_increase:
                    cand = ((s.vstat[k] == _AT_LOWER and s.arow[k] < -_PIVOT_TOL)
                            or (s.vstat[k] == _AT_UPPER and s.arow[k] > _PIVOT_TOL)
                            or (s.vstat[k] == _FREE and fabs(s.arow[k]) > _PIVOT_TOL))
                else:
                    cand = ((s.vstat[k] == _AT_LOWER and s.arow[k] > _PIVOT_TOL)
                            or (s.vstat[k] == _AT_UPPER and s.arow[k] < -_PIVOT_TOL)
                            or (s.vstat[k] == _FREE and fabs(s.arow[k]) > _PIVOT_TOL))
            else:
                cand = s.vstat[k] == _FREE and fabs(s.arow[k]) > _PIVOT_TOL
            if not cand:
                continue
            theta = fabs(s.d[k]) / fabs(s.arow[k])
            if theta > thresh:
                continue
            if fabs(s.arow[k]) > piv_mag * (1.0 + 1e-9):
                piv_mag = fabs(s.arow[k])
                j = k
            # equal-magnitude ties keep the first (lowest) index
        piv = s.arow[j]
        if fabs(piv) < _PIVOT_TOL:
            return NEED_COLD, None, np.nan, int(it), basis_view.copy(), vstat_view.copy()
        target = s.lo[s.basis[r]] if need_increase else s.hi[s.basis[r]]
        delta_e = (s.xb[r] - target) / piv
        out = s.basis[r]
        enter_val = _nb_value(s, j) + delta_e
        _col_of(s, j)
        for k in range(s.m):
            s.xb[k] -= delta_e * s.col[k]
        s.vstat[out] = _AT_LOWER if need_increase else _AT_UPPER
        if out >= s.n:
            s.vstat[out] = _AT_LOWER
        _update_d(s, j, piv)
        s.basis[r] = j
        s.vstat[j] = _BASIC
        _pivot_binv(s, r, piv)
        s.xb[r] = enter_val
        if s.drift >= _REFRESH_EVERY:
            if not _refresh(s):
                return (NEED_COLD, None, np.nan, int(it),
                        basis_view.copy(), vstat_view.copy())
            _compute_d(s, cv)

    status = _primal_loop(s, cv, max_iter, False, &it2)
    it += it2
    if status in (NUMERICAL, ITER_LIMIT):
        return NEED_COLD, None, np.nan, int(it), basis_view.copy(), vstat_view.copy()
    x = _solution(s)
    if np.any(x < lo_in - 1e-6) or np.any(x > hi_in + 1e-6):
        return NEED_COLD, None, np.nan, int(it), basis_view.copy(), vstat_view.copy()
    if status == OPTIMAL:
        # Equality residual check: the incremental inverse must still satisfy
        # A x = b to within the scaled feasibility budget.
        resid = float(np.max(np.abs(np.asarray(s.b) - A @ x), initial=0.0))
        if resid > 1e-7 * (1.0 + float(np.max(np.abs(np.asarray(s.b)), initial=0.0))):
            return NEED_COLD, None, np.nan, int(it), basis_view.copy(), vstat_view.copy()
    _warm_cache_put(A, s)
    return status, x, float(c @ x), int(it), basis_view.copy(), vstat_view.copy()
