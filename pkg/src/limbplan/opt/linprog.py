"""Dense LP interface over the simplex kernels.

Problems are stated as

    maximize c @ x   s.t.   A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi

and canonicalized to equality form with unit slacks before hitting the kernel.
Constraint rows are rescaled to unit max-abs coefficient so that rows in mixed
units (newtons next to newton-metres) carry comparable weight in pivoting and
feasibility tolerances.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import core

_STATUS_NAME = {
    core.OPTIMAL: "optimal",
    core.INFEASIBLE: "infeasible",
    core.UNBOUNDED: "unbounded",
}


def _as_matrix(M, name, n):
    if M is None:
        return np.zeros((0, n))
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError(f"{name} must be 2-D with {n} columns, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def _as_vector(v, name, m, allow_none=False):
    if v is None:
        if allow_none and m == 0:
            return np.zeros(0)
        raise ValueError(f"{name} is required")
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (m,):
        raise ValueError(f"{name} must have length {m}, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class LinearProgram:
    """maximize c @ x  s.t.  A_ub x <= b_ub, A_eq x = b_eq, lo <= x <= hi.

    ``lo`` defaults to 0 and ``hi`` to +inf; entries may be -inf/+inf.
    """

    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise ValueError("c must be a non-empty finite vector")
        n = c.size
        A_ub = _as_matrix(self.A_ub, "A_ub", n)
        b_ub = _as_vector(self.b_ub, "b_ub", A_ub.shape[0], allow_none=True)
        A_eq = _as_matrix(self.A_eq, "A_eq", n)
        b_eq = _as_vector(self.b_eq, "b_eq", A_eq.shape[0], allow_none=True)
        lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float).ravel()
        hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float).ravel()
        if lo.shape != (n,) or hi.shape != (n,):
            raise ValueError("lo/hi must match the length of c")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("bounds must not be NaN")
        if np.any(lo > hi):
            raise ValueError("every lower bound must be <= the upper bound")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A_ub", A_ub)
        object.__setattr__(self, "b_ub", b_ub)
        object.__setattr__(self, "A_eq", A_eq)
        object.__setattr__(self, "b_eq", b_eq)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class SolveReport:
    """Outcome of an LP or MILP solve.

    status is one of: optimal | infeasible | unbounded | gap_limit | node_limit.
    ``x`` is None unless an (incumbent) solution exists. For LPs, nodes == 0 and
    best_bound == objective.
    """

    status: str
    objective: float
    x: Optional[np.ndarray]
    nodes: int = 0
    best_bound: float = float("nan")
    gap: float = float("nan")
    wall_time_s: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        allowed = {"optimal", "infeasible", "unbounded", "gap_limit", "node_limit"}
        if self.status not in allowed:
            raise ValueError(f"unknown status {self.status!r}")


def canonicalize(lp: LinearProgram):
    """Equality form for the kernel: returns (A, b, c, lo, hi, n_structural).

    Equality rows come first, then <= rows each with a unit slack in [0, inf).
    All rows (and b) are scaled by 1/max|row| over the structural columns.
    """
    n = lp.n
    m_eq = lp.A_eq.shape[0]
    m_ub = lp.A_ub.shape[0]
    m = m_eq + m_ub
    A = np.zeros((m, n + m_ub))
    A[:m_eq, :n] = lp.A_eq
    A[m_eq:, :n] = lp.A_ub
    if m_ub:
        A[m_eq:, n:] = np.eye(m_ub)
    b = np.concatenate([lp.b_eq, lp.b_ub])
    scale = np.abs(A[:, :n]).max(axis=1, initial=0.0)
    scale[scale < 1e-300] = 1.0
    A /= scale[:, None]
    b = b / scale
    c = np.concatenate([lp.c, np.zeros(m_ub)])
    lo = np.concatenate([lp.lo, np.zeros(m_ub)])
    hi = np.concatenate([lp.hi, np.full(m_ub, np.inf)])
    return A, b, c, lo, hi, n


def solve_canonical(A, b, c, lo, hi, max_iter=0):
    """Cold-solve an equality-form LP with one escalating retry.

    Returns (status_code, x, obj, iterations, basis, vstat) straight from the
    kernel; raises RuntimeError if the kernel cannot settle the problem.
    """
    status, x, obj, iters, basis, vstat = core.kernel.cold_solve(A, b, c, lo, hi, max_iter)
    if status in (core.ITER_LIMIT, core.NUMERICAL):
        m, ntot = A.shape
        big = 400 * (m + ntot) + 2000
        status, x, obj, it2, basis, vstat = core.kernel.cold_solve(A, b, c, lo, hi, big)
        iters += it2
    if status in (core.ITER_LIMIT, core.NUMERICAL):
        raise RuntimeError(f"simplex did not converge (status {status})")
    return status, x, obj, iters, basis, vstat


def solve_lp(lp: LinearProgram, max_iter: int = 0) -> SolveReport:
    """Solve a LinearProgram to optimality (deterministic for fixed inputs)."""
    t0 = time.perf_counter()
    A, b, c, lo, hi, n = canonicalize(lp)
    status, x, obj, iters, _, _ = solve_canonical(A, b, c, lo, hi, max_iter)
    wall = time.perf_counter() - t0
    name = _STATUS_NAME[status]
    if name != "optimal":
        return SolveReport(name, float("nan"), None, 0, float("nan"), float("nan"), wall, iters)
    xs = np.asarray(x[:n], dtype=float)
    obj = float(lp.c @ xs)
    return SolveReport("optimal", obj, xs, 0, obj, 0.0, wall, iters)
