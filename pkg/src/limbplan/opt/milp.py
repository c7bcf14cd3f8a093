"""Branch-and-bound for mixed-integer linear programs.

Best-bound node selection with a depth-first fallback once the open set grows
past ``node_cap`` (bounds memory), most-fractional branching with lowest-index
tie-breaking, and dual-simplex warm restarts of child LPs from the parent
basis.  A rounding dive right after the root solve supplies an early
incumbent.  Everything is deterministic for fixed inputs (unless a time limit
triggers).
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import core
from .linprog import LinearProgram, SolveReport, canonicalize, solve_canonical

_INT_TOL = 1e-6


@dataclass(frozen=True)
class MixedIntegerProgram:
    """A LinearProgram plus the indices of integer-constrained variables."""

    lp: LinearProgram
    integer_indices: Sequence[int]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.integer_indices)
        n = self.lp.n
        if len(set(idx)) != len(idx):
            raise ValueError("integer_indices contains duplicates")
        for i in idx:
            if not 0 <= i < n:
                raise ValueError(f"integer index {i} out of range for {n} variables")
            if not (np.isfinite(self.lp.lo[i]) and np.isfinite(self.lp.hi[i])):
                raise ValueError("integer variables must have finite bounds")
        object.__setattr__(self, "integer_indices", idx)


class _Node:
    """Open node: LP bound, bound patch (var, lo, hi) relative to its parent,
    and the basis at its LP optimum for warm-starting children."""

    __slots__ = ("node_id", "bound", "parent", "var", "lo_val", "hi_val", "basis", "vstat")

    def __init__(self, node_id, bound, parent, var, lo_val, hi_val, basis, vstat):
        self.node_id = node_id
        self.bound = bound
        self.parent = parent
        self.var = var  # branching variable this node patched (-1 at root)
        self.lo_val = lo_val
        self.hi_val = hi_val
        self.basis = basis
        self.vstat = vstat

    def apply_bounds(self, lo, hi):
        """Write this node's accumulated bound patches onto lo/hi (in place)."""
        node = self
        seen = set()
        while node is not None and node.var >= 0:
            if node.var not in seen:
                seen.add(node.var)
                lo[node.var] = node.lo_val
                hi[node.var] = node.hi_val
            node = node.parent
        return lo, hi


def _fractional_var(x, int_idx):
    """Most-fractional integer variable, lowest index on ties; -1 if integral."""
    best = -1
    best_frac = _INT_TOL
    for j in int_idx:
        f = abs(x[j] - round(x[j]))
        if f > best_frac + 1e-15:
            best_frac = f
            best = j
    return best


def _solve_child(A, b, c, lo, hi, basis, vstat):
    """Warm dual-simplex restart, falling back to a cold solve."""
    st, x, obj, it, bs, vs = core.kernel.warm_resolve(A, b, c, lo, hi, basis, vstat)
    if st == core.NEED_COLD:
        st, x, obj, it2, bs, vs = solve_canonical(A, b, c, lo, hi)
        it += it2
    return st, x, obj, it, bs, vs


def solve_milp(
    mip: MixedIntegerProgram,
    gap_tol: float = 1e-6,
    node_limit: int = 1_000_000,
    time_limit: float = 120.0,
    node_cap: int = 30_000,
) -> SolveReport:
    """Maximize a MILP by LP-based branch and bound.

    Statuses: optimal (relative gap <= gap_tol), infeasible, unbounded (LP
    relaxation), node_limit, gap_limit (time limit hit first).
    """
    t0 = time.perf_counter()
    lp = mip.lp
    int_idx = np.asarray(sorted(mip.integer_indices), dtype=np.int64)
    A, b, c, lo0, hi0, n = canonicalize(lp)
    # The same matrix flows through every node solve with only bound patches;
    # freezing it lets the kernel reuse its sparse view and basis inverses
    # (the kernel only trusts identity-keyed caches for read-only arrays).
    A.setflags(write=False)

    total_iters = 0
    nodes_explored = 0

    def wall():
        return time.perf_counter() - t0

    st, x, obj, iters, basis, vstat = solve_canonical(A, b, c, lo0, hi0)
    total_iters += iters
    nodes_explored += 1
    if st == core.INFEASIBLE:
        return SolveReport("infeasible", float("nan"), None, nodes_explored,
                           float("nan"), float("nan"), wall(), total_iters)
    if st == core.UNBOUNDED:
        return SolveReport("unbounded", float("nan"), None, nodes_explored,
                           float("nan"), float("nan"), wall(), total_iters)

    inc_obj = -math.inf
    inc_x = None

    def consider_incumbent(xfull, value):
        nonlocal inc_obj, inc_x
        if value > inc_obj + 1e-12:
            inc_obj = value
            xs = np.asarray(xfull[:n], dtype=float).copy()
            xs[int_idx] = np.round(xs[int_idx])
            inc_x = xs

    def cutoff():
        return inc_obj + gap_tol * max(1.0, abs(inc_obj))

    next_id = 1
    root = _Node(0, obj, None, -1, 0.0, 0.0, basis, vstat)

    if _fractional_var(x, int_idx) < 0:
        consider_incumbent(x, obj)
        return SolveReport("optimal", inc_obj, inc_x, nodes_explored, obj, 0.0,
                           wall(), total_iters)

    # Rounding dive: repeatedly fix the most-fractional variable at its nearest
    # integer and warm-resolve; often lands a feasible incumbent immediately.
    lo = lo0.copy()
    hi = hi0.copy()
    dive_basis, dive_vstat, dive_x = basis, vstat, x
    for _ in range(int_idx.size):
        j = _fractional_var(dive_x, int_idx)
        if j < 0:
            break
        v = float(np.round(dive_x[j]))
        v = min(max(v, lo[j]), hi[j])
        lo[j] = v
        hi[j] = v
        st_d, x_d, obj_d, it_d, bs_d, vs_d = _solve_child(A, b, c, lo, hi, dive_basis, dive_vstat)
        total_iters += it_d
        nodes_explored += 1
        if st_d != core.OPTIMAL:
            break
        dive_basis, dive_vstat, dive_x = bs_d, vs_d, x_d
        if _fractional_var(x_d, int_idx) < 0:
            consider_incumbent(x_d, obj_d)
            break

    open_nodes = {root.node_id: root}
    heap = [(-root.bound, root.node_id)]
    stack = [root.node_id]

    def pop_node():
        # Depth-first while over the memory cap, else best-bound.
        if len(open_nodes) > node_cap:
            while stack:
                nid = stack.pop()
                node = open_nodes.pop(nid, None)
                if node is not None:
                    return node
        while heap:
            _, nid = heapq.heappop(heap)
            node = open_nodes.pop(nid, None)
            if node is not None:
                return node
        return None

    status = "optimal"
    while True:
        # Clean stale heap entries so the top reflects the best open bound.
        while heap and heap[0][1] not in open_nodes:
            heapq.heappop(heap)
        if not open_nodes:
            break
        best_open = -heap[0][0]
        if inc_x is not None:
            gap = (best_open - inc_obj) / max(1.0, abs(inc_obj))
            if gap <= gap_tol:
                break
        if nodes_explored >= node_limit:
            status = "node_limit"
            break
        if wall() > time_limit:
            status = "gap_limit"
            break

        node = pop_node()
        if node is None:
            break
        if node.bound <= cutoff():
            continue

        # Re-derive the node's LP solution from its stored basis (x itself is
        # not kept per node to bound memory).
        lo = lo0.copy()
        hi = hi0.copy()
        node.apply_bounds(lo, hi)
        st, x, obj, iters, basis, vstat = _solve_child(A, b, c, lo, hi, node.basis, node.vstat)
        total_iters += iters
        if st == core.INFEASIBLE:
            continue
        if st != core.OPTIMAL:
            raise RuntimeError(f"unexpected node LP status {st}")
        j = _fractional_var(x, int_idx)
        if j < 0:
            consider_incumbent(x, obj)
            continue
        froot = float(x[j])

        # Children: push the promising side last so depth-first pops it first.
        down_first = froot - math.floor(froot) >= 0.5
        for take_down in (down_first, not down_first):
            if take_down:
                cl, ch = lo[j], float(math.floor(froot))
            else:
                cl, ch = float(math.ceil(froot)), hi[j]
            if cl > ch:
                continue
            clo = lo.copy()
            chi = hi.copy()
            clo[j], chi[j] = cl, ch
            st_c, x_c, obj_c, it_c, bs_c, vs_c = _solve_child(A, b, c, clo, chi, basis, vstat)
            total_iters += it_c
            nodes_explored += 1
            if st_c == core.INFEASIBLE:
                continue
            if st_c != core.OPTIMAL:
                raise RuntimeError(f"unexpected child LP status {st_c}")
            if obj_c <= cutoff():
                continue
            jc = _fractional_var(x_c, int_idx)
            if jc < 0:
                consider_incumbent(x_c, obj_c)
                continue
            child = _Node(next_id, obj_c, node, j, cl, ch, bs_c, vs_c)
            next_id += 1
            open_nodes[child.node_id] = child
            heapq.heappush(heap, (-child.bound, child.node_id))
            stack.append(child.node_id)
        if nodes_explored >= node_limit:
            status = "node_limit"
            break
        if wall() > time_limit:
            status = "gap_limit"
            break

    best_open = -math.inf
    for node in open_nodes.values():
        best_open = max(best_open, node.bound)
    if inc_x is None:
        if status == "optimal":
            # Search exhausted without ever finding an integral point.
            return SolveReport("infeasible", float("nan"), None, nodes_explored,
                               float("nan"), float("nan"), wall(), total_iters)
        return SolveReport(status, float("nan"), None, nodes_explored,
                           best_open, float("inf"), wall(), total_iters)
    bound = inc_obj if best_open == -math.inf else max(best_open, inc_obj)
    gap = (bound - inc_obj) / max(1.0, abs(inc_obj))
    return SolveReport(status, inc_obj, inc_x, nodes_explored, bound, gap,
                       wall(), total_iters)
