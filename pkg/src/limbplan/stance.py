"""Stance selection: which boom grasps which site, optimized for margin.

The optimal variant maximizes the task-polytope inscribed margin with one
monolithic mixed-integer program: binary assignment variables, per-basis and
per-pose tension certificates, aggregated shoulder-moment slacks, and an
epigraph variable for the min over weighted basis directions. The naive
variant maximizes boom/cone direction alignment subject only to holding the
nominal wrench at every pose. Outward-cone and length limits are enforced by
presolve pruning of assignment pairs (intersected across poses), so the
programs contain no cone rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .geometry import RobotModel, boom_generator, pair_feasible
from .opt import LinearProgram, MixedIntegerProgram, SolveReport, solve_milp
from .scenario import TaskSpec
from .wrench import generator_set, inscribed_margin, scale_torque_weights


@dataclass(frozen=True)
class StanceProblem:
    """Robot, sites, task, and the precomputed pair data the programs use.

    ``pairs`` lists the (boom, site_index) combinations that pass the cone and
    length tests at every task pose; all other assignment variables are fixed
    to zero by omission. ``gens[e, l]`` is the unit-tension wrench of pair e
    at pose l, ``cosines[e]`` its direction cosine at the first pose, and
    ``upper[e]`` its tension capacity t_max * quality.
    """

    robot: RobotModel
    sites: tuple
    task: TaskSpec
    pairs: Tuple[Tuple[int, int], ...]
    gens: np.ndarray
    cosines: np.ndarray
    upper: np.ndarray
    mask: np.ndarray
    cos_matrix: np.ndarray

    @property
    def n_poses(self) -> int:
        return len(self.task.points)

    @property
    def wrenches(self):
        return [pt.wrench for pt in self.task.points]

    @property
    def poses(self):
        return [pt.pose for pt in self.task.points]


def build_problem(robot: RobotModel, sites, task: TaskSpec) -> StanceProblem:
    """Precompute feasibility mask, direction cosines, and generators."""
    sites = tuple(sites)
    m = robot.n_booms
    n = len(sites)
    if n == 0:
        raise ValueError("no grasp sites")
    poses = [pt.pose for pt in task.points]
    L = len(poses)
    mask = np.ones((m, n), dtype=bool)
    cos_matrix = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            for li, pose in enumerate(poses):
                ok, cosine, _length = pair_feasible(pose, i, sites[j].position, robot)
                if li == 0:
                    cos_matrix[i, j] = cosine
                if not ok:
                    mask[i, j] = False
                    break
    pairs = tuple((i, j) for i in range(m) for j in range(n) if mask[i, j])
    gens = np.zeros((len(pairs), L, 6))
    upper = np.zeros(len(pairs))
    cosines = np.zeros(len(pairs))
    for e, (i, j) in enumerate(pairs):
        for li, pose in enumerate(poses):
            g, _length = boom_generator(pose, robot.attachment_points[i],
                                        sites[j].position)
            gens[e, li] = g
        upper[e] = robot.t_max * sites[j].quality
        cosines[e] = cos_matrix[i, j]
    for arr in (gens, upper, cosines, mask, cos_matrix):
        arr.setflags(write=False)
    return StanceProblem(robot=robot, sites=sites, task=task, pairs=pairs,
                         gens=gens, cosines=cosines, upper=upper, mask=mask,
                         cos_matrix=cos_matrix)


@dataclass
class StancePlan:
    """assignment maps boom index -> site id (partial allowed); margin is the
    epigraph objective for the optimal variant and the re-scored inscribed
    margin for the naive one; tensions[a, k, l] certify assigned pair a along
    basis direction k at pose l (naive plans have a single k slot)."""

    status: str
    variant: str
    assignment: Dict[int, int]
    margin: float
    tensions: Optional[np.ndarray]
    torque_slack: Optional[np.ndarray]
    assigned_pairs: Tuple[Tuple[int, int], ...]
    report: Optional[SolveReport] = None


def _assignment_rows(npair: int, pairs, m: int, n: int, nvar: int, a0: int):
    """Rows sum_j A_ij <= 1 per boom and sum_i A_ij <= 1 per site."""
    rows = []
    for i in range(m):
        cols = [e for e, (bi, _j) in enumerate(pairs) if bi == i]
        if len(cols) > 1:
            r = np.zeros(nvar)
            r[[a0 + c for c in cols]] = 1.0
            rows.append(r)
    for j in range(n):
        cols = [e for e, (_i, sj) in enumerate(pairs) if sj == j]
        if len(cols) > 1:
            r = np.zeros(nvar)
            r[[a0 + c for c in cols]] = 1.0
            rows.append(r)
    return rows


def build_optimal(problem: StanceProblem) -> MixedIntegerProgram:
    """Monolithic margin-maximization MIP over assignment + tension variables."""
    pairs = problem.pairs
    npair = len(pairs)
    if npair == 0:
        raise ValueError("no feasible boom/site pairs")
    poly = problem.task.polytope
    p = poly.p
    L = problem.n_poses
    m = problem.robot.n_booms
    n = len(problem.sites)
    m_max = problem.robot.m_max
    has_slack = m_max > 0.0

    # Variable layout: A (npair) | s (p) | z | T (npair*p*L) | slack (3*p*L).
    a0 = 0
    s0 = npair
    zi = npair + p
    t0 = zi + 1
    nT = npair * p * L
    sl0 = t0 + nT
    nvar = sl0 + (3 * p * L if has_slack else 0)

    def T(e, k, li):
        return t0 + (e * p + k) * L + li

    def SL(axis, k, li):
        return sl0 + (axis * p + k) * L + li

    c = np.zeros(nvar)
    c[zi] = 1.0
    lo = np.zeros(nvar)
    hi = np.full(nvar, np.inf)
    hi[a0:a0 + npair] = 1.0
    for e in range(npair):
        for k in range(p):
            for li in range(L):
                hi[T(e, k, li)] = problem.upper[e]
    if has_slack:
        lo[sl0:] = -m_max * m
        hi[sl0:] = m_max * m

    eq_rows = []
    eq_rhs = []
    wrenches = problem.wrenches
    for k in range(p):
        target = poly.basis[k]
        for li in range(L):
            block = np.zeros((6, nvar))
            for e in range(npair):
                block[:, T(e, k, li)] = problem.gens[e, li]
            block[:, s0 + k] = -target
            if has_slack:
                for axis in range(3):
                    block[3 + axis, SL(axis, k, li)] = 1.0
            eq_rows.append(block)
            eq_rhs.append(wrenches[li])
    A_eq = np.vstack(eq_rows)
    b_eq = np.concatenate(eq_rhs)

    ub_rows = []
    ub_rhs = []
    for k in range(p):  # z <= s_k / sigma_k
        r = np.zeros(nvar)
        r[zi] = 1.0
        r[s0 + k] = -1.0 / poly.weights[k]
        ub_rows.append(r)
        ub_rhs.append(0.0)
    for e in range(npair):  # T <= upper * A
        for k in range(p):
            for li in range(L):
                r = np.zeros(nvar)
                r[T(e, k, li)] = 1.0
                r[a0 + e] = -problem.upper[e]
                ub_rows.append(r)
                ub_rhs.append(0.0)
    if has_slack:  # |slack| <= m_max * (attached booms)
        for axis in range(3):
            for k in range(p):
                for li in range(L):
                    for sgn in (1.0, -1.0):
                        r = np.zeros(nvar)
                        r[SL(axis, k, li)] = sgn
                        r[a0:a0 + npair] = -m_max
                        ub_rows.append(r)
                        ub_rhs.append(0.0)
    ub_rows.extend(_assignment_rows(npair, pairs, m, n, nvar, a0))
    ub_rhs.extend([1.0] * (len(ub_rows) - len(ub_rhs)))

    lp = LinearProgram(c=c, A_ub=np.array(ub_rows), b_ub=np.array(ub_rhs),
                       A_eq=A_eq, b_eq=b_eq, lo=lo, hi=hi)
    return MixedIntegerProgram(lp=lp, integer_indices=tuple(range(npair)))


def build_naive(problem: StanceProblem) -> MixedIntegerProgram:
    """Alignment-maximization MIP: hold each nominal wrench, maximize cosines."""
    pairs = problem.pairs
    npair = len(pairs)
    if npair == 0:
        raise ValueError("no feasible boom/site pairs")
    L = problem.n_poses
    m = problem.robot.n_booms
    n = len(problem.sites)
    m_max = problem.robot.m_max
    has_slack = m_max > 0.0

    a0 = 0
    t0 = npair
    sl0 = t0 + npair * L
    nvar = sl0 + (3 * L if has_slack else 0)

    def T(e, li):
        return t0 + e * L + li

    def SL(axis, li):
        return sl0 + axis * L + li

    c = np.zeros(nvar)
    c[a0:a0 + npair] = problem.cosines
    lo = np.zeros(nvar)
    hi = np.full(nvar, np.inf)
    hi[a0:a0 + npair] = 1.0
    for e in range(npair):
        for li in range(L):
            hi[T(e, li)] = problem.upper[e]
    if has_slack:
        lo[sl0:] = -m_max * m
        hi[sl0:] = m_max * m

    eq_rows = []
    eq_rhs = []
    for li in range(L):
        block = np.zeros((6, nvar))
        for e in range(npair):
            block[:, T(e, li)] = problem.gens[e, li]
        if has_slack:
            for axis in range(3):
                block[3 + axis, SL(axis, li)] = 1.0
        eq_rows.append(block)
        eq_rhs.append(problem.wrenches[li])
    A_eq = np.vstack(eq_rows)
    b_eq = np.concatenate(eq_rhs)

    ub_rows = []
    ub_rhs = []
    for e in range(npair):
        for li in range(L):
            r = np.zeros(nvar)
            r[T(e, li)] = 1.0
            r[a0 + e] = -problem.upper[e]
            ub_rows.append(r)
            ub_rhs.append(0.0)
    if has_slack:
        for axis in range(3):
            for li in range(L):
                for sgn in (1.0, -1.0):
                    r = np.zeros(nvar)
                    r[SL(axis, li)] = sgn
                    r[a0:a0 + npair] = -m_max
                    ub_rows.append(r)
                    ub_rhs.append(0.0)
    ub_rows.extend(_assignment_rows(npair, pairs, m, n, nvar, a0))
    ub_rhs.extend([1.0] * (len(ub_rows) - len(ub_rhs)))

    lp = LinearProgram(c=c, A_ub=np.array(ub_rows), b_ub=np.array(ub_rhs),
                       A_eq=A_eq, b_eq=b_eq, lo=lo, hi=hi)
    return MixedIntegerProgram(lp=lp, integer_indices=tuple(range(npair)))


def rescore_margin(problem: StanceProblem, assignment: Dict[int, int]) -> float:
    """Min-over-poses inscribed margin of a fixed boom -> site-id assignment."""
    site_by_id = {s.id: s for s in problem.sites}
    attachments = [(i, site_by_id[sid]) for i, sid in sorted(assignment.items())]
    margin = np.inf
    for pt in problem.task.points:
        gen = generator_set(pt.pose, problem.robot, attachments)
        margin = min(margin, inscribed_margin(gen, pt.wrench, problem.task.polytope))
        if margin == -np.inf:
            break
    return float(margin)


def _refine_assignment(problem: StanceProblem, chosen, floor: float,
                       polish: bool) -> list:
    """Deterministic, objective-preserving post-pass on the solver's stance.

    Attaches every remaining boom to its best-aligned free feasible site:
    the margin is monotone in attachments (an idle limb may carry zero
    tension, and shoulder-moment authority only grows with the attached
    count), so solver ties between partial and full stances are broken
    toward full stances. With ``polish``, each already-attached boom is
    also moved to the best-aligned free site that keeps the min-over-poses
    margin at or above ``floor``: among margin-equal stances, the most
    cone-centered one has the largest room to maneuver. Booms are visited
    in index order; candidates by descending direction cosine, then
    ascending site id.
    """
    current = {problem.pairs[e][0]: e for e in chosen}
    used_sites = {problem.pairs[e][1] for e in chosen}
    for boom in range(problem.robot.n_booms):
        here = current.get(boom)
        candidates = [e for e, (b, j) in enumerate(problem.pairs)
                      if b == boom and (j not in used_sites or e == here)]
        if not candidates:
            continue
        candidates.sort(key=lambda e: (-problem.cosines[e],
                                       problem.sites[problem.pairs[e][1]].id))
        if here is None:
            # Attaching can only grow the achievable set: no margin check.
            best = candidates[0]
        elif polish:
            best = here
            for e in candidates:
                if e == here:
                    break
                trial = dict(current)
                trial[boom] = e
                margin = rescore_margin(problem, {
                    problem.pairs[idx][0]: problem.sites[problem.pairs[idx][1]].id
                    for idx in trial.values()})
                if margin >= floor - 1e-9:
                    best = e
                    break
        else:
            best = here
        if best != here:
            if here is not None:
                used_sites.discard(problem.pairs[here][1])
            current[boom] = best
            used_sites.add(problem.pairs[best][1])
    return sorted(current.values())


def plan(problem: StanceProblem, variant: str = "optimal", gap_tol: float = 1e-9,
         node_limit: int = 200_000, time_limit: float = 300.0) -> StancePlan:
    """Solve the stance program and extract the assignment and certificates."""
    if variant not in ("optimal", "naive"):
        raise ValueError("variant must be optimal or naive")
    if len(problem.pairs) == 0:
        return StancePlan(status="infeasible", variant=variant, assignment={},
                          margin=-np.inf, tensions=None, torque_slack=None,
                          assigned_pairs=())
    mip = build_optimal(problem) if variant == "optimal" else build_naive(problem)
    rep = solve_milp(mip, gap_tol=gap_tol, node_limit=node_limit,
                     time_limit=time_limit)
    if rep.status not in ("optimal", "gap_limit", "node_limit") or rep.x is None:
        return StancePlan(status=rep.status, variant=variant, assignment={},
                          margin=-np.inf, tensions=None, torque_slack=None,
                          assigned_pairs=(), report=rep)

    pairs = problem.pairs
    npair = len(pairs)
    p = problem.task.polytope.p if variant == "optimal" else 1
    L = problem.n_poses
    x = rep.x
    chosen = [e for e in range(npair) if x[e] > 0.5]
    chosen = _refine_assignment(problem, chosen, float(rep.objective),
                                polish=(variant == "optimal"))
    assignment = {pairs[e][0]: problem.sites[pairs[e][1]].id for e in chosen}
    assigned_pairs = tuple((pairs[e][0], problem.sites[pairs[e][1]].id)
                           for e in chosen)

    if variant == "optimal":
        t0 = npair + p + 1
        allT = x[t0:t0 + npair * p * L].reshape(npair, p, L)
        sl0 = t0 + npair * p * L
        slack = (x[sl0:sl0 + 3 * p * L].reshape(3, p, L)
                 if problem.robot.m_max > 0 else np.zeros((3, p, L)))
        margin = float(rep.objective)
    else:
        t0 = npair
        allT = x[t0:t0 + npair * L].reshape(npair, 1, L)
        sl0 = t0 + npair * L
        slack = (x[sl0:sl0 + 3 * L].reshape(3, 1, L)
                 if problem.robot.m_max > 0 else np.zeros((3, 1, L)))
        margin = rescore_margin(problem, assignment)
    tensions = allT[chosen] if chosen else np.zeros((0, p, L))
    return StancePlan(status=rep.status, variant=variant, assignment=assignment,
                      margin=margin, tensions=tensions, torque_slack=slack,
                      assigned_pairs=assigned_pairs, report=rep)


def apply_pose_uncertainty(task: TaskSpec, dtheta_norm: float) -> TaskSpec:
    """Task with torque weights grown for the given orientation uncertainty."""
    if dtheta_norm == 0.0:
        return task
    return TaskSpec(points=task.points,
                    polytope=scale_torque_weights(task.polytope, dtheta_norm),
                    kind=task.kind)
