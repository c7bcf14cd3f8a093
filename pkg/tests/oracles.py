"""Brute-force reference solvers and generators used only by the tests.

Nothing here shares code with the package under test: LPs are solved by
enumerating candidate vertices (active-set combinations), MIPs by enumerating
every integer assignment, so agreement is meaningful evidence.
"""

import itertools

import numpy as np


def lp_vertex_oracle(c, A_ub, b_ub, A_eq, b_eq, lo, hi, tol=1e-9):
    """Maximize c@x over {A_ub x <= b_ub, A_eq x = b_eq, lo <= x <= hi}.

    Requires finite lo/hi (bounded region). Returns (status, obj, x) with
    status "optimal" or "infeasible".
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    assert np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)), "oracle needs a bounded box"

    # Candidate active rows: every <= row and every bound, as (normal, rhs).
    rows = [(A_ub[i], b_ub[i]) for i in range(A_ub.shape[0])]
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows.append((e, lo[i]))
        rows.append((e, hi[i]))

    m_eq = A_eq.shape[0]
    need = n - m_eq

    def feasible(x):
        if np.any(x < lo - 1e-7) or np.any(x > hi + 1e-7):
            return False
        if A_ub.shape[0] and np.any(A_ub @ x > b_ub + 1e-7):
            return False
        if m_eq and np.any(np.abs(A_eq @ x - b_eq) > 1e-7):
            return False
        return True

    best_obj = None
    best_x = None
    if need < 0:
        return "infeasible", None, None
    for combo in itertools.combinations(range(len(rows)), need):
        M = np.zeros((n, n))
        rhs = np.zeros(n)
        if m_eq:
            M[:m_eq] = A_eq
            rhs[:m_eq] = b_eq
        for k, ridx in enumerate(combo):
            M[m_eq + k], rhs[m_eq + k] = rows[ridx]
        try:
            x = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)) or np.max(np.abs(M @ x - rhs)) > tol * (1 + np.abs(rhs).max()):
            continue
        if feasible(x):
            obj = float(c @ x)
            if best_obj is None or obj > best_obj:
                best_obj = obj
                best_x = x
    if best_obj is None:
        return "infeasible", None, None
    return "optimal", best_obj, best_x


def milp_enum_oracle(c, A_ub, b_ub, A_eq, b_eq, lo, hi, int_idx):
    """Maximize by enumerating every integer assignment, LP oracle on the rest."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    int_idx = list(int_idx)
    ranges = [range(int(np.ceil(lo[j] - 1e-9)), int(np.floor(hi[j] + 1e-9)) + 1) for j in int_idx]
    best_obj = None
    best_x = None
    for vals in itertools.product(*ranges):
        flo = lo.copy()
        fhi = hi.copy()
        for j, v in zip(int_idx, vals):
            flo[j] = fhi[j] = float(v)
        status, obj, x = lp_vertex_oracle(c, A_ub, b_ub, A_eq, b_eq, flo, fhi)
        if status == "optimal" and (best_obj is None or obj > best_obj + 1e-12):
            best_obj = obj
            best_x = x
    if best_obj is None:
        return "infeasible", None, None
    return "optimal", best_obj, best_x


def random_lp_instance(rng, force_feasible=True):
    """Small random box-bounded LP as a dict of LinearProgram kwargs."""
    n = int(rng.integers(2, 6))
    m_ub = int(rng.integers(1, 5))
    m_eq = int(rng.integers(0, min(2, n - 1) + 1))
    lo = rng.uniform(-3.0, 0.0, n)
    hi = lo + rng.uniform(0.5, 4.0, n)
    A_ub = rng.normal(0.0, 1.0, (m_ub, n))
    A_eq = rng.normal(0.0, 1.0, (m_eq, n)) if m_eq else None
    x0 = rng.uniform(lo, hi)
    if force_feasible:
        b_ub = A_ub @ x0 + rng.uniform(0.05, 1.5, m_ub)
        b_eq = A_eq @ x0 if m_eq else None
    else:
        b_ub = rng.normal(0.0, 1.0, m_ub)
        b_eq = rng.normal(0.0, 1.0, m_eq) if m_eq else None
    c = rng.normal(0.0, 1.0, n)
    return dict(c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, lo=lo, hi=hi)


def random_mip_instance(rng):
    """Small random MIP with a guaranteed integer-feasible point."""
    n = int(rng.integers(3, 6))
    k = int(rng.integers(1, min(n, 4) + 1))
    int_idx = sorted(rng.choice(n, size=k, replace=False).tolist())
    lo = rng.uniform(-2.0, 0.0, n)
    hi = lo + rng.uniform(1.0, 4.0, n)
    for j in int_idx:
        lo[j] = float(rng.integers(-1, 1))  # -1 or 0
        hi[j] = lo[j] + float(rng.integers(1, 3))  # span of 1 or 2
    m_ub = int(rng.integers(1, 4))
    A_ub = rng.normal(0.0, 1.0, (m_ub, n))
    x0 = rng.uniform(lo, hi)
    for j in int_idx:
        x0[j] = float(rng.integers(int(lo[j]), int(hi[j]) + 1))
    b_ub = A_ub @ x0 + rng.uniform(0.05, 1.0, m_ub)
    c = rng.normal(0.0, 1.0, n)
    return dict(c=c, A_ub=A_ub, b_ub=b_ub, A_eq=None, b_eq=None, lo=lo, hi=hi), int_idx


def zonogon_vertices(segment_vectors):
    """Exact 2-D Minkowski sum of segments [0, v_i]: the zonogon polygon.

    Returns the CCW vertex array (2n, 2). Built segment by segment from the
    angle-sorted construction, independent of any LP machinery.
    """
    vs = np.asarray(segment_vectors, dtype=float).reshape(-1, 2)
    base = np.zeros(2)
    flipped = []
    for v in vs:
        if v[1] < 0 or (v[1] == 0 and v[0] < 0):
            base = base + v
            flipped.append(-v)
        else:
            flipped.append(v.copy())
    flipped = np.array(flipped)
    order = np.argsort(np.arctan2(flipped[:, 1], flipped[:, 0]), kind="stable")
    chain = flipped[order]
    verts = [base.copy()]
    p = base.copy()
    for v in chain:
        p = p + v
        verts.append(p.copy())
    for v in chain:
        p = p - v
        verts.append(p.copy())
    return np.array(verts[:-1])  # last point closes back to base


def convex_polygon_signed_distance(verts, pt):
    """Signed distance to a convex CCW polygon boundary (< 0 inside).

    Exact for interior points; for exterior points the sign is exact and the
    magnitude is a lower bound (enough to classify outside a tolerance band).
    """
    verts = np.asarray(verts, dtype=float)
    pt = np.asarray(pt, dtype=float)
    n = len(verts)
    best = -np.inf
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        e = b - a
        L = np.hypot(e[0], e[1])
        if L < 1e-15:
            continue
        cross = e[0] * (pt[1] - a[1]) - e[1] * (pt[0] - a[0])
        best = max(best, -cross / L)
    if best == -np.inf:  # fully degenerate polygon: a point
        return float(np.linalg.norm(pt - verts[0]))
    return float(best)


def log_ncdf_oracle(x, dps=60):
    """High-precision log of the standard normal CDF via mpmath."""
    import mpmath as mp

    with mp.workdps(dps):
        return float(mp.log(mp.ncdf(mp.mpf(x))))


def grid_tension_oracle(signs, u, gamma, mu, sigma, steps=240):
    """Brute-force maximizer of sum log Phi((mu-t)/sigma) on a 2-D manifold.

    Three tensions coupled by one scalar equality sum_i signs_i t_i = gamma
    with 0 <= t <= u: sweep a dense grid over (t0, t1), solve for t2, keep the
    best feasible point. Returns (objective, t) or (None, None) if no grid
    point is feasible.
    """
    signs = np.asarray(signs, dtype=float)
    u = np.asarray(u, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    t0 = np.linspace(0.0, u[0], steps)
    t1 = np.linspace(0.0, u[1], steps)
    T0, T1 = np.meshgrid(t0, t1, indexing="ij")
    T2 = (gamma - signs[0] * T0 - signs[1] * T1) / signs[2]
    ok = (T2 >= 0.0) & (T2 <= u[2])
    if not np.any(ok):
        return None, None
    from limbplan.tension import log_gaussian_cdf

    obj = (
        log_gaussian_cdf((mu[0] - T0) / sigma[0])
        + log_gaussian_cdf((mu[1] - T1) / sigma[1])
        + log_gaussian_cdf((mu[2] - T2) / sigma[2])
    )
    obj = np.where(ok, obj, -np.inf)
    idx = np.unravel_index(np.argmax(obj), obj.shape)
    t = np.array([T0[idx], T1[idx], T2[idx]])
    return float(obj[idx]), t


def random_stance_instance(rng, n_booms=3, n_sites=5, morphology="boom",
                           force_scale=3.0, torque_scale=0.3, n_poses=1,
                           achievable_bias=0.5):
    """Small random stance instance built directly from geometry primitives.

    Truncates the default robot to ``n_booms`` limbs and scatters sites
    loosely around the remaining cone axes. With probability
    ``achievable_bias`` the desired wrench is synthesized from random interior
    tensions on a random cone-feasible assignment (guaranteeing a positive
    margin exists); otherwise it is a gaussian draw that few booms can
    usually not realize — so both branches get exercised.
    Returns (robot, sites, task).
    """
    import dataclasses

    from limbplan.geometry import (GraspSite, Pose, boom_generator, default_robot,
                                   pair_feasible, quat_from_axis_angle)
    from limbplan.scenario import TaskPoint, TaskSpec
    from limbplan.wrench import TaskPolytope

    base = default_robot(morphology=morphology)
    robot = dataclasses.replace(
        base,
        attachment_points=base.attachment_points[:n_booms],
        cone_axes=base.cone_axes[:n_booms],
    )
    sites = []
    for j in range(n_sites):
        d = robot.cone_axes[j % n_booms] + rng.normal(0.0, 0.35, 3)
        d /= np.linalg.norm(d)
        sites.append(GraspSite(id=j, position=rng.uniform(1.5, 3.5) * d,
                               quality=float(rng.uniform(0.5, 1.0)),
                               pull_mean=30.0, pull_std=4.5))
    axis = rng.normal(0.0, 1.0, 3)
    axis /= np.linalg.norm(axis)
    poses = [Pose(position=rng.normal(0.0, 0.05, 3),
                  quaternion=quat_from_axis_angle(axis, rng.uniform(0.0, 0.25)))]
    for _ in range(1, n_poses):
        axis = rng.normal(0.0, 1.0, 3)
        axis /= np.linalg.norm(axis)
        poses.append(poses[-1].rotated_by(axis, rng.uniform(0.02, 0.12))
                     .translated_by(rng.normal(0.0, 0.03, 3)))

    w = np.concatenate([rng.normal(0.0, force_scale, 3),
                        rng.normal(0.0, torque_scale, 3)])
    if rng.uniform() < achievable_bias:
        # Random injective assignment among pairs feasible at every pose,
        # then a wrench strictly inside its capability at the first pose.
        ok_pairs = [(i, j) for i in range(n_booms) for j in range(n_sites)
                    if all(pair_feasible(p, i, sites[j].position, robot)[0]
                           for p in poses)]
        rng.shuffle(ok_pairs)
        used_i, used_j, chosen = set(), set(), []
        for i, j in ok_pairs:
            if i not in used_i and j not in used_j:
                chosen.append((i, j))
                used_i.add(i)
                used_j.add(j)
        if chosen:
            w = np.zeros(6)
            for i, j in chosen:
                g, _ = boom_generator(poses[0], robot.attachment_points[i],
                                      sites[j].position)
                w += rng.uniform(0.1, 0.6) * robot.t_max * sites[j].quality * g
            w[3:] += rng.uniform(-0.5, 0.5, 3) * robot.m_max * len(chosen)

    poly = TaskPolytope.axis_aligned(rng.uniform(0.5, 2.5, 3),
                                     rng.uniform(0.05, 0.4, 3))
    task = TaskSpec(points=tuple(TaskPoint(pose=p, wrench=w) for p in poses),
                    polytope=poly,
                    kind="single_pose" if n_poses == 1 else "multi_pose")
    return robot, sites, task


def stance_enum_oracle(robot, sites, task):
    """Best achievable-margin stance by exhaustive enumeration.

    Tries every injective (partial and full) boom-to-site assignment whose
    pairs pass the cone + length test at every task pose, scores each by the
    min-over-poses inscribed margin, and returns (margin, {boom: site_id}).
    Margin is -inf when no assignment achieves every desired wrench.
    """
    from itertools import combinations, permutations

    from limbplan.geometry import pair_feasible
    from limbplan.wrench import generator_set, inscribed_margin

    poses = [pt.pose for pt in task.points]
    wrenches = [pt.wrench for pt in task.points]
    m = robot.n_booms
    n = len(sites)
    feas = {
        (i, j): all(pair_feasible(pose, i, sites[j].position, robot)[0]
                    for pose in poses)
        for i in range(m) for j in range(n)
    }
    best = -np.inf
    best_assign = {}
    for k in range(0, min(m, n) + 1):
        for booms in combinations(range(m), k):
            for js in permutations(range(n), k):
                if not all(feas[(i, j)] for i, j in zip(booms, js)):
                    continue
                margin = np.inf
                for pose, w in zip(poses, wrenches):
                    gen = generator_set(
                        pose, robot,
                        [(i, sites[j]) for i, j in zip(booms, js)])
                    margin = min(margin, inscribed_margin(gen, w, task.polytope))
                    if margin == -np.inf:
                        break
                if margin > best + 1e-12:
                    best = margin
                    best_assign = {i: sites[j].id for i, j in zip(booms, js)}
    return best, best_assign


def naive_enum_oracle(robot, sites, task):
    """Best direction-cosine-sum stance among assignments that can hold every
    nominal wrench; cosines evaluated at the first task pose.

    Returns (cos_sum, {boom: site_id}), or (-inf, {}) when nothing feasible.
    """
    from itertools import combinations, permutations

    from limbplan.geometry import pair_feasible
    from limbplan.wrench import achievable, generator_set

    poses = [pt.pose for pt in task.points]
    wrenches = [pt.wrench for pt in task.points]
    m = robot.n_booms
    n = len(sites)
    feas = {}
    cos0 = {}
    for i in range(m):
        for j in range(n):
            oks = [pair_feasible(pose, i, sites[j].position, robot)
                   for pose in poses]
            feas[(i, j)] = all(ok for ok, _c, _l in oks)
            cos0[(i, j)] = oks[0][1]
    best = -np.inf
    best_assign = {}
    for k in range(0, min(m, n) + 1):
        for booms in combinations(range(m), k):
            for js in permutations(range(n), k):
                if not all(feas[(i, j)] for i, j in zip(booms, js)):
                    continue
                ok = True
                for pose, w in zip(poses, wrenches):
                    gen = generator_set(
                        pose, robot,
                        [(i, sites[j]) for i, j in zip(booms, js)])
                    if not achievable(gen, w):
                        ok = False
                        break
                if not ok:
                    continue
                score = sum(cos0[(i, j)] for i, j in zip(booms, js))
                if score > best + 1e-12:
                    best = score
                    best_assign = {i: sites[j].id for i, j in zip(booms, js)}
    return best, best_assign
