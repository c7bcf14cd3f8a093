"""Seed-deterministic generation of tube environments, tasks, and pull forces.

Environments are cylinders (axis along world x) with grasp sites sampled
uniformly on the wall; each site carries a stochastic maximum-pull model
Normal(mu, sigma) with mu = quality * t_max and sigma = 0.15 * mu. Tasks are
pose/wrench sequences with an axis-aligned task polytope whose weights are the
wrench-sampling standard deviations. Environment, task, and pull-force
generation use independent seeds so changing one stream never shifts another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .geometry import (
    GraspSite,
    boom_generator,
    Pose,
    RobotModel,
    default_robot,
    gravity_wrench,
    pair_feasible,
    quat_from_axis_angle,
    quat_multiply,
)
from .wrench import GeneratorSet, TaskPolytope, achievable, generator_set

_WEIGHT_FLOOR = 1e-3
_PULL_STD_COEF = 0.15
_FEASIBILITY_RETRY_CAP = 100


@dataclass(frozen=True)
class Environment:
    """Cylindrical tube with candidate grasp sites on the wall."""

    radius: float
    length: float
    sites: Tuple[GraspSite, ...]
    seed: int

    def __post_init__(self):
        if self.radius <= 0 or self.length <= 0:
            raise ValueError("tube dimensions must be positive")
        if not self.sites:
            raise ValueError("environment needs at least one grasp site")
        for s in self.sites:
            if not (0.0 < s.quality <= 1.0):
                raise ValueError("site qualities must lie in (0, 1]")


@dataclass(frozen=True)
class TaskPoint:
    pose: Pose
    wrench: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.wrench, dtype=float).reshape(6)
        w.setflags(write=False)
        object.__setattr__(self, "wrench", w)


@dataclass(frozen=True)
class TaskSpec:
    """Sequence of pose/wrench pairs plus the task polytope to inscribe."""

    points: Tuple[TaskPoint, ...]
    polytope: TaskPolytope
    kind: str

    def __post_init__(self):
        if self.kind not in ("single_pose", "multi_pose"):
            raise ValueError("kind must be single_pose or multi_pose")
        if len(self.points) < 1:
            raise ValueError("a task needs at least one point")
        if self.kind == "multi_pose" and len(self.points) < 2:
            raise ValueError("multi_pose tasks need at least two points")


def generate_environment(seed: int, n_sites: int = 10, radius: float = 2.5,
                         length: float = 6.0,
                         quality_range: Tuple[float, float] = (0.5, 1.0),
                         t_max: float = 30.0,
                         z_min: Optional[float] = None) -> Environment:
    """Sample grasp sites uniformly on the tube wall.

    ``z_min`` restricts sites to the wall band at or above that height
    (e.g. ``0.0`` keeps only the upper half, a ceiling-dominated cave);
    rejection sampling preserves uniformity on the band.
    """
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    if radius <= 0 or length <= 0:
        raise ValueError("tube dimensions must be positive")
    if z_min is not None and z_min >= radius:
        raise ValueError("z_min must be below the tube radius")
    qlo, qhi = quality_range
    if not (0.0 < qlo <= qhi <= 1.0):
        raise ValueError("quality_range must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    sites = []
    for j in range(n_sites):
        while True:
            x = rng.uniform(-0.5 * length, 0.5 * length)
            phi = rng.uniform(0.0, 2.0 * math.pi)
            pos = np.array([x, radius * math.cos(phi), radius * math.sin(phi)])
            if z_min is None or pos[2] >= z_min:
                break
        q = float(rng.uniform(qlo, qhi))
        mu = q * t_max
        sites.append(GraspSite(id=j, position=pos, quality=q,
                               pull_mean=mu, pull_std=_PULL_STD_COEF * mu))
    return Environment(radius=radius, length=length, sites=tuple(sites),
                       seed=int(seed))


def _random_unit_vector(rng) -> np.ndarray:
    v = rng.normal(size=3)
    n = np.linalg.norm(v)
    while n < 1e-12:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
    return v / n


def _sample_pose(rng, env: Environment) -> Pose:
    half = max(0.5 * env.length - 1.0, 0.0)
    x = rng.uniform(-half, half)
    rr = rng.uniform(0.0, 0.3)
    ang = rng.uniform(0.0, 2.0 * math.pi)
    position = np.array([x, rr * math.cos(ang), rr * math.sin(ang)])
    axis = _random_unit_vector(rng)
    angle = rng.uniform(0.0, 0.3)
    return Pose(position=position, quaternion=quat_from_axis_angle(axis, angle))


_MANEUVER_SPAN = (0.3, 1.0)  # meters between the two anchor poses of a maneuver
_MANEUVER_TILT = 0.3  # max anchor re-orientation over a maneuver (radians)


def _offset_pose(rng, env: Environment, anchor: Pose) -> Pose:
    """Second anchor of a manipulation maneuver: a bounded offset from the
    first, clamped to the same near-axis region single poses come from. Kept
    local so one stance can plausibly cover the whole maneuver."""
    direction = _random_unit_vector(rng)
    span = rng.uniform(*_MANEUVER_SPAN)
    pos = anchor.position + span * direction
    half = max(0.5 * env.length - 1.0, 0.0)
    pos[0] = float(np.clip(pos[0], -half, half))
    r = math.hypot(pos[1], pos[2])
    if r > 0.3:
        pos[1:] *= 0.3 / r
    axis = _random_unit_vector(rng)
    angle = rng.uniform(0.0, _MANEUVER_TILT)
    return Pose(position=pos, quaternion=quat_from_axis_angle(axis, angle))


def _quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def _quat_slerp(qa: np.ndarray, qb: np.ndarray, t: float) -> np.ndarray:
    rel = quat_multiply(qb, _quat_conjugate(qa))
    if rel[0] < 0.0:  # shorter arc
        rel = -rel
    v = rel[1:]
    s = float(np.linalg.norm(v))
    angle = 2.0 * math.atan2(s, float(rel[0]))
    if s < 1e-12 or angle < 1e-12:
        return qa.copy()
    axis = v / s
    return quat_multiply(quat_from_axis_angle(axis, t * angle), qa)


def _interpolate_pose(pa: Pose, pb: Pose, t: float) -> Pose:
    pos = (1.0 - t) * pa.position + t * pb.position
    return Pose(position=pos, quaternion=_quat_slerp(pa.quaternion, pb.quaternion, t))


def _sample_wrench(rng, sigma_force, sigma_torque) -> np.ndarray:
    return np.concatenate([rng.normal(0.0, sigma_force), rng.normal(0.0, sigma_torque)])


def _greedy_witness_feasible(env: Environment, requirements,
                             robot: RobotModel) -> bool:
    """True when some injective full-quality stance achieves every required
    (pose, total wrench) in ``requirements`` simultaneously.

    Quick reject: if even the union of all pairs that are cone/length-feasible
    at every pose (a relaxation of every fixed stance) cannot achieve some
    required wrench, no stance can. Accept via a greedy injective assignment
    (best worst-pose direction cosine first); greedy failure regenerates the
    task, trading extra retries for soundness.
    """
    pairs = []
    for i in range(robot.n_booms):
        for s in env.sites:
            worst = math.inf
            for pose, _w in requirements:
                ok, cosine, _length = pair_feasible(pose, i, s.position, robot)
                if not ok:
                    worst = -math.inf
                    break
                worst = min(worst, cosine)
            if worst > -math.inf:
                pairs.append((worst, i, s))
    if not pairs:
        return False

    def gen_at(pose, selection):
        gens = []
        for _c, i, s in selection:
            g, _l = boom_generator(pose, robot.attachment_points[i], s.position)
            gens.append((g, robot.t_max))  # full quality: u = t_max
        return GeneratorSet(generators=tuple(gens), m_max=robot.m_max)

    def covers(selection):
        return all(achievable(gen_at(pose, selection), w)
                   for pose, w in requirements)

    if not covers(pairs):
        return False
    for order in (sorted(pairs, key=lambda p: -p[0]),
                  sorted(pairs, key=lambda p: p[0])):
        chosen = []
        used_booms = set()
        used_sites = set()
        for cosine, i, s in order:
            if i in used_booms or s.id in used_sites:
                continue
            chosen.append((cosine, i, s))
            used_booms.add(i)
            used_sites.add(s.id)
        if chosen and covers(chosen):
            return True
    return False


def sample_task(seed: int, env: Environment, kind: str = "single_pose",
                sigma_force=(2.0, 2.0, 6.0), sigma_torque=(0.5, 0.5, 0.5),
                robot: Optional[RobotModel] = None) -> TaskSpec:
    """Draw a task, rejection-sampled until one full-quality stance can
    achieve every task point's wrench (gravity compensation included)."""
    if kind not in ("single_pose", "multi_pose"):
        raise ValueError("kind must be single_pose or multi_pose")
    robot = robot if robot is not None else default_robot()
    rng = np.random.default_rng(seed)
    sf = np.asarray(sigma_force, dtype=float)
    st = np.asarray(sigma_torque, dtype=float)
    polytope = TaskPolytope.axis_aligned(np.maximum(sf, _WEIGHT_FLOOR),
                                         np.maximum(st, _WEIGHT_FLOOR))
    w_gravity = gravity_wrench(robot)

    if kind == "single_pose":
        for _ in range(_FEASIBILITY_RETRY_CAP):
            pose = _sample_pose(rng, env)
            w_task = _sample_wrench(rng, sf, st)
            if _greedy_witness_feasible(env, [(pose, w_task - w_gravity)],
                                        robot):
                return TaskSpec(points=(TaskPoint(pose, w_task),),
                                polytope=polytope, kind=kind)
        raise RuntimeError(
            f"no feasible single-pose task found in {_FEASIBILITY_RETRY_CAP} draws")

    for _ in range(_FEASIBILITY_RETRY_CAP):
        pose_a = _sample_pose(rng, env)
        pose_b = _offset_pose(rng, env, pose_a)
        points = []
        for t in (0.0, 0.25, 0.75, 1.0):  # pre/post-grasp, pre/post-place
            pose = _interpolate_pose(pose_a, pose_b, t)
            points.append(TaskPoint(pose, _sample_wrench(rng, sf, st)))
        if _greedy_witness_feasible(
                env, [(pt.pose, pt.wrench - w_gravity) for pt in points], robot):
            return TaskSpec(points=tuple(points), polytope=polytope, kind=kind)
    raise RuntimeError(
        f"no feasible multi-pose task found in {_FEASIBILITY_RETRY_CAP} draws")


def compose_gravity(task: TaskSpec, robot: RobotModel) -> TaskSpec:
    """Fold constant gravity compensation into every task wrench.

    Planners and the simulator consume the composed task: the stance must
    exert the sampled wrench while also holding the body against gravity.
    """
    w_gc = gravity_wrench(robot)
    return TaskSpec(points=tuple(TaskPoint(pt.pose, pt.wrench - w_gc)
                                 for pt in task.points),
                    polytope=task.polytope, kind=task.kind)


def sample_pull_forces(seed: int, env: Environment) -> np.ndarray:
    """One max-pull draw per site from Normal(mu_j, sigma_j), floored at 0."""
    rng = np.random.default_rng(seed)
    mu = np.array([s.pull_mean for s in env.sites])
    sigma = np.array([s.pull_std for s in env.sites])
    return np.maximum(0.0, rng.normal(mu, sigma))
