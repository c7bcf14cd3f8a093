"""Voxelized manipulation-workspace estimation for a fixed stance.

Sweeps body positions over a 3-D grid at a fixed orientation and labels each
voxel with three nested flags: geometry (every attached boom keeps its length
and cone limits), static equilibrium (the stance can additionally cancel the
body's gravity load), and wrench closure for the task (the stance can
additionally exert the gravity-composed task wrench). Each flag requires the
previous one, so the workspace inclusion chain holds by construction. Volumes
are flagged-voxel counts times the voxel volume. The rank of the stacked
torque generator block is reported per voxel as a diagnostic of torque
authority; it never feeds the flags.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .geometry import (
    GraspSite,
    Pose,
    RobotModel,
    default_robot,
    gravity_wrench,
    quat_from_axis_angle,
    quat_multiply,
)
from .scenario import Environment, TaskSpec, compose_gravity
from .stance import StancePlan, build_problem, plan
from .wrench import achievable, generator_set


@dataclass(frozen=True)
class GridParams:
    """Axis-aligned voxel grid: bounds in meters, voxel counts per axis."""

    lower: np.ndarray  # (3,)
    upper: np.ndarray  # (3,)
    resolution: Tuple[int, int, int]

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(3)
        upper = np.asarray(self.upper, dtype=float).reshape(3)
        res = tuple(int(r) for r in self.resolution)
        if len(res) != 3 or any(r < 1 for r in res):
            raise ValueError("resolution must be three counts >= 1")
        if not np.all(upper > lower):
            raise ValueError("upper bounds must exceed lower bounds")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "resolution", res)

    @property
    def voxel_size(self) -> np.ndarray:
        return (self.upper - self.lower) / np.array(self.resolution, dtype=float)

    @property
    def voxel_volume(self) -> float:
        return float(np.prod(self.voxel_size))

    def centers(self) -> np.ndarray:
        """Voxel centers, shape (nx*ny*nz, 3), x fastest-varying last axis
        ordering (C order over the (nx, ny, nz) index grid)."""
        axes = [self.lower[k] + (np.arange(self.resolution[k]) + 0.5) * self.voxel_size[k]
                for k in range(3)]
        xx, yy, zz = np.meshgrid(*axes, indexing="ij")
        return np.stack([xx.ravel(), yy.ravel(), zz.ravel()], axis=1)


@dataclass
class WorkspaceGrid:
    """Flag volumes for one stance; arrays are shaped like ``params.resolution``.

    ``torque_rank`` holds the rank of the 3 x n torque block of the stance
    generators at geometry-feasible voxels and -1 elsewhere.
    """

    params: GridParams
    orientation: np.ndarray  # quaternion (4,)
    geometry: np.ndarray  # bool
    equilibrium: np.ndarray  # bool
    closure: np.ndarray  # bool
    torque_rank: np.ndarray  # int8

    @property
    def geometry_volume(self) -> float:
        return float(self.geometry.sum()) * self.params.voxel_volume

    @property
    def equilibrium_volume(self) -> float:
        return float(self.equilibrium.sum()) * self.params.voxel_volume

    @property
    def closure_volume(self) -> float:
        return float(self.closure.sum()) * self.params.voxel_volume

    def volumes(self) -> Dict[str, float]:
        return {"geometry": self.geometry_volume,
                "equilibrium": self.equilibrium_volume,
                "closure": self.closure_volume}


def _canonical_orientations(base: np.ndarray) -> list:
    """The base orientation plus five axis-quarter-turns composed onto it."""
    quarter = 0.5 * np.pi
    turns = [quat_from_axis_angle(np.array(ax, dtype=float), ang)
             for ax, ang in ((np.array([1.0, 0, 0]), quarter),
                             (np.array([1.0, 0, 0]), -quarter),
                             (np.array([0, 1.0, 0]), quarter),
                             (np.array([0, 1.0, 0]), -quarter),
                             (np.array([0, 0, 1.0]), quarter))]
    return [base] + [quat_multiply(q, base) for q in turns]


def _resolve_attachments(env: Environment, assignment: Mapping[int, int],
                         robot: RobotModel):
    if not assignment:
        raise ValueError("assignment must attach at least one boom")
    by_id = {s.id: s for s in env.sites}
    attachments = []
    seen_sites = set()
    for boom, site_id in sorted(assignment.items()):
        if not (0 <= boom < robot.n_booms):
            raise ValueError(f"boom index {boom} out of range")
        if site_id not in by_id:
            raise ValueError(f"unknown site id {site_id}")
        if site_id in seen_sites:
            raise ValueError(f"site {site_id} assigned twice")
        seen_sites.add(site_id)
        attachments.append((boom, by_id[site_id]))
    return attachments


def _sweep_one_orientation(attachments, robot: RobotModel, w_eq, w_closure,
                           centers: np.ndarray, quat: np.ndarray):
    """Flat flag arrays for one fixed orientation over all voxel centers."""
    rot = Pose(position=np.zeros(3), quaternion=quat).rotation
    n_vox = centers.shape[0]
    geometry = np.ones(n_vox, dtype=bool)
    cos_limit = np.cos(robot.cone_half_angle)
    for boom, site in attachments:
        arm = rot @ robot.attachment_points[boom]
        axis_w = rot @ robot.cone_axes[boom]
        v = site.position[None, :] - (centers + arm[None, :])
        length = np.linalg.norm(v, axis=1)
        safe = np.maximum(length, 1e-300)
        cosine = (v @ axis_w) / safe
        geometry &= (length >= 1e-9) & (length >= robot.boom_min) \
            & (length <= robot.boom_max) & (cosine >= cos_limit)

    equilibrium = np.zeros(n_vox, dtype=bool)
    closure = np.zeros(n_vox, dtype=bool)
    rank = np.full(n_vox, -1, dtype=np.int8)
    for ix in np.nonzero(geometry)[0]:
        pose = Pose(position=centers[ix], quaternion=quat)
        gen = generator_set(pose, robot, attachments)
        torque_block = np.stack([g[3:] for g, _u in gen.generators], axis=1)
        rank[ix] = np.linalg.matrix_rank(torque_block)
        if achievable(gen, w_eq):
            equilibrium[ix] = True
            if achievable(gen, w_closure):
                closure[ix] = True
    return geometry, equilibrium, closure, rank


def evaluate_workspace(env: Environment, assignment: Mapping[int, int],
                       robot: RobotModel, w_task, grid: GridParams,
                       orientation: Optional[np.ndarray] = None,
                       orientation_sweep: bool = False) -> WorkspaceGrid:
    """Label every voxel of ``grid`` for a fixed stance.

    ``w_task`` is the raw task wrench; gravity compensation is composed here
    (equilibrium tests the pure compensation wrench, closure tests the
    composed task wrench). With ``orientation_sweep`` the flags are the
    intersection over six canonical orientations; the rank diagnostic always
    refers to the base orientation.
    """
    attachments = _resolve_attachments(env, assignment, robot)
    w_task = np.asarray(w_task, dtype=float).reshape(6)
    w_gc = -gravity_wrench(robot)
    w_closure = w_task + w_gc
    quat = (np.array([1.0, 0.0, 0.0, 0.0]) if orientation is None
            else np.asarray(orientation, dtype=float).reshape(4))
    centers = grid.centers()

    quats = _canonical_orientations(quat) if orientation_sweep else [quat]
    geometry = equilibrium = closure = None
    base_rank = None
    for q in quats:
        g, e, c, r = _sweep_one_orientation(attachments, robot, w_gc,
                                            w_closure, centers, q)
        if geometry is None:
            geometry, equilibrium, closure, base_rank = g, e, c, r
        else:
            geometry &= g
            equilibrium &= e
            closure &= c

    shape = grid.resolution
    return WorkspaceGrid(params=grid, orientation=quat,
                         geometry=geometry.reshape(shape),
                         equilibrium=equilibrium.reshape(shape),
                         closure=closure.reshape(shape),
                         torque_rank=base_rank.reshape(shape))


@dataclass
class ComparisonEntry:
    """One planned stance and its evaluated workspace."""

    morphology: str
    variant: str
    stance: StancePlan
    workspace: WorkspaceGrid


def default_grid(env: Environment, resolution: int = 40) -> GridParams:
    """Grid covering the tube's bounding box at a uniform voxel count."""
    half_len = 0.5 * env.length
    r = env.radius
    return GridParams(lower=np.array([-half_len, -r, -r]),
                      upper=np.array([half_len, r, r]),
                      resolution=(resolution, resolution, resolution))


def compare_morphologies(env: Environment, task: TaskSpec, grid: GridParams,
                         variants: Tuple[str, ...] = ("naive", "optimal"),
                         morphologies: Tuple[str, ...] = ("cable", "boom"),
                         gap_tol: float = 1e-6, time_limit: float = 120.0
                         ) -> Dict[Tuple[str, str], ComparisonEntry]:
    """Plan each (morphology, variant) stance for ``task`` and evaluate its
    workspace at the task's nominal orientation and first-point wrench.

    ``task`` carries raw wrenches; gravity composition happens internally,
    per morphology. Raises when a planner cannot find any feasible stance.
    """
    out: Dict[Tuple[str, str], ComparisonEntry] = {}
    for morph in morphologies:
        robot = default_robot(morphology=morph)
        composed = compose_gravity(task, robot)
        problem = build_problem(robot, env.sites, composed)
        for variant in variants:
            stance = plan(problem, variant, gap_tol=gap_tol,
                          time_limit=time_limit)
            if stance.margin == -np.inf or not stance.assignment:
                raise RuntimeError(
                    f"{variant} planner found no feasible {morph} stance")
            ws = evaluate_workspace(
                env, stance.assignment, robot, task.points[0].wrench, grid,
                orientation=task.points[0].pose.quaternion)
            out[(morph, variant)] = ComparisonEntry(
                morphology=morph, variant=variant, stance=stance, workspace=ws)
    return out
