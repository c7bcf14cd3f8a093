"""Rigid-body poses, wrench algebra, and robot/grasp-site descriptions.

Conventions used throughout the package:

* A wrench is a plain float64 array of shape (6,), ordered [force; torque],
  with the torque taken about the body reference point (which coincides with
  the center of mass). Forces in N, torques in Nm, world frame.
* Quaternions are scalar-first (w, x, y, z), right-handed, active rotations.
* All geometry values are immutable after construction and safe to share
  across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

FORCE = slice(0, 3)
TORQUE = slice(3, 6)

_UNIT_TOL = 1e-9


def _frozen_array(x, shape) -> np.ndarray:
    a = np.array(x, dtype=float).reshape(shape)
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite entries")
    a.flags.writeable = False
    return a


def quat_to_rotation(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < _UNIT_TOL:
        if abs(angle) < _UNIT_TOL:
            return np.array([1.0, 0.0, 0.0, 0.0])
        raise ValueError("zero rotation axis with nonzero angle")
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) / n * axis))


@dataclass(frozen=True)
class Pose:
    """Rigid-body pose: position (m) plus unit quaternion (w, x, y, z)."""

    position: np.ndarray
    quaternion: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _frozen_array(self.position, (3,)))
        q = np.array(self.quaternion, dtype=float).reshape(4)
        n = np.linalg.norm(q)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {n:.3e} too far from 1")
        q /= n
        q.flags.writeable = False
        object.__setattr__(self, "quaternion", q)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def from_axis_angle(axis, angle: float, position=(0.0, 0.0, 0.0)) -> "Pose":
        return Pose(np.asarray(position, dtype=float), quat_from_axis_angle(axis, angle))

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_rotation(self.quaternion)

    def rotated_by(self, axis, angle: float) -> "Pose":
        """Pose with an extra world-frame rotation applied, position unchanged."""
        q = quat_multiply(quat_from_axis_angle(axis, angle), self.quaternion)
        return Pose(self.position, q)

    def translated_by(self, delta) -> "Pose":
        return Pose(self.position + np.asarray(delta, dtype=float), self.quaternion)


def transform_point(pose: Pose, p_body) -> np.ndarray:
    """World coordinates of a body-frame point: R @ p + position."""
    return pose.rotation @ np.asarray(p_body, dtype=float) + pose.position


def make_wrench(force=(0.0, 0.0, 0.0), torque=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Stack force (N) and torque (Nm) into the canonical 6-vector."""
    w = np.concatenate([np.asarray(force, dtype=float), np.asarray(torque, dtype=float)])
    if w.shape != (6,):
        raise ValueError("force and torque must each have 3 components")
    if not np.all(np.isfinite(w)):
        raise ValueError("non-finite wrench entries")
    return w


@dataclass(frozen=True)
class RobotModel:
    """Body-frame attachment layout, cone limits, and load parameters.

    ``m_max`` is the shoulder bending moment each attached boom can resist;
    a pure-cable morphology sets it to zero.
    """

    attachment_points: np.ndarray  # (n_booms, 3), body frame
    cone_axes: np.ndarray  # (n_booms, 3), unit, body frame
    cone_half_angle: float  # rad
    t_max: float  # N
    m_max: float  # Nm
    mass: float  # kg
    gravity: np.ndarray  # (3,), m/s^2
    boom_min: float = 0.5  # m
    boom_max: float = 5.0  # m

    def __post_init__(self):
        pts = np.array(self.attachment_points, dtype=float)
        axes = np.array(self.cone_axes, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or axes.shape != pts.shape:
            raise ValueError("attachment_points and cone_axes must be (n, 3) and match")
        norms = np.linalg.norm(axes, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("cone axes must be unit vectors")
        axes /= norms[:, None]
        if not (0.0 < self.cone_half_angle < np.pi / 2):
            raise ValueError("cone half-angle must lie in (0, pi/2)")
        if self.t_max <= 0 or self.m_max < 0 or self.mass <= 0:
            raise ValueError("require t_max > 0, m_max >= 0, mass > 0")
        if not (0.0 <= self.boom_min < self.boom_max):
            raise ValueError("require 0 <= boom_min < boom_max")
        pts.flags.writeable = False
        axes.flags.writeable = False
        object.__setattr__(self, "attachment_points", pts)
        object.__setattr__(self, "cone_axes", axes)
        object.__setattr__(self, "gravity", _frozen_array(self.gravity, (3,)))

    @property
    def n_booms(self) -> int:
        return self.attachment_points.shape[0]


def default_robot(
    morphology: str = "boom",
    body_half_width: float = 0.1,
    cone_half_angle_deg: float = 60.0,
    t_max: float = 30.0,
    m_max: float = 1.0,
    mass: float = 10.0,
    gravity: Sequence[float] = (0.0, 0.0, -3.71),
    boom_min: float = 0.5,
    boom_max: float = 5.0,
) -> RobotModel:
    """Eight-limb body: attachments at cube corners, cone axes radially outward.

    ``morphology`` is "boom" (shoulders resist m_max) or "cable" (m_max = 0).
    """
    if morphology not in ("boom", "cable"):
        raise ValueError(f"unknown morphology {morphology!r}")
    corners = np.array(
        [[sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)]
    )
    points = body_half_width * corners
    axes = corners / np.sqrt(3.0)
    return RobotModel(
        attachment_points=points,
        cone_axes=axes,
        cone_half_angle=np.deg2rad(cone_half_angle_deg),
        t_max=t_max,
        m_max=0.0 if morphology == "cable" else m_max,
        mass=mass,
        gravity=np.asarray(gravity, dtype=float),
        boom_min=boom_min,
        boom_max=boom_max,
    )


@dataclass(frozen=True)
class GraspSite:
    """Candidate attachment point on the environment with grasp statistics."""

    id: int
    position: np.ndarray  # (3,), world frame
    quality: float  # in (0, 1]
    pull_mean: float  # N
    pull_std: float  # N

    def __post_init__(self):
        object.__setattr__(self, "position", _frozen_array(self.position, (3,)))
        if not (0.0 < self.quality <= 1.0):
            raise ValueError("quality must lie in (0, 1]")
        if self.pull_mean <= 0 or self.pull_std <= 0:
            raise ValueError("pull_mean and pull_std must be positive")


def boom_generator(pose: Pose, attachment_body, site_pos):
    """Unit-tension wrench of one limb plus its length.

    The limb runs from the world-frame attachment point a = R p + x toward
    ``site_pos``; the wrench is [d; (a - x) x d] for unit direction d, torque
    about the body reference point x.
    """
    x = pose.position
    a = transform_point(pose, attachment_body)
    to_site = np.asarray(site_pos, dtype=float) - a
    length = float(np.linalg.norm(to_site))
    if length < 1e-9:
        raise ValueError("grasp site coincides with the attachment point")
    d = to_site / length
    g = np.concatenate([d, np.cross(a - x, d)])
    return g, length


def gravity_wrench(model: RobotModel) -> np.ndarray:
    """Weight wrench about the body reference point (all mass acts there)."""
    return make_wrench(model.mass * model.gravity)


def cone_feasible(pose: Pose, boom_index: int, site_pos, model: RobotModel):
    """Check the outward-cone direction constraint for one boom/site pair.

    Returns (feasible, direction_cosine) where the cosine is between the
    world-frame limb direction and the world-frame cone axis.
    """
    a = transform_point(pose, model.attachment_points[boom_index])
    to_site = np.asarray(site_pos, dtype=float) - a
    length = np.linalg.norm(to_site)
    if length < 1e-9:
        raise ValueError("grasp site coincides with the attachment point")
    axis_world = pose.rotation @ model.cone_axes[boom_index]
    cosine = float(to_site @ axis_world / length)
    return cosine >= np.cos(model.cone_half_angle), cosine


def pair_feasible(pose: Pose, boom_index: int, site_pos, model: RobotModel):
    """Cone check plus boom length limits; length violations count as infeasible."""
    a = transform_point(pose, model.attachment_points[boom_index])
    length = float(np.linalg.norm(np.asarray(site_pos, dtype=float) - a))
    if length < 1e-9:
        return False, 0.0, length
    ok, cosine = cone_feasible(pose, boom_index, site_pos, model)
    ok = ok and (model.boom_min <= length <= model.boom_max)
    return ok, cosine, length
