"""Stance and tension planning for reconfigurable boom/cable parallel robots."""

__version__ = "0.1.0"

from .geometry import GraspSite, Pose, RobotModel  # noqa: F401
