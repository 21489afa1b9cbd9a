"""cobotkit: a cobot programming-by-demonstration engine.

Kinematic simulation, task-space PID teleoperation with dual-gain
scheduling, damped differential IK with nullspace bias, scene memory with
object permanency, object-centric manipulation primitives, JSON task flows,
haptic cue rendering, and a wire gateway for companion UIs.
"""

from ._backend import BACKEND
from .geometry import Pose6D, Twist
from .robot import JointState, RobotModel, default_seven_dof, planar_two_link

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Pose6D",
    "Twist",
    "JointState",
    "RobotModel",
    "default_seven_dof",
    "planar_two_link",
    "__version__",
]
