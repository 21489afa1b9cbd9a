"""Exception types shared across the engine."""


class CobotError(Exception):
    """Base class for engine errors."""


class ModelError(CobotError):
    """Malformed robot model description."""


class DimensionError(CobotError):
    """Vector length does not match the model's joint count."""


class RegistrationError(CobotError):
    """3-point registration rejected (collinear or degenerate points)."""


class FrameError(CobotError):
    """Unknown or disconnected frame in a transform tree."""


class ObjectNotFound(CobotError):
    """Scene memory has no object with the requested id."""


class TaskError(CobotError):
    """Task document failed to parse or validate."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class GraspError(CobotError):
    """Gripper closed too far from the target object."""


class TeleopError(CobotError):
    """Teleoperation session used while inactive."""
