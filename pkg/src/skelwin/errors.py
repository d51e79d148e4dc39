"""Exception types shared across the engine.

Everything raised on bad data derives from :class:`EngineError`, so callers
(and the CLI exit-code mapping) can catch one base class.
"""


class EngineError(Exception):
    """Base class for data and configuration errors raised by this package."""


class InvalidJointSet(EngineError):
    """Joint indices are malformed or out of range for the trajectory."""


class InvalidTrajectory(EngineError):
    """Trajectory structure violates an invariant (shape, finiteness, fps)."""


class TrajectoryTooShort(EngineError):
    """Action has fewer frames than the requested window size."""


class ConstraintViolation(EngineError):
    """Strict-mode window bound violated (window size must stay <= frames - step)."""


class InvalidPlan(EngineError):
    """Feature sequence does not match the window plan it is paired with."""


class ShapeError(EngineError):
    """Dimension mismatch between data and model or between embeddings."""


class LabelError(EngineError):
    """Class label out of range or not in the model's vocabulary."""


class MissingLabel(EngineError):
    """Evaluation requires labels but a trajectory has none."""


class DivergenceError(EngineError):
    """Training produced a non-finite loss or parameter."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class DegenerateEmbedding(EngineError):
    """All-zero embedding vector; similarity is undefined."""


class NoTemplates(EngineError):
    """Filtering requires at least one template embedding."""


class UndefinedRecall(EngineError):
    """Threshold sweep needs at least one ground-truth positive."""
