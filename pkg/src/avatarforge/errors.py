"""Exception hierarchy shared by all avatarforge modules."""


class AvatarForgeError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(AvatarForgeError):
    """A file or payload does not follow its documented schema."""


class DimensionMismatchError(AvatarForgeError):
    """Two buffers that must share dimensions do not."""


class DegenerateInputError(AvatarForgeError):
    """Input too small or too uniform for the requested operation."""


class DegenerateDistributionError(AvatarForgeError):
    """A sample set cannot support the requested distribution fit."""


class DegenerateRegionError(AvatarForgeError):
    """A segmentation region is empty after masking."""


class NoBoundaryError(AvatarForgeError):
    """An inpainting mask leaves no known boundary pixels."""


class UndefinedPoseError(AvatarForgeError):
    """A pose comparison has no jointly visible keypoints."""


class EmptyDatasetError(AvatarForgeError):
    """A dataset builder produced zero training pairs."""


class InvariantViolation(AvatarForgeError):
    """A domain type was constructed with invalid field values."""


class BackendError(AvatarForgeError):
    """A generation backend call failed.

    Carries the slot name (and route, for HTTP backends) so callers can
    tell which capability broke.
    """

    def __init__(self, message, slot=None, route=None):
        super().__init__(message)
        self.slot = slot
        self.route = route

    def __str__(self):
        base = super().__str__()
        parts = []
        if self.slot:
            parts.append(f"slot={self.slot}")
        if self.route:
            parts.append(f"route={self.route}")
        if parts:
            return f"{base} ({', '.join(parts)})"
        return base


class PipelineError(AvatarForgeError):
    """A pipeline stage failed outright."""


class PipelineAbort(PipelineError):
    """Synthesis aborted mid-run; completed frames were preserved.

    ``completed`` counts the frames finished before the failure; ``trace``
    holds the partial synthesis trace.
    """

    def __init__(self, message, completed, trace=None, cause=None):
        super().__init__(message)
        self.completed = completed
        self.trace = trace
        self.cause = cause
