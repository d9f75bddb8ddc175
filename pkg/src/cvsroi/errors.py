"""Exception hierarchy.

Every error carries a stable ``code`` (the class name) so the CLI can report
it as a one-line JSON object without parsing messages.
"""


class CvsError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# input errors (CLI exit code 2)
class InputError(CvsError):
    pass


class MissingFile(InputError):
    pass


class MalformedPgm(InputError):
    pass


class UnknownClassId(InputError):
    pass


class PaletteMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class LengthMismatch(InputError):
    pass


class MissingTruth(InputError):
    pass


class InvalidSpec(InputError):
    pass


class ConfigError(InputError):
    pass


class IoFailure(CvsError):
    pass


# internal invariant violations (CLI exit code 3)
class InvariantViolation(CvsError):
    pass


# geometry
class GeometryError(CvsError):
    pass


class DegenerateCluster(GeometryError):
    pass


class RayMiss(GeometryError):
    pass


class EmptySet(GeometryError):
    pass


class InvalidRegion(GeometryError):
    pass


# ROI estimation failures; assess_cvs records these instead of raising
class EstimationFailure(CvsError):
    pass


class DuctMissing(EstimationFailure):
    pass


class GallbladderMissing(EstimationFailure):
    pass


class LiverMissing(EstimationFailure):
    pass


class CNotFound(EstimationFailure):
    pass


class DegenerateRoi(EstimationFailure):
    pass
