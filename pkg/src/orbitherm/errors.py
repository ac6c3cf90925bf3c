"""Exception hierarchy. Every error raised on purpose by the package derives
from :class:`OrbithermError` so drivers can map them to exit codes."""


class OrbithermError(Exception):
    pass


class NumericOverflowError(OrbithermError, ArithmeticError):
    pass


class AmbiguousClassificationError(OrbithermError):
    pass


class InvalidConfigError(OrbithermError, ValueError):
    pass


class ResourceLimitError(OrbithermError):
    pass


class EstimationFailureError(OrbithermError):
    pass


class ReductionLimitError(OrbithermError):
    pass


class NotClosedGeodesicError(OrbithermError, ValueError):
    pass


class InvalidSpecError(OrbithermError, ValueError):
    pass


class QuadratureResolutionError(OrbithermError):
    pass


class StaleTableError(OrbithermError, KeyError):
    pass


class BracketError(OrbithermError):
    pass


class DegenerateWeightsError(OrbithermError):
    pass


class BisectionFailureError(OrbithermError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class InvalidTargetError(OrbithermError, ValueError):
    pass


class FamilyError(OrbithermError):
    pass


class ScheduleFailureError(OrbithermError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class ConfigError(OrbithermError, ValueError):
    """Schema violations; ``violations`` is a list of (json_pointer, message)."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{p or '/'}: {m}" for p, m in self.violations]
        super().__init__("invalid config:\n  " + "\n  ".join(lines))
