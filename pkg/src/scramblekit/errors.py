"""Exception types shared across the package."""


class ScrambleKitError(Exception):
    """Base class for package errors."""


class DimensionMismatchError(ScrambleKitError):
    """Operands live on different numbers of sites."""


class CapacityError(ScrambleKitError):
    """Requested computation exceeds a configured exact-size limit."""


class IntegrationError(ScrambleKitError):
    """Adaptive integration failed (step underflow or tolerance not met)."""


class CertificationError(ScrambleKitError):
    """A certification prerequisite is not met (e.g. disconnected graph)."""


class ProtocolStateError(ScrambleKitError):
    """Operator state violates a protocol gate's precondition."""


class PlanningError(ScrambleKitError):
    """Protocol plan is infeasible for the requested parameters."""


class ConfigError(ScrambleKitError):
    """Experiment configuration failed to parse or validate."""
