"""Exception hierarchy.

Every construction failure carries a short ``reason`` code so spectrum
reports can record why a certificate is absent.
"""


class ConeSpecError(Exception):
    reason = "error"


class DomainMismatchError(ConeSpecError, ValueError):
    reason = "domain-mismatch"


class ConeViolationError(ConeSpecError, ValueError):
    reason = "cone-violation"


class InvalidArgumentError(ConeSpecError, ValueError):
    reason = "invalid-argument"


class PreconditionError(ConeSpecError, ValueError):
    reason = "precondition"


class HorizonExhaustedError(ConeSpecError):
    reason = "horizon-exhausted"


class TargetAboveRadiusError(ConeSpecError):
    reason = "target-above-radius"


class DivergenceThresholdUnreachedError(ConeSpecError):
    reason = "divergence-threshold-unreached"


class NotAPowerEigenvectorError(ConeSpecError):
    reason = "not-a-power-eigenvector"


class UnknownFixtureError(ConeSpecError, KeyError):
    reason = "unknown-fixture"


class ExprError(ConeSpecError, ValueError):
    """Parse or evaluation error in a kernel expression."""

    reason = "expression"

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} at offset {position}"
        super().__init__(message)
