"""Exception hierarchy shared by every subpackage."""


class ParestError(Exception):
    """Base class for all errors raised by parest."""


class NonPositiveMass(ParestError, ValueError):
    pass


class InconsistentInput(ParestError, ValueError):
    pass


class NotPositiveDefinite(ParestError, ValueError):
    pass


class RankDeficientContact(ParestError, ValueError):
    pass


class SingularParameterHessian(ParestError, ValueError):
    """Raised by the Schur arrival solve when the parameter Hessian is rank deficient."""


class NonFiniteData(ParestError, ValueError):
    pass


class InconsistentSchedule(ParestError, ValueError):
    pass


class MaxIterReached(ParestError):
    """Carries the best iterate found when the iteration budget runs out."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
