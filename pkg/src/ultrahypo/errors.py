"""Exception hierarchy shared by all modules."""


class UltrahypoError(Exception):
    """Base class for every error raised by the toolkit."""


class MalformedSequenceError(UltrahypoError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class FitFailureError(UltrahypoError):
    def __init__(self, message, k):
        super().__init__(message)
        self.k = k


class BudgetExceededError(UltrahypoError):
    """The associated-function scan ran past its k-budget (or the table end)."""


class UnreachableLevelError(UltrahypoError):
    """Bracket expansion for the generalized inverse did not reach the level."""


class SpectralModelError(UltrahypoError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class MalformedBlockError(UltrahypoError):
    def __init__(self, message, ell=None):
        super().__init__(message)
        self.ell = ell


class SingularBlockError(UltrahypoError):
    def __init__(self, message, ell=None):
        super().__init__(message)
        self.ell = ell


class DimensionBudgetError(UltrahypoError):
    pass


class UnknownFamilyError(UltrahypoError):
    pass


class NuMismatchError(UltrahypoError):
    pass


class InsufficientTruncationError(UltrahypoError):
    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class NoCounterexampleError(UltrahypoError):
    """No violation of the condition was found within the computed truncation.

    This does not certify that the condition holds.
    """


class ScheduleExhaustedError(UltrahypoError):
    def __init__(self, message, k_reached):
        super().__init__(message)
        self.k_reached = k_reached
