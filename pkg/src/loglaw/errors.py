class LoglawError(Exception):
    """Base class for all errors raised by loglaw."""


class InvalidArgumentError(LoglawError, ValueError):
    pass


class NumericDomainError(LoglawError, ArithmeticError):
    pass


class SamplingFailure(LoglawError):
    """Rejection sampler gave up; carries the observed acceptance rate."""

    def __init__(self, message, accepted=0, attempts=0):
        super().__init__(message)
        self.accepted = accepted
        self.attempts = attempts

    @property
    def acceptance_rate(self):
        return self.accepted / self.attempts if self.attempts else 0.0


class ReductionFailure(LoglawError):
    """Fundamental-domain reduction exceeded its word-length cap."""

    def __init__(self, message, point=None, word=None):
        super().__init__(message)
        self.point = point
        self.word = list(word) if word is not None else []


class InsufficientDataError(LoglawError):
    pass


class ConfigError(LoglawError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
