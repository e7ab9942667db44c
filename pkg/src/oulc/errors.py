"""Exception hierarchy shared across the package."""


class OulcError(Exception):
    """Base class for all package errors."""


class InvalidBar(OulcError, ValueError):
    pass


class InvalidParams(OulcError, ValueError):
    pass


class TauOutOfRange(OulcError, ValueError):
    pass


class SegmentTooShort(OulcError, ValueError):
    pass


class SeriesTooShort(OulcError, ValueError):
    pass


class NoConvergence(OulcError, RuntimeError):
    """Newton iteration failed from every start.

    ``best`` carries the best iterate found as a ``(sigma2, loglik)`` pair and
    ``segment`` names the failing segment when raised from a profile fit.
    """

    def __init__(self, message, best=None, segment=None):
        super().__init__(message)
        self.best = best
        self.segment = segment


class DegenerateSegment(OulcError, ValueError):
    pass


class AllTauFailed(OulcError, RuntimeError):
    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = failures or {}


class BootstrapExhausted(OulcError, RuntimeError):
    pass


class ParseError(OulcError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class InvariantViolation(OulcError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line
