"""Exception hierarchy shared by every module of the package."""


class JTError(Exception):
    """Base class for all errors raised by jtarch."""


class DomainError(JTError, ValueError):
    """An argument lies outside the domain of an operation."""


class InconsistentModelError(JTError):
    """The factorisation has no mass (its product is identically zero)."""


class InternalConsistencyError(JTError, RuntimeError):
    """An internal invariant was violated; indicates an engine bug."""


class ConstructionError(JTError):
    """A junction tree cannot host the factorisation it was given."""


class SearchContextError(InternalConsistencyError):
    """A search was started on a context that is not clean."""


class FormatError(JTError, ValueError):
    """Malformed BFN or JT text."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
