"""Exception types shared across the package."""


class AttachnetError(Exception):
    """Base class for all package-specific errors."""


class ParseError(AttachnetError):
    """Raised for unrecoverable problems in an input file.

    ``line`` is the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(AttachnetError):
    """A precondition on an operation's inputs was violated."""


class EmptyCohortError(ValidationError):
    """A cohort filter removed every row."""


class FixtureError(AttachnetError):
    """Bundled or user-supplied fixture data failed an integrity check."""


class PathCountError(AttachnetError):
    """Simple-path enumeration would exceed the configured cap."""


class ConvergenceError(AttachnetError):
    """An iterative solver failed to reach its tolerance."""
