"""Exception types shared across the package."""


class SurrocalError(Exception):
    """Base class for all package errors."""


class DomainError(SurrocalError, ValueError):
    """An input violates a documented precondition or invariant."""


class NumericalError(SurrocalError, RuntimeError):
    """A computation produced a non-finite or otherwise unusable value."""


class AlignmentError(SurrocalError, ValueError):
    """Two series that must share timestamps/channels/binning do not."""


class IllConditionedError(NumericalError):
    """A kernel matrix stayed non-factorizable after jitter escalation."""


class ParseError(SurrocalError, ValueError):
    """A text artifact (config, preset, CSV) could not be parsed.

    Carries the 1-based line number when known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"{line}:"
        super().__init__(f"{prefix} {message}" if prefix else message)


class StageError(SurrocalError, RuntimeError):
    """A pipeline stage failed; carries the stage name for CLI reporting."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
