"""Exception types shared across the package.

Everything raised on purpose derives from Ts2ImgError so callers can catch
one base class. Each subclass also derives from the closest builtin so that
generic handlers (ValueError, RuntimeError) keep working.
"""


class Ts2ImgError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(Ts2ImgError, ValueError):
    """An input value violates a documented precondition."""


class ConfigError(Ts2ImgError, ValueError):
    """A configuration value is out of its admissible range."""


class SchemaError(Ts2ImgError, ValueError):
    """A CSV header does not match the declared schema."""


class RowError(Ts2ImgError, ValueError):
    """A CSV row could not be parsed. Carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ShapeError(Ts2ImgError, ValueError):
    """Array shapes do not agree. The message names both shapes."""


class StateError(Ts2ImgError, RuntimeError):
    """An operation was attempted in the wrong model mode."""


class DivergenceError(Ts2ImgError, RuntimeError):
    """Training produced a non-finite loss. Carries epoch and batch index."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class FormatError(Ts2ImgError, ValueError):
    """A file does not look like the expected binary format at all."""


class CorruptionError(Ts2ImgError, ValueError):
    """A file matches the expected format but its payload fails validation."""


class PlanError(Ts2ImgError, ValueError):
    """A transfer plan is inconsistent with its base checkpoint."""
