"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CobessError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CobessError):
    """User-supplied data, arguments, or configuration failed validation."""


class ConfigError(ValidationError):
    """Run-config file is malformed, has unknown keys, or inconsistent values."""


class ScenarioFormatError(ValidationError):
    """A scenario file could not be parsed; carries row/column context."""

    def __init__(self, message: str, *, path: str | None = None,
                 row: int | None = None, column: str | None = None):
        parts = []
        if path is not None:
            parts.append(str(path))
        if row is not None:
            parts.append(f"row {row}")
        if column is not None:
            parts.append(f"column '{column}'")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.row = row
        self.column = column


class DefectError(CobessError):
    """An internal invariant was violated; indicates a bug, not bad input."""


class TrainingError(CobessError):
    """Training produced non-finite values or could not proceed."""
