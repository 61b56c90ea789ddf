"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Matrix or vector dimensions do not agree."""


class ConfigError(ValueError):
    """A configuration value is out of range or inconsistent."""


class StateError(RuntimeError):
    """An operation was called on an object in an unusable state."""


class ContractError(ValueError):
    """A call violated a documented precondition (e.g. touching a clamped entry)."""


class DataError(ValueError):
    """Input data is empty, malformed, or cannot be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UndefinedMetricError(ValueError):
    """A metric is undefined for the given input (e.g. AUC with one class)."""


class UnsupportedVersionError(ValueError):
    """A serialized artifact has a format version this code cannot read."""
