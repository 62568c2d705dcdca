"""Exception hierarchy shared by every mixalign module.

Each class carries the process exit code the CLI reports for it.
"""

from typing import Iterable, Optional


class MixAlignError(Exception):
    """Base class for all errors raised deliberately by mixalign."""

    exit_code: int = 1
    category: str = "internal"


class InvalidInputError(MixAlignError, ValueError):
    """A documented precondition of an operation does not hold."""

    exit_code = 3
    category = "invalid-input"


class ConfigError(MixAlignError, ValueError):
    """A run configuration failed validation."""

    exit_code = 3
    category = "config"

    def __init__(self, message: str, fields: Optional[Iterable[str]] = None):
        self.fields = tuple(fields or ())
        if self.fields:
            message = f"{message} (fields: {', '.join(self.fields)})"
        super().__init__(message)


class NotVisibleError(MixAlignError):
    """An instance cannot be seen from the requested camera."""

    exit_code = 3
    category = "not-visible"


class SceneError(MixAlignError, LookupError):
    """A scene lookup (sweep, pose, instance) failed."""

    exit_code = 5
    category = "scene"


class DataFormatError(MixAlignError):
    """An on-disk artifact is corrupt or truncated.

    Args:
        message: Human-readable description.
        offset: Byte offset at which decoding failed, when known.
    """

    exit_code = 5
    category = "data-format"

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} at byte offset {offset}"
        super().__init__(message)


class ProviderError(MixAlignError, LookupError):
    """An embedding provider cannot produce the requested vector."""

    exit_code = 5
    category = "provider"


EXIT_USAGE = 2
EXIT_IO = 4
