"""Domain errors shared across the package.

Every error carries a stable ``code`` (its class name) so the CLI can emit
machine-checkable JSON, and an optional ``stage`` tag set by the pipeline
when an error surfaces mid-performance.
"""

from __future__ import annotations


class AmbError(Exception):
    """Base class for all domain errors."""

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.stage: str | None = None

    @property
    def code(self) -> str:
        return type(self).__name__


class ParseError(AmbError):
    pass


class MissingField(AmbError):
    def __init__(self, path: str):
        super().__init__(f"missing required field: {path}")
        self.path = path


class UnknownEpisode(AmbError):
    pass


class UnknownScene(AmbError):
    pass


class InvalidPosition(AmbError):
    pass


class EmptyInput(AmbError):
    pass


class BackendUnavailable(AmbError):
    pass


class MissingSidecar(AmbError):
    pass


class EmptyPrompt(AmbError):
    pass


class EmptyText(AmbError):
    pass


class EmptyCompletion(AmbError):
    pass


class DimMismatch(AmbError):
    pass


class ZeroVector(AmbError):
    pass


class EmptyDatabase(AmbError):
    pass


class VersionMismatch(AmbError):
    pass


class RoleMismatch(AmbError):
    pass


class NoProfile(AmbError):
    pass


class TemplateError(AmbError):
    pass


class RoleSetMismatch(AmbError):
    pass


class IncompleteGrid(AmbError):
    pass
