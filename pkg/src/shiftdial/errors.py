"""Exception types shared across the pipeline."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for every error raised by shiftdial.

    ``turn_index`` is filled in by the question generation loop when a
    failure happens while building a specific dialogue turn.
    """

    turn_index: int | None = None


class GraphLoadError(PipelineError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)


class NotFound(PipelineError):
    """No passage could be found for ``query``."""

    def __init__(self, query: str, reason: str = "no passage found"):
        self.query = query
        super().__init__(f"{reason}: {query!r}")


class TransportError(PipelineError):
    """A remote call failed after all retry attempts were used up."""

    def __init__(self, message: str, attempts: int = 0):
        self.attempts = attempts
        super().__init__(message)


class EmptyGeneration(PipelineError):
    pass


class SkipWalk(PipelineError):
    """A walk entity has no passage; the caller should draw another walk."""

    def __init__(self, entity: str):
        self.entity = entity
        super().__init__(f"skipping walk, no passage for entity {entity!r}")


class ConfigError(PipelineError, ValueError):
    pass
