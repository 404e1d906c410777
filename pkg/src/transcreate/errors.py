"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class TranscreateError(Exception):
    """Base class for all toolkit errors."""


# --- backends ---------------------------------------------------------------


class BackendUnavailable(TranscreateError):
    """Transient backend failure; eligible for retry."""


class MalformedImage(TranscreateError):
    """Image payload could not be decoded, or violated a pixel contract."""


class EmptyResponse(TranscreateError):
    """Backend returned empty or whitespace-only content."""


class MissingBinding(TranscreateError):
    """A prompt placeholder has no bound value."""


class UnknownTemplate(TranscreateError):
    """Prompt template id is not registered."""


# --- retrieval --------------------------------------------------------------


class EmptyIndex(TranscreateError):
    """Query issued against an index with no entries."""


class CountryMismatch(TranscreateError):
    """Operation paired objects labeled with different countries."""


class SnapshotUnreadable(TranscreateError):
    """Metadata snapshot file could not be opened or parsed."""


# --- datasets ---------------------------------------------------------------


class WrongVoteCount(TranscreateError):
    """Validator vote list does not have exactly three 0/1 entries."""


class ManifestSchemaError(TranscreateError):
    """Manifest line violates the schema; carries line number and field."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix += f"line {line}"
        if field is not None:
            prefix += f"{' ' if prefix else ''}field {field!r}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class MissingImageFile(TranscreateError):
    """Manifest references image files that are absent or corrupted."""

    def __init__(self, paths: list[str]):
        self.paths = list(paths)
        super().__init__("missing or corrupted image files: " + ", ".join(self.paths))


# --- metrics ----------------------------------------------------------------


class InsufficientSupport(TranscreateError):
    """Too few calibration pairs to compute or publish a threshold."""


# --- evaluation -------------------------------------------------------------


class OutOfScale(TranscreateError):
    """Rating value outside the 1..5 Likert scale."""


class TooFewOutputs(TranscreateError):
    """An evaluation instance needs at least two pipeline outputs."""


class UnknownInstance(TranscreateError):
    """Rating refers to an instance id that does not exist."""


class InapplicableQuestion(TranscreateError):
    """Question does not apply to the instance's dataset kind."""
