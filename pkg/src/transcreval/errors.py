"""Exception types shared across the package."""

from __future__ import annotations


class TranscrevalError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(TranscrevalError):
    """A manifest record or config entry violates the expected schema."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)


class DecodeError(TranscrevalError):
    """Bytes could not be decoded as a raster image."""


class ParseError(TranscrevalError):
    """Model output could not be parsed into the expected structure."""


class MissingField(TranscrevalError):
    """A template placeholder has no value to substitute."""


class DimensionMismatch(TranscrevalError):
    """Two embedding vectors are not comparable (model or dimension differs)."""


class LengthMismatch(TranscrevalError):
    """Paired lists have different lengths."""


class TooFew(TranscrevalError):
    """Fewer data points than the operation requires."""


class ConfigError(TranscrevalError):
    """A run configuration is invalid; raised before any provider call."""


class MissingRatings(TranscrevalError):
    """Segments in the scores file lack the human ratings needed to correlate."""

    def __init__(self, segment_ids):
        self.segment_ids = sorted(segment_ids)
        shown = ", ".join(self.segment_ids[:10])
        more = "" if len(self.segment_ids) <= 10 else f" (+{len(self.segment_ids) - 10} more)"
        super().__init__(f"segments lack human ratings: {shown}{more}")


class ProviderError(TranscrevalError):
    """A provider call failed with a non-retryable error."""

    def __init__(self, message: str, *, status: int | str | None = None):
        self.status = status
        if status is not None:
            message = f"{message} (status={status})"
        super().__init__(message)


class TransientProviderError(ProviderError):
    """Retryable provider failure (rate limit, timeout, 5xx)."""


class AuthError(ProviderError):
    """Credentials rejected by the provider."""


class RateLimitExhausted(ProviderError):
    """All retry attempts were spent on rate-limit or transient failures."""
