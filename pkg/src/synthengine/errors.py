"""Exception types shared across pipeline stages."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine failures."""


class ConfigError(EngineError):
    """Invalid or missing configuration value."""


class ManifestError(EngineError):
    """Manifest-level violation (duplicate ids, task mismatch, bad records)."""


class VersionError(ManifestError):
    """Manifest file carries an unsupported format version."""


class WireFormatError(EngineError):
    """Malformed line-delimited input; carries file context when available."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:" if line is None else f"{path}:{line}: "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class AdapterError(EngineError):
    """External scorer adapter failed (nonzero exit, bad output)."""


class CoverageError(AdapterError):
    """Adapter or generator output does not cover exactly the requested ids."""


class ExportError(EngineError):
    """Dataset export/import violation (missing annotation, bad coordinates)."""


class ReviewError(EngineError):
    """Review queue violation."""


class ReviewNotFound(ReviewError):
    """Verdict submitted for an id that was never enqueued."""


class ReviewConflict(ReviewError):
    """Verdict submitted for an id that is no longer pending."""
