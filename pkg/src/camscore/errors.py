"""Exception types shared across the engine."""


class CamscoreError(Exception):
    """Base class for all engine errors."""


class BundleError(CamscoreError):
    """A perception-bundle directory is malformed or violates an invariant.

    Carries the offending path and, when known, the field that failed so
    callers can report actionable diagnostics.
    """

    def __init__(self, message: str, path=None, field: str | None = None):
        self.path = str(path) if path is not None else None
        self.field = field
        parts = [message]
        if self.path:
            parts.append(f"file={self.path}")
        if self.field:
            parts.append(f"field={self.field}")
        super().__init__(" | ".join(parts))


class SchemaError(CamscoreError):
    """A judgment or score file violates its schema; message carries the line number."""


class DegenerateDataError(CamscoreError):
    """Statistic undefined on this input (e.g. an axis entirely tied)."""


class ModelError(CamscoreError):
    """An aggregator model file or its application to an input is invalid."""


class TrainingError(ModelError):
    """Aggregator training cannot proceed (too little data, divergence, degenerate targets)."""
