"""Exception types for the adapter layer.

Failures are reported per pipeline stage ("t2i", "encoder", "detector",
"depth") so a broken detector checkpoint is distinguishable from a broken
depth one in batch logs.
"""


class AdapterError(Exception):
    """Base class for all adapter errors."""


class ConfigError(AdapterError):
    """An adapter config file or value is invalid."""


class InputError(AdapterError):
    """A user-supplied input (image file, caption) is unusable."""


class StageError(AdapterError):
    """An error attributable to one pipeline stage."""

    def __init__(self, message: str, stage: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class ModelLoadError(StageError):
    """A stage's model id could not be resolved or its weights could not load."""


class InferenceError(StageError):
    """A loaded stage model failed while running on an input."""
