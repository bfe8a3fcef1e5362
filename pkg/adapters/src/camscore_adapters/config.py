"""Adapter configuration: which model fills each pipeline stage.

A config names four models (text-to-image, global encoder, object
detector, depth estimator) by id, plus the device, the default output
directory, an optional default caption, and the text-to-image sampling
parameters. Sampling parameters live here rather than per call so that
every generated bundle records exactly how its image was sampled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

#: Pipeline stages, in execution order for generate-and-extract.
STAGES = ("t2i", "encoder", "detector", "depth")

_MAX_SEED = 2**63 - 1


@dataclass(frozen=True)
class AdapterConfig:
    """Model ids per stage plus run settings.

    Model ids use a "scheme:variant" form (e.g. "blob:v1"); the scheme
    selects a backend from the registry, the variant is passed to it.
    """

    t2i: str = "painter:v1"
    encoder: str = "pool:v1"
    detector: str = "blob:v1"
    depth: str = "luma:v1"
    device: str = "cpu"
    out_dir: str = "bundles"
    caption: str = ""
    steps: int = 12
    guidance: float = 3.0
    seed: int = 0

    def __post_init__(self):
        for stage in STAGES:
            model_id = getattr(self, stage)
            if not isinstance(model_id, str) or not model_id.strip():
                raise ConfigError(f"{stage} model id must be a nonempty string, got {model_id!r}")
        if not isinstance(self.device, str) or not self.device.strip():
            raise ConfigError(f"device must be a nonempty string, got {self.device!r}")
        if not isinstance(self.out_dir, str) or not self.out_dir:
            raise ConfigError(f"out_dir must be a nonempty string, got {self.out_dir!r}")
        if not isinstance(self.caption, str):
            raise ConfigError(f"caption must be a string, got {type(self.caption).__name__}")
        if not isinstance(self.steps, int) or isinstance(self.steps, bool) or self.steps < 1:
            raise ConfigError(f"steps must be a positive integer, got {self.steps!r}")
        guidance = self.guidance
        if not isinstance(guidance, (int, float)) or isinstance(guidance, bool):
            raise ConfigError(f"guidance must be a number, got {guidance!r}")
        if not (math.isfinite(guidance) and guidance >= 0.0):
            raise ConfigError(f"guidance must be finite and >= 0, got {guidance!r}")
        object.__setattr__(self, "guidance", float(guidance))
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if not (0 <= self.seed <= _MAX_SEED):
            raise ConfigError(f"seed must lie in [0, 2**63), got {self.seed}")

    def pipeline_key(self) -> tuple:
        """The part of the config that identifies a loaded pipeline."""
        return (self.t2i, self.encoder, self.detector, self.depth, self.device)

    def sampling(self) -> dict:
        return {"steps": self.steps, "guidance": self.guidance, "seed": self.seed}


def config_from_dict(doc: dict, where: str = "config") -> AdapterConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: must be a JSON object, got {type(doc).__name__}")
    known = {f.name for f in fields(AdapterConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown} (known: {sorted(known)})")
    for stage in STAGES:
        if stage not in doc:
            raise ConfigError(f"{where}: missing required key {stage!r}")
    return AdapterConfig(**doc)


def load_adapter_config(path) -> AdapterConfig:
    """Read and validate a JSON config file.

    Requires the four model ids; everything else falls back to defaults.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(doc, where=str(path))
