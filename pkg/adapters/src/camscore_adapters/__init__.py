"""camscore-adapters: perception models in, scoring bundles out.

This layer wires a text-to-image model, a global image encoder, an
object detector, and a depth estimator into one pipeline that emits
bundle directories in the exact format the camscore package loads. It
never computes metric values itself.

Built-in backends are small deterministic procedural models (see
backends); production model stacks register their own loaders via
registry.register_backend and become addressable by model id.
"""

__version__ = "0.1.0"

from .backends import BlobDetector, LumaDepth, PainterT2I, PoolEncoder
from .config import AdapterConfig, config_from_dict, load_adapter_config
from .errors import (
    AdapterError,
    ConfigError,
    InferenceError,
    InputError,
    ModelLoadError,
    StageError,
)
from .pipeline import extract_bundle, generate_and_extract, get_pipeline, read_image
from .registry import RawDetection, register_backend, resolve

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "BlobDetector",
    "ConfigError",
    "InferenceError",
    "InputError",
    "LumaDepth",
    "ModelLoadError",
    "PainterT2I",
    "PoolEncoder",
    "RawDetection",
    "StageError",
    "config_from_dict",
    "extract_bundle",
    "generate_and_extract",
    "get_pipeline",
    "load_adapter_config",
    "read_image",
    "register_backend",
    "resolve",
]
