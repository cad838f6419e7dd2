"""Inference backends: detection, embeddings, and mask generation.

Everything the annotation pipeline needs from a model is reached through the
small interface in base.py. Two implementations ship: a deterministic mock
built around planted ground truth (for tests and demos) and an HTTP client
for an external inference sidecar.
"""

from .base import (
    Detection,
    Embedding,
    ImageRef,
    InferenceProvider,
    ProviderConfig,
    build_provider,
    normalize_label,
)
from .mock import MockProvider, PlantedObject
from .sidecar import SidecarProvider, inline_name, make_sidecar_app

__all__ = [
    "Detection",
    "Embedding",
    "ImageRef",
    "InferenceProvider",
    "ProviderConfig",
    "MockProvider",
    "PlantedObject",
    "SidecarProvider",
    "build_provider",
    "inline_name",
    "make_sidecar_app",
    "normalize_label",
]
