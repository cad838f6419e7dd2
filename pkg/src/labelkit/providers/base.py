"""Provider interface and shared value types."""

from __future__ import annotations

import io
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from PIL import Image, UnidentifiedImageError

from ..errors import InputError
from ..geometry import BBox
from ..postprocess import BinaryMask

_TRAILING_PUNCTUATION = ".,;:!?"


def normalize_label(text: str) -> str:
    """Canonical label form: lowercased, whitespace collapsed, trailing punctuation dropped."""
    collapsed = " ".join(text.split())
    return collapsed.lower().rstrip(_TRAILING_PUNCTUATION).rstrip()


@dataclass(frozen=True)
class ImageRef:
    """Handle to an image, either on disk or as in-memory bytes."""

    path: Optional[Path] = None
    data: Optional[bytes] = None
    name_hint: Optional[str] = None

    def __post_init__(self) -> None:
        if self.path is None and self.data is None:
            raise InputError("image reference needs a path or raw bytes")
        if self.path is not None:
            object.__setattr__(self, "path", Path(self.path))

    @property
    def name(self) -> str:
        if self.name_hint:
            return self.name_hint
        if self.path is not None:
            return self.path.name
        return "inline"

    def read_bytes(self) -> bytes:
        if self.data is not None:
            return self.data
        try:
            return self.path.read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read image {self.path}: {exc}") from exc

    def open(self) -> Image.Image:
        try:
            if self.data is not None:
                img = Image.open(io.BytesIO(self.data))
            else:
                img = Image.open(self.path)
            img.load()
            return img
        except (UnidentifiedImageError, OSError) as exc:
            raise InputError(f"cannot decode image {self.name}: {exc}") from exc

    def size(self) -> Tuple[int, int]:
        with self.open() as img:
            return img.size


@dataclass(frozen=True)
class Detection:
    """One detector proposal: a box, the raw label text, and a confidence."""

    box: BBox
    label_text: str
    score: float

    def __post_init__(self) -> None:
        if not self.label_text.strip():
            raise InputError("detection label text is empty")
        if not (0.0 <= self.score <= 1.0):
            raise InputError(f"detection score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class Embedding:
    """Unit-norm feature vector; cosine similarity is a plain dot product."""

    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise InputError("embedding is empty")
        norm = math.sqrt(sum(v * v for v in self.values))
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-6:
            raise InputError(f"embedding norm {norm} is not 1 within 1e-6")

    @classmethod
    def normalized(cls, values: Sequence[float]) -> "Embedding":
        norm = math.sqrt(sum(float(v) * float(v) for v in values))
        if norm == 0.0 or not math.isfinite(norm):
            raise InputError("cannot normalize a zero or non-finite vector")
        return cls(tuple(float(v) / norm for v in values))

    def dot(self, other: "Embedding") -> float:
        if len(self.values) != len(other.values):
            raise InputError("embedding dimensions differ")
        return float(sum(a * b for a, b in zip(self.values, other.values)))


@dataclass(frozen=True)
class ProviderConfig:
    """Which backend to use and how to reach it."""

    kind: str = "mock"
    endpoint: Optional[str] = None
    model_id: str = ""
    detection_threshold: float = 0.2

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "sidecar"):
            raise InputError(f"unknown provider kind {self.kind!r}")
        if self.kind == "sidecar" and not self.endpoint:
            raise InputError("sidecar provider requires an endpoint URL")
        if not (0.0 <= self.detection_threshold <= 1.0):
            raise InputError("detection threshold must be in [0, 1]")


ClickPoint = Tuple[float, float]
MaskSeed = Union[BBox, ClickPoint]


class InferenceProvider(ABC):
    """Backend contract for detection, embeddings, and mask generation.

    Implementations must be safe for concurrent calls and deterministic for
    identical inputs and configuration.
    """

    @abstractmethod
    def detect(
        self, image: ImageRef, class_names: Sequence[str], threshold: float
    ) -> List[Detection]:
        """Proposals with score >= threshold, clipped to the image, score-descending."""

    @abstractmethod
    def embed_image_crop(self, image: ImageRef, box: BBox) -> Embedding:
        """Unit-norm embedding of the region under box (intersection >= 1 square px)."""

    @abstractmethod
    def embed_texts(self, labels: Sequence[str]) -> List[Embedding]:
        """One unit-norm embedding per label, order preserved."""

    @abstractmethod
    def generate_mask(self, image: ImageRef, seed: MaskSeed) -> BinaryMask:
        """Full-size binary mask grown from a box or click seed."""


def build_provider(config: ProviderConfig, **mock_options) -> InferenceProvider:
    """Instantiate the provider named by config.

    Extra keyword options are forwarded to the mock constructor (seed, planted
    truth, noise knobs); the sidecar takes everything from the config.
    """
    if config.kind == "mock":
        from .mock import MockProvider

        return MockProvider(**mock_options)
    from .sidecar import SidecarProvider

    return SidecarProvider(config)
