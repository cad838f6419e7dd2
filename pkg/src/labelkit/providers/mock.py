"""Deterministic fake inference built around planted ground truth.

The mock is seeded by image name and configuration, so every call is exactly
reproducible: detections are the planted boxes plus configurable near-duplicate,
mislabel, and distractor noise; text embeddings are orthonormal basis vectors
per known class; crop embeddings are the underlying object's basis vector plus
seeded Gaussian noise. That makes pipeline-level behavior analytically
checkable while exercising the same code paths a real backend would.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import InputError
from ..geometry import BBox, iou
from ..postprocess import BinaryMask
from .base import (
    Detection,
    Embedding,
    ImageRef,
    InferenceProvider,
    MaskSeed,
    normalize_label,
)

# Crop-to-object assignment: sufficient overlap with a planted box marks the
# crop as showing that object rather than background.
_CROP_MATCH_IOU = 0.25

_LABEL_DECORATIONS = (
    lambda s: s,
    lambda s: s.title(),
    lambda s: s.upper(),
    lambda s: s + ".",
)


@dataclass(frozen=True)
class PlantedObject:
    label: str
    box: BBox


def _coerce_truth(
    truth: Optional[Mapping[str, Iterable]],
) -> Dict[str, List[PlantedObject]]:
    coerced: Dict[str, List[PlantedObject]] = {}
    for name, objects in (truth or {}).items():
        items = []
        for obj in objects:
            if isinstance(obj, PlantedObject):
                items.append(obj)
            else:
                label, box = obj
                if not isinstance(box, BBox):
                    box = BBox(*box)
                items.append(PlantedObject(label=label, box=box))
        coerced[name] = items
    return coerced


class MockProvider(InferenceProvider):
    """Planted-truth provider; see module docstring for the noise model."""

    def __init__(
        self,
        truth: Optional[Mapping[str, Iterable]] = None,
        *,
        seed: int = 0,
        known_classes: Sequence[str] = (),
        embedding_dim: int = 64,
        embedding_noise: float = 0.02,
        duplicate_range: Tuple[int, int] = (1, 3),
        duplicate_jitter: float = 0.007,
        mislabel_rate: float = 0.0,
        distractor_count: int = 0,
        click_mask_radius: int = 3,
    ) -> None:
        self.truth = _coerce_truth(truth)
        self.seed = int(seed)
        self.embedding_dim = int(embedding_dim)
        self.embedding_noise = float(embedding_noise)
        self.duplicate_range = (int(duplicate_range[0]), int(duplicate_range[1]))
        self.duplicate_jitter = float(duplicate_jitter)
        self.mislabel_rate = float(mislabel_rate)
        self.distractor_count = int(distractor_count)
        self.click_mask_radius = int(click_mask_radius)

        if not (1 <= self.duplicate_range[0] <= self.duplicate_range[1]):
            raise InputError("duplicate_range must satisfy 1 <= lo <= hi")
        if not (0.0 <= self.duplicate_jitter < 0.013):
            # above ~0.0132 two jittered copies can drop to IoU <= 0.9
            raise InputError("duplicate_jitter must be in [0, 0.013)")
        if not (0.0 <= self.mislabel_rate <= 1.0):
            raise InputError("mislabel_rate must be in [0, 1]")
        if self.embedding_noise < 0:
            raise InputError("embedding_noise must be non-negative")
        if self.click_mask_radius < 1:
            raise InputError("click_mask_radius must be at least 1")

        names = {normalize_label(o.label) for objs in self.truth.values() for o in objs}
        names |= {normalize_label(c) for c in known_classes}
        names.discard("")
        self._classes = sorted(names)
        if len(self._classes) > self.embedding_dim - 8:
            raise InputError("embedding_dim too small for the class vocabulary")
        self._class_index = {name: i for i, name in enumerate(self._classes)}

    # -- seeding ------------------------------------------------------------

    def _rng(self, *parts) -> np.random.Generator:
        material = "|".join([str(self.seed)] + [str(p) for p in parts])
        digest = hashlib.sha256(material.encode("utf-8")).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "big"))

    @staticmethod
    def _box_key(box: BBox) -> str:
        return f"{box.x1:.3f},{box.y1:.3f},{box.x2:.3f},{box.y2:.3f}"

    # -- detection ----------------------------------------------------------

    def detect(
        self, image: ImageRef, class_names: Sequence[str], threshold: float
    ) -> List[Detection]:
        if not (0.0 <= threshold <= 1.0):
            raise InputError("detection threshold must be in [0, 1]")
        width, height = image.size()
        wanted = sorted({normalize_label(c) for c in class_names} - {""})
        rng = self._rng("detect", image.name, ",".join(wanted))
        vocabulary = wanted if wanted else self._classes

        detections: List[Detection] = []

        def emit(box: BBox, label: str, score: float) -> None:
            clipped = box.clip(width, height)
            if clipped.area <= 0:
                return
            detections.append(
                Detection(box=clipped, label_text=label, score=float(score))
            )

        for planted in self.truth.get(image.name, []):
            label = normalize_label(planted.label)
            if wanted and label not in wanted:
                continue
            copies = int(rng.integers(self.duplicate_range[0], self.duplicate_range[1] + 1))
            for copy_index in range(copies):
                box = planted.box
                if copy_index > 0:
                    j = self.duplicate_jitter
                    dx = rng.uniform(-j, j, size=4)
                    box = BBox(
                        box.x1 + dx[0] * box.width,
                        box.y1 + dx[1] * box.height,
                        box.x2 + dx[2] * box.width,
                        box.y2 + dx[3] * box.height,
                    )
                reported = label
                others = [c for c in vocabulary if c != label]
                if others and rng.random() < self.mislabel_rate:
                    reported = others[int(rng.integers(len(others)))]
                decorate = _LABEL_DECORATIONS[int(rng.integers(len(_LABEL_DECORATIONS)))]
                score = (
                    rng.uniform(0.70, 0.95) if copy_index == 0 else rng.uniform(0.40, 0.90)
                )
                emit(box, decorate(reported), score)

        for _ in range(self.distractor_count):
            bw = rng.uniform(0.05, 0.18) * width
            bh = rng.uniform(0.05, 0.18) * height
            x1 = rng.uniform(0, max(width - bw, 1e-6))
            y1 = rng.uniform(0, max(height - bh, 1e-6))
            label = vocabulary[int(rng.integers(len(vocabulary)))] if vocabulary else "smudge"
            emit(BBox(x1, y1, x1 + bw, y1 + bh), label, rng.uniform(0.05, 0.35))

        kept = [d for d in detections if d.score >= threshold]
        kept.sort(key=lambda d: -d.score)
        return kept

    # -- embeddings ---------------------------------------------------------

    def _basis(self, index: int) -> Embedding:
        values = [0.0] * self.embedding_dim
        values[index] = 1.0
        return Embedding(tuple(values))

    def embed_texts(self, labels: Sequence[str]) -> List[Embedding]:
        if not labels:
            raise InputError("need at least one label to embed")
        out = []
        for label in labels:
            name = normalize_label(label)
            if not name:
                raise InputError("cannot embed an empty label")
            if name in self._class_index:
                out.append(self._basis(self._class_index[name]))
            else:
                span = self.embedding_dim - len(self._classes)
                digest = hashlib.sha256(name.encode("utf-8")).digest()
                offset = int.from_bytes(digest[:8], "big") % span
                out.append(self._basis(len(self._classes) + offset))
        return out

    def embed_image_crop(self, image: ImageRef, box: BBox) -> Embedding:
        width, height = image.size()
        frame = BBox(0, 0, width, height)
        crop = box.intersect(frame)
        if crop is None or crop.area < 1.0:
            raise InputError("crop does not cover at least one square pixel")
        best_label = None
        best_iou = 0.0
        for planted in self.truth.get(image.name, []):
            overlap = iou(crop, planted.box)
            if overlap > best_iou:
                best_iou = overlap
                best_label = normalize_label(planted.label)
        rng = self._rng("crop", image.name, self._box_key(box))
        if best_label is not None and best_iou >= _CROP_MATCH_IOU:
            values = np.zeros(self.embedding_dim)
            values[self._class_index[best_label]] = 1.0
            if self.embedding_noise > 0:
                values = values + rng.normal(0, self.embedding_noise, self.embedding_dim)
        else:
            # background crop: a stable random direction, far from every basis
            values = rng.normal(0, 1.0, self.embedding_dim)
        return Embedding.normalized(values.tolist())

    # -- masks --------------------------------------------------------------

    def generate_mask(self, image: ImageRef, seed: MaskSeed) -> BinaryMask:
        width, height = image.size()
        grid = np.zeros((height, width), dtype=bool)
        if isinstance(seed, BBox):
            if seed.x1 < 0 or seed.y1 < 0 or seed.x2 > width or seed.y2 > height:
                raise InputError("mask seed box extends outside the image")
            x1, y1 = int(round(seed.x1)), int(round(seed.y1))
            x2, y2 = int(round(seed.x2)), int(round(seed.y2))
            grid[y1:y2, x1:x2] = True
        else:
            x, y = float(seed[0]), float(seed[1])
            if not (0 <= x < width and 0 <= y < height):
                raise InputError("mask seed point lies outside the image")
            cx, cy = int(round(x)), int(round(y))
            r = self.click_mask_radius
            ys, xs = np.ogrid[:height, :width]
            grid = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
        return BinaryMask(grid)
