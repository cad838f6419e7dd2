"""Domain records shared across the pipeline, persistence, and formats.

These are plain values: identity fields are optional so the same types serve
both unsaved drafts (pipeline output, parsed imports) and persisted rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple, Union

from .errors import InputError
from .geometry import BBox, OrientedBox, Polygon, enclosing_bbox, geometry_kind

if TYPE_CHECKING:
    from .preannotator import PipelineSettings

PROJECT_MODES = ("detection", "obb", "segmentation")
IMAGE_STATUSES = ("unannotated", "pending_review", "annotated", "failed")
ANNOTATION_SOURCES = ("auto", "auto_verified", "assisted", "manual")
ANNOTATION_STATES = ("pending", "accepted")

Geometry = Union[BBox, OrientedBox, Polygon]


def allowed_geometry_kinds(mode: str) -> Tuple[str, ...]:
    """Geometry kinds a project mode accepts; plain boxes are always legal
    except in detection mode, which accepts nothing else."""
    if mode == "detection":
        return ("bbox",)
    if mode == "obb":
        return ("obb", "bbox")
    if mode == "segmentation":
        return ("polygon", "bbox")
    raise InputError(f"unknown project mode {mode!r}")


def geometry_within(geom: Geometry, width: float, height: float, tolerance: float = 1e-6) -> bool:
    box = enclosing_bbox(geom)
    return (
        box.x1 >= -tolerance
        and box.y1 >= -tolerance
        and box.x2 <= width + tolerance
        and box.y2 <= height + tolerance
    )


@dataclass(frozen=True)
class Project:
    id: Optional[int]
    name: str
    mode: str
    settings: "PipelineSettings"
    created_at: str = ""

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise InputError("project name is empty")
        if self.mode not in PROJECT_MODES:
            raise InputError(f"unknown project mode {self.mode!r}")


@dataclass(frozen=True)
class LabelClass:
    id: Optional[int]
    project_id: Optional[int]
    name: str
    display_color: str = "#888888"

    def __post_init__(self) -> None:
        if not self.name:
            raise InputError("class name is empty after normalization")


@dataclass(frozen=True)
class ImageRecord:
    id: Optional[int]
    project_id: Optional[int]
    path: str
    width: int
    height: int
    status: str = "unannotated"

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InputError("image dimensions must be at least 1 pixel")
        if self.status not in IMAGE_STATUSES:
            raise InputError(f"unknown image status {self.status!r}")

    @property
    def name(self) -> str:
        return self.path.replace("\\", "/").rsplit("/", 1)[-1]


@dataclass(frozen=True)
class Annotation:
    class_id: int
    geometry: Geometry
    id: Optional[int] = None
    image_id: Optional[int] = None
    detector_score: Optional[float] = None
    verified_score: Optional[float] = None
    source: str = "manual"
    state: str = "accepted"

    def __post_init__(self) -> None:
        for score in (self.detector_score, self.verified_score):
            if score is not None and not (0.0 <= score <= 1.0):
                raise InputError(f"annotation score {score} outside [0, 1]")
        if self.source not in ANNOTATION_SOURCES:
            raise InputError(f"unknown annotation source {self.source!r}")
        if self.state not in ANNOTATION_STATES:
            raise InputError(f"unknown annotation state {self.state!r}")

    @property
    def kind(self) -> str:
        return geometry_kind(self.geometry)

    @property
    def confidence(self) -> Optional[float]:
        """Best available score: verification probability, else detector score."""
        if self.verified_score is not None:
            return self.verified_score
        return self.detector_score
