"""Shared machinery for dataset serializers: bundle and report types, row
collection, class-index maps, and the additive merge used by every importer."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import PurePosixPath
from typing import Dict, List, Optional, Sequence, Tuple

from ..errors import InputError, UnsupportedExportError
from ..geometry import (
    BBox,
    Geometry,
    enclosing_bbox,
    geometry_coords,
    geometry_kind,
    min_area_obb,
)
from ..records import Annotation, ImageRecord, allowed_geometry_kinds

GEOMETRY_POLICIES = ("as_stored", "boxes_only")

# Geometry kinds each format can serialize without conversion.
FORMAT_KINDS = {
    "coco": frozenset({"bbox", "polygon"}),
    "yolo": frozenset({"bbox", "obb", "polygon"}),
    "voc": frozenset({"bbox"}),
    "csv": frozenset({"bbox", "obb", "polygon"}),
}


@dataclass
class ExportBundle:
    """A finished export: named text files, ready to write or zip."""

    format: str
    files: Dict[str, str] = field(default_factory=dict)


@dataclass
class ImportReport:
    matched_images: int = 0
    created_classes: List[str] = field(default_factory=list)
    imported: int = 0
    skipped: List[Tuple[str, str]] = field(default_factory=list)
    duplicate_warnings: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class ParsedItem:
    """One annotation as read from an external file, before store resolution."""

    image: str
    class_name: str
    geometry: Geometry
    detector_score: Optional[float] = None
    verified_score: Optional[float] = None


@dataclass(frozen=True)
class ExportEntry:
    image: ImageRecord
    class_name: str
    geometry: Geometry
    detector_score: Optional[float]
    verified_score: Optional[float]
    source: str


def check_mode_supported(handle, format_name: str, geometry_policy: str) -> None:
    """Exports gate on the project mode, not on what happens to be stored:
    a pairing that could produce an unserializable kind fails up front."""
    if geometry_policy not in GEOMETRY_POLICIES:
        raise InputError(f"unknown geometry policy {geometry_policy!r}")
    if geometry_policy == "boxes_only":
        return
    mode = handle.get_project().mode
    blocked = set(allowed_geometry_kinds(mode)) - FORMAT_KINDS[format_name]
    if blocked:
        kinds = ", ".join(sorted(blocked))
        raise UnsupportedExportError(
            mode,
            format_name,
            hint=f"{kinds} geometry has no representation here;"
            " use the boxes_only policy or the csv format",
        )


def collect_entries(
    handle, *, include_pending: bool, geometry_policy: str
) -> Tuple[List[ImageRecord], Dict[int, List[ExportEntry]]]:
    """All exportable annotations grouped per image, content-sorted so that
    identical store contents always serialize identically."""
    states = {"accepted", "pending"} if include_pending else {"accepted"}
    names = {c.id: c.name for c in handle.list_classes()}
    images = sorted(handle.list_images(), key=lambda r: r.name)
    per_image = handle.annotations_by_image(states=states)

    grouped: Dict[int, List[ExportEntry]] = {}
    for record in images:
        entries = []
        for ann in per_image.get(record.id, []):
            geometry = ann.geometry
            if geometry_policy == "boxes_only" and ann.kind != "bbox":
                geometry = enclosing_bbox(geometry)
            entries.append(
                ExportEntry(
                    image=record,
                    class_name=names[ann.class_id],
                    geometry=geometry,
                    detector_score=ann.detector_score,
                    verified_score=ann.verified_score,
                    source=ann.source,
                )
            )
        entries.sort(
            key=lambda e: (
                e.class_name,
                geometry_kind(e.geometry),
                tuple(geometry_coords(e.geometry)),
                e.source,
                e.detector_score if e.detector_score is not None else -1.0,
                e.verified_score if e.verified_score is not None else -1.0,
            )
        )
        grouped[record.id] = entries
    return images, grouped


def class_names(handle) -> List[str]:
    return [c.name for c in handle.list_classes()]


def stem_of(name: str) -> str:
    return PurePosixPath(name.replace("\\", "/")).stem.lower()


def build_stem_index(handle) -> Dict[str, List[ImageRecord]]:
    index: Dict[str, List[ImageRecord]] = {}
    for record in sorted(handle.list_images(), key=lambda r: r.name):
        index.setdefault(stem_of(record.name), []).append(record)
    return index


def obb_from_corners(points: Sequence[Tuple[float, float]]):
    """Rebuild an oriented box from its 4 serialized corners."""
    if len(points) != 4:
        raise InputError(f"need exactly 4 corners, got {len(points)}")
    return min_area_obb(points)


def fmt_float(value: float) -> str:
    """Shortest exact decimal form; parsing it returns the same float."""
    return repr(float(value))


def merge_items(handle, items: Sequence[ParsedItem]) -> ImportReport:
    """Attach parsed items to a project: stem-matched, classes auto-created,
    strictly additive. Imported items become manual + accepted per the
    interchange convention."""
    report = ImportReport()
    index = build_stem_index(handle)
    mode_kinds = allowed_geometry_kinds(handle.get_project().mode)

    existing_names = set(class_names(handle))
    wanted = sorted({item.class_name for item in items})
    new_names = [n for n in wanted if n not in existing_names]
    if new_names:
        created = handle.add_classes(new_names)
        report.created_classes = sorted(
            {c.name for c in created} - existing_names
        )
    ids_by_name = {c.name: c.id for c in handle.list_classes()}

    by_image: Dict[int, List[Tuple[ParsedItem, ImageRecord]]] = {}
    order: List[ImageRecord] = []
    for item in items:
        matches = index.get(stem_of(item.image), [])
        if not matches:
            report.skipped.append((item.image, "no matching image"))
            continue
        if len(matches) > 1:
            report.skipped.append((item.image, "ambiguous image stem"))
            continue
        record = matches[0]
        if record.id not in by_image:
            order.append(record)
        by_image.setdefault(record.id, []).append((item, record))

    report.matched_images = len(by_image)
    for record in order:
        pairs = by_image[record.id]
        existing = {
            (a.class_id, a.kind, tuple(geometry_coords(a.geometry)))
            for a in handle.list_annotations(record.id)
        }
        batch: List[Annotation] = []
        batch_items: List[ParsedItem] = []
        for item, _ in pairs:
            kind = geometry_kind(item.geometry)
            if kind not in mode_kinds:
                report.skipped.append(
                    (item.image, f"{kind} geometry not allowed in this project")
                )
                continue
            key = (
                ids_by_name[item.class_name],
                kind,
                tuple(geometry_coords(item.geometry)),
            )
            if key in existing:
                report.duplicate_warnings.append(
                    f"{record.name}: duplicate {item.class_name} {kind}"
                )
            existing.add(key)
            batch.append(
                Annotation(
                    class_id=ids_by_name[item.class_name],
                    geometry=item.geometry,
                    detector_score=item.detector_score,
                    verified_score=item.verified_score,
                    source="manual",
                    state="accepted",
                )
            )
            batch_items.append(item)
        if not batch:
            continue
        result = handle.upsert_annotations(record.id, batch)
        report.imported += result.inserted
        for position, reason in result.rejected:
            report.skipped.append((batch_items[position].image, reason))
    return report


def parse_float(token: str, context: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise InputError(f"{context}: not a number: {token!r}") from None


def bbox_from_xywh(x: float, y: float, w: float, h: float) -> BBox:
    return BBox(x, y, x + w, y + h)
