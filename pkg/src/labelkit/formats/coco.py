"""COCO JSON: one annotations.json with images/annotations/categories.

Boxes serialize as [x, y, w, h]; polygons carry a single-ring segmentation
plus their enclosing box. Category ids are contiguous from 1, sorted by
class name, so identical content always produces identical output.
"""

from __future__ import annotations

import json
from typing import Dict, List

from ..errors import InputError, ParseError
from ..geometry import BBox, Polygon, enclosing_bbox, geometry_kind
from .common import (
    ExportBundle,
    ImportReport,
    ParsedItem,
    bbox_from_xywh,
    check_mode_supported,
    class_names,
    collect_entries,
    merge_items,
)

FILE_NAME = "annotations.json"


def export(handle, *, geometry_policy: str, include_pending: bool) -> ExportBundle:
    check_mode_supported(handle, "coco", geometry_policy)
    images, grouped = collect_entries(
        handle, include_pending=include_pending, geometry_policy=geometry_policy
    )
    categories = [
        {"id": i + 1, "name": name} for i, name in enumerate(class_names(handle))
    ]
    cat_ids = {c["name"]: c["id"] for c in categories}

    doc_images: List[dict] = []
    doc_annotations: List[dict] = []
    next_ann_id = 1
    for image_index, record in enumerate(images):
        image_id = image_index + 1
        doc_images.append(
            {
                "id": image_id,
                "file_name": record.name,
                "width": record.width,
                "height": record.height,
            }
        )
        for entry in grouped[record.id]:
            kind = geometry_kind(entry.geometry)
            if kind == "polygon":
                ring = [v for point in entry.geometry.points for v in point]
                box = enclosing_bbox(entry.geometry)
                segmentation = [ring]
            else:
                box = entry.geometry
                segmentation = []
            doc_annotations.append(
                {
                    "id": next_ann_id,
                    "image_id": image_id,
                    "category_id": cat_ids[entry.class_name],
                    "bbox": [box.x1, box.y1, box.width, box.height],
                    "area": box.area,
                    "iscrowd": 0,
                    "segmentation": segmentation,
                }
            )
            next_ann_id += 1

    doc = {
        "images": doc_images,
        "annotations": doc_annotations,
        "categories": categories,
    }
    return ExportBundle(
        format="coco", files={FILE_NAME: json.dumps(doc, indent=2) + "\n"}
    )


def _load(files: Dict[str, str]) -> dict:
    json_files = [n for n in sorted(files) if n.lower().endswith(".json")]
    if not json_files:
        raise InputError("no JSON file in the provided set")
    try:
        doc = json.loads(files[json_files[0]])
    except json.JSONDecodeError as exc:
        raise ParseError(f"{json_files[0]}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{json_files[0]}: expected a JSON object")
    return doc


def parse_items(files: Dict[str, str]) -> tuple[List[ParsedItem], List[tuple[str, str]]]:
    doc = _load(files)
    skipped: List[tuple[str, str]] = []
    image_names = {}
    for entry in doc.get("images", []):
        if isinstance(entry, dict) and "id" in entry and "file_name" in entry:
            image_names[entry["id"]] = str(entry["file_name"])
    category_names = {}
    for entry in doc.get("categories", []):
        if isinstance(entry, dict) and "id" in entry and "name" in entry:
            category_names[entry["id"]] = str(entry["name"])

    items: List[ParsedItem] = []
    for position, entry in enumerate(doc.get("annotations", [])):
        label = f"annotation #{position}"
        if not isinstance(entry, dict):
            skipped.append((label, "not an object"))
            continue
        name = image_names.get(entry.get("image_id"))
        if name is None:
            skipped.append((label, f"unknown image id {entry.get('image_id')!r}"))
            continue
        class_name = category_names.get(entry.get("category_id"))
        if class_name is None:
            skipped.append((label, f"unknown category id {entry.get('category_id')!r}"))
            continue
        segmentation = entry.get("segmentation") or []
        try:
            if segmentation:
                ring = segmentation[0]
                points = list(zip(ring[0::2], ring[1::2]))
                geometry = Polygon(points)
            else:
                x, y, w, h = (float(v) for v in entry["bbox"])
                geometry = bbox_from_xywh(x, y, w, h)
        except (KeyError, TypeError, ValueError, IndexError):
            skipped.append((label, "malformed geometry"))
            continue
        except InputError as exc:
            skipped.append((label, str(exc)))
            continue
        items.append(ParsedItem(image=name, class_name=class_name, geometry=geometry))
    return items, skipped


def import_into(handle, files: Dict[str, str]) -> ImportReport:
    items, skipped = parse_items(files)
    report = merge_items(handle, items)
    report.skipped = skipped + report.skipped
    return report


def validate(files: Dict[str, str]) -> List[str]:
    diagnostics: List[str] = []
    try:
        doc = _load(files)
    except (InputError, ParseError) as exc:
        return [str(exc)]
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            diagnostics.append(f"missing top-level array {key!r}")
        elif not isinstance(doc[key], list):
            diagnostics.append(f"{key!r} is not an array")
    image_ids = set()
    for entry in doc.get("images", []) if isinstance(doc.get("images"), list) else []:
        if not isinstance(entry, dict) or "id" not in entry or "file_name" not in entry:
            diagnostics.append("image entry missing id or file_name")
        else:
            image_ids.add(entry["id"])
    category_ids = set()
    entries = doc.get("categories", []) if isinstance(doc.get("categories"), list) else []
    for entry in entries:
        if not isinstance(entry, dict) or "id" not in entry or "name" not in entry:
            diagnostics.append("category entry missing id or name")
        else:
            category_ids.add(entry["id"])
    entries = doc.get("annotations", []) if isinstance(doc.get("annotations"), list) else []
    for position, entry in enumerate(entries):
        label = f"annotation #{position}"
        if not isinstance(entry, dict):
            diagnostics.append(f"{label}: not an object")
            continue
        if entry.get("image_id") not in image_ids:
            diagnostics.append(f"{label}: references missing image id")
        if entry.get("category_id") not in category_ids:
            diagnostics.append(f"{label}: references missing category id")
        box = entry.get("bbox")
        if not isinstance(box, list) or len(box) != 4:
            diagnostics.append(f"{label}: bbox is not a 4-number list")
            continue
        try:
            x, y, w, h = (float(v) for v in box)
        except (TypeError, ValueError):
            diagnostics.append(f"{label}: bbox holds non-numbers")
            continue
        if x < 0 or y < 0:
            diagnostics.append(f"{label}: negative coordinates")
        if w <= 0 or h <= 0:
            diagnostics.append(f"{label}: degenerate box")
    return diagnostics
