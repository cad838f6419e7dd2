"""YOLO text labels: one .txt per image plus a data.yaml names mapping.

Class indices are contiguous from 0 and sorted by class name. All numbers
are normalized to [0, 1] and written with six decimals. Line shapes:

    boxes     "cls xc yc w h"
    oriented  "cls x1 y1 x2 y2 x3 y3 x4 y4"   (corner form)
    polygons  "cls x1 y1 ... xn yn"

A project's mode picks the line shape; plain boxes in an oriented or
polygon project serialize as their 4 corners so each file stays uniform.
"""

from __future__ import annotations

import re
from typing import Dict, List, Tuple

from ..errors import InputError
from ..geometry import BBox, Polygon, geometry_kind
from .common import (
    ExportBundle,
    ImportReport,
    ParsedItem,
    check_mode_supported,
    class_names,
    collect_entries,
    merge_items,
    obb_from_corners,
    stem_of,
)

YAML_NAME = "data.yaml"

_YAML_ENTRY = re.compile(r"^\s+(\d+)\s*:\s*(.+?)\s*$")


def names_yaml(names: List[str]) -> str:
    lines = ["names:"]
    lines.extend(f"  {i}: {name}" for i, name in enumerate(names))
    return "\n".join(lines) + "\n"


def parse_names_yaml(text: str) -> Dict[int, str]:
    """Minimal reader for the mapping this module writes (block style)."""
    mapping: Dict[int, str] = {}
    in_names = False
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if not line[0].isspace():
            in_names = stripped.rstrip() == "names:"
            if in_names:
                continue
            # flow style on the same line: names: {0: cat, 1: dog}
            if stripped.startswith("names:") and "{" in stripped:
                body = stripped.split("{", 1)[1].rsplit("}", 1)[0]
                for chunk in body.split(","):
                    if ":" in chunk:
                        idx, name = chunk.split(":", 1)
                        mapping[int(idx.strip())] = name.strip().strip("'\"")
            continue
        if in_names:
            match = _YAML_ENTRY.match(line)
            if match:
                mapping[int(match.group(1))] = match.group(2).strip("'\"")
    return mapping


def _norm(value: float, extent: float) -> float:
    return value / extent


def _line(index: int, values: List[float]) -> str:
    return " ".join([str(index)] + [f"{v:.6f}" for v in values])


def export(handle, *, geometry_policy: str, include_pending: bool) -> ExportBundle:
    check_mode_supported(handle, "yolo", geometry_policy)
    images, grouped = collect_entries(
        handle, include_pending=include_pending, geometry_policy=geometry_policy
    )
    names = class_names(handle)
    indices = {name: i for i, name in enumerate(names)}
    mode = handle.get_project().mode
    corner_style = geometry_policy == "as_stored" and mode in ("obb", "segmentation")

    files: Dict[str, str] = {YAML_NAME: names_yaml(names)}
    for record in images:
        lines = []
        for entry in grouped[record.id]:
            w, h = float(record.width), float(record.height)
            geometry = entry.geometry
            kind = geometry_kind(geometry)
            if not corner_style:
                cx, cy = geometry.center
                values = [
                    _norm(cx, w),
                    _norm(cy, h),
                    _norm(geometry.width, w),
                    _norm(geometry.height, h),
                ]
            elif kind == "polygon":
                values = [
                    _norm(v, w if axis == 0 else h)
                    for point in geometry.points
                    for axis, v in enumerate(point)
                ]
            else:
                values = [
                    _norm(v, w if axis == 0 else h)
                    for corner in geometry.corners()
                    for axis, v in enumerate(corner)
                ]
            lines.append(_line(indices[entry.class_name], values))
        files[f"labels/{stem_of(record.name)}.txt"] = (
            "\n".join(lines) + "\n" if lines else ""
        )
    return ExportBundle(format="yolo", files=files)


def _split_files(files: Dict[str, str]) -> Tuple[str, List[str]]:
    yaml_files = [n for n in sorted(files) if n.lower().endswith((".yaml", ".yml"))]
    label_files = [n for n in sorted(files) if n.lower().endswith(".txt")]
    return (yaml_files[0] if yaml_files else ""), label_files


def parse_items(
    files: Dict[str, str], *, mode: str
) -> Tuple[List[ParsedItem], List[Tuple[str, str]]]:
    yaml_file, label_files = _split_files(files)
    if not yaml_file:
        raise InputError("no data YAML with a names mapping in the provided set")
    names = parse_names_yaml(files[yaml_file])
    items: List[ParsedItem] = []
    skipped: List[Tuple[str, str]] = []
    for label_file in label_files:
        stem = stem_of(label_file)
        for line_no, raw in enumerate(files[label_file].splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            where = f"{label_file}:{line_no}"
            tokens = line.split()
            try:
                index = int(tokens[0])
                values = [float(t) for t in tokens[1:]]
            except ValueError:
                skipped.append((where, "non-numeric token"))
                continue
            if index not in names:
                skipped.append((where, "unknown class index"))
                continue
            geometry, reason = _decode_geometry(values, mode)
            if geometry is None:
                skipped.append((where, reason))
                continue
            items.append(
                ParsedItem(image=stem, class_name=names[index], geometry=geometry)
            )
    return items, skipped


def _decode_geometry(values: List[float], mode: str):
    """Normalized numbers -> placeholder geometry in [0,1] space; the caller
    scales to pixels once the target image is known."""
    if len(values) == 4:
        cx, cy, w, h = values
        return BBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2), ""
    if len(values) == 8 and mode == "obb":
        return ("corners", list(zip(values[0::2], values[1::2]))), ""
    if len(values) >= 6 and len(values) % 2 == 0 and mode == "segmentation":
        try:
            return Polygon(list(zip(values[0::2], values[1::2]))), ""
        except InputError as exc:
            return None, str(exc)
    return None, f"unexpected value count {len(values)} for {mode} project"


def _scale_geometry(geometry, width: float, height: float):
    if isinstance(geometry, tuple) and geometry[0] == "corners":
        return obb_from_corners(
            [(x * width, y * height) for x, y in geometry[1]]
        )
    if isinstance(geometry, BBox):
        return BBox(
            geometry.x1 * width,
            geometry.y1 * height,
            geometry.x2 * width,
            geometry.y2 * height,
        )
    return Polygon([(x * width, y * height) for x, y in geometry.points])


def import_into(handle, files: Dict[str, str]) -> ImportReport:
    mode = handle.get_project().mode
    items, skipped = parse_items(files, mode=mode)
    sizes = {
        stem_of(record.name): (record.width, record.height)
        for record in handle.list_images()
    }
    scaled: List[ParsedItem] = []
    for item in items:
        size = sizes.get(stem_of(item.image))
        if size is None:
            skipped.append((item.image, "no matching image"))
            continue
        try:
            geometry = _scale_geometry(item.geometry, float(size[0]), float(size[1]))
        except InputError as exc:
            skipped.append((item.image, str(exc)))
            continue
        scaled.append(
            ParsedItem(
                image=item.image, class_name=item.class_name, geometry=geometry
            )
        )
    report = merge_items(handle, scaled)
    report.skipped = skipped + report.skipped
    return report


def validate(files: Dict[str, str]) -> List[str]:
    diagnostics: List[str] = []
    yaml_file, label_files = _split_files(files)
    names: Dict[int, str] = {}
    if not yaml_file:
        diagnostics.append("missing data YAML with the names mapping")
    else:
        names = parse_names_yaml(files[yaml_file])
        if not names:
            diagnostics.append(f"{yaml_file}: no names mapping found")
    if not label_files:
        diagnostics.append("no .txt label files in the provided set")
    for label_file in label_files:
        for line_no, raw in enumerate(files[label_file].splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            where = f"{label_file}:{line_no}"
            tokens = line.split()
            if len(tokens) < 5:
                diagnostics.append(f"{where}: fewer than 5 fields")
                continue
            try:
                index = int(tokens[0])
                values = [float(t) for t in tokens[1:]]
            except ValueError:
                diagnostics.append(f"{where}: non-numeric token")
                continue
            if names and index not in names:
                diagnostics.append(f"{where}: unknown class index")
            bad = [v for v in values if not 0.0 <= v <= 1.0]
            if bad:
                diagnostics.append(f"{where}: value out of [0,1]: {bad[0]}")
    return diagnostics
