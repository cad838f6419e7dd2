"""Pascal VOC XML: one file per image, axis-aligned boxes only.

Pixel coordinates are written as integers (rounding moves a border by at
most half a pixel). Anything that is not a plain box must come through the
boxes_only policy; as_stored refuses instead of silently degrading.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Dict, List, Tuple

from ..errors import InputError
from ..geometry import BBox
from .common import (
    ExportBundle,
    ImportReport,
    ParsedItem,
    check_mode_supported,
    collect_entries,
    merge_items,
    stem_of,
)


def _text(parent: ET.Element, tag: str, value) -> None:
    child = ET.SubElement(parent, tag)
    child.text = str(value)


def export(handle, *, geometry_policy: str, include_pending: bool) -> ExportBundle:
    check_mode_supported(handle, "voc", geometry_policy)
    images, grouped = collect_entries(
        handle, include_pending=include_pending, geometry_policy=geometry_policy
    )
    files: Dict[str, str] = {}
    for record in images:
        root = ET.Element("annotation")
        _text(root, "filename", record.name)
        size = ET.SubElement(root, "size")
        _text(size, "width", record.width)
        _text(size, "height", record.height)
        _text(size, "depth", 3)
        for entry in grouped[record.id]:
            obj = ET.SubElement(root, "object")
            _text(obj, "name", entry.class_name)
            _text(obj, "difficult", 0)
            box = ET.SubElement(obj, "bndbox")
            _text(box, "xmin", round(entry.geometry.x1))
            _text(box, "ymin", round(entry.geometry.y1))
            _text(box, "xmax", round(entry.geometry.x2))
            _text(box, "ymax", round(entry.geometry.y2))
        ET.indent(root)
        files[f"{stem_of(record.name)}.xml"] = (
            ET.tostring(root, encoding="unicode") + "\n"
        )
    return ExportBundle(format="voc", files=files)


def _xml_files(files: Dict[str, str]) -> List[str]:
    return [n for n in sorted(files) if n.lower().endswith(".xml")]


def parse_items(files: Dict[str, str]) -> Tuple[List[ParsedItem], List[Tuple[str, str]]]:
    items: List[ParsedItem] = []
    skipped: List[Tuple[str, str]] = []
    names = _xml_files(files)
    if not names:
        raise InputError("no XML files in the provided set")
    for name in names:
        try:
            root = ET.fromstring(files[name])
        except ET.ParseError as exc:
            skipped.append((name, f"invalid XML: {exc}"))
            continue
        filename = root.findtext("filename") or name
        for position, obj in enumerate(root.iter("object")):
            where = f"{name}#object{position}"
            class_name = obj.findtext("name")
            if not class_name:
                skipped.append((where, "missing <name> element"))
                continue
            box = obj.find("bndbox")
            if box is None:
                skipped.append((where, "missing <bndbox> element"))
                continue
            try:
                coords = [
                    float(box.findtext(tag)) for tag in ("xmin", "ymin", "xmax", "ymax")
                ]
            except (TypeError, ValueError):
                skipped.append((where, "malformed <bndbox> coordinates"))
                continue
            try:
                geometry = BBox(*coords)
            except InputError as exc:
                skipped.append((where, str(exc)))
                continue
            items.append(
                ParsedItem(
                    image=filename, class_name=class_name.strip(), geometry=geometry
                )
            )
    return items, skipped


def import_into(handle, files: Dict[str, str]) -> ImportReport:
    items, skipped = parse_items(files)
    report = merge_items(handle, items)
    report.skipped = skipped + report.skipped
    return report


def validate(files: Dict[str, str]) -> List[str]:
    diagnostics: List[str] = []
    names = _xml_files(files)
    if not names:
        return ["no XML files in the provided set"]
    for name in names:
        try:
            root = ET.fromstring(files[name])
        except ET.ParseError as exc:
            diagnostics.append(f"{name}: invalid XML: {exc}")
            continue
        if root.find("size") is None:
            diagnostics.append(f"{name}: missing element <size>")
        for position, obj in enumerate(root.iter("object")):
            where = f"{name}#object{position}"
            if not obj.findtext("name"):
                diagnostics.append(f"{where}: missing element <name>")
            box = obj.find("bndbox")
            if box is None:
                diagnostics.append(f"{where}: missing element <bndbox>")
                continue
            try:
                xmin, ymin, xmax, ymax = (
                    float(box.findtext(tag)) for tag in ("xmin", "ymin", "xmax", "ymax")
                )
            except (TypeError, ValueError):
                diagnostics.append(f"{where}: malformed <bndbox> coordinates")
                continue
            if xmin < 0 or ymin < 0:
                diagnostics.append(f"{where}: negative coordinates")
            if xmax <= xmin or ymax <= ymin:
                diagnostics.append(f"{where}: degenerate box")
    return diagnostics
