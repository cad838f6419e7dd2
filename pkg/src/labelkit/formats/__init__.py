"""Dataset interchange: export, import-merge, and validation for the four
supported serializations (COCO JSON, YOLO TXT+YAML, Pascal VOC XML, CSV)."""

from __future__ import annotations

from typing import Dict, List

from ..errors import InputError
from . import coco, csvfmt, voc, yolo
from .common import ExportBundle, ImportReport, ParsedItem

SUPPORTED_FORMATS = ("coco", "yolo", "voc", "csv")

_MODULES = {"coco": coco, "yolo": yolo, "voc": voc, "csv": csvfmt}


def _module(format_name: str):
    try:
        return _MODULES[format_name]
    except KeyError:
        raise InputError(
            f"unknown format {format_name!r}; supported: {', '.join(SUPPORTED_FORMATS)}"
        ) from None


def export_project(
    handle,
    format_name: str,
    *,
    geometry_policy: str = "as_stored",
    include_pending: bool = False,
) -> ExportBundle:
    """Serialize a project's annotations. Accepted only by default; pending
    drafts come along when include_pending is set."""
    return _module(format_name).export(
        handle, geometry_policy=geometry_policy, include_pending=include_pending
    )


def import_annotations(handle, format_name: str, files: Dict[str, str]) -> ImportReport:
    """Merge external annotation files into a project, additively."""
    return _module(format_name).import_into(handle, files)


def validate_bundle(format_name: str, files: Dict[str, str]) -> List[str]:
    """Structural and semantic diagnostics; never touches a project."""
    return _module(format_name).validate(files)


__all__ = [
    "ExportBundle",
    "ImportReport",
    "ParsedItem",
    "SUPPORTED_FORMATS",
    "export_project",
    "import_annotations",
    "validate_bundle",
]
