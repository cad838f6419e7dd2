"""CSV interchange: the one format that carries every geometry kind and all
score/source metadata without loss.

Columns: image,width,height,class,kind,coords,detector_score,verified_score,
source. The coords cell is a semicolon-separated number list read back by
kind (bbox: 4 values, obb: center/size/angle, polygon: flat x,y pairs).
Numbers use shortest exact decimal form, so parsing restores them verbatim.
"""

from __future__ import annotations

import csv
import io
from typing import Dict, List, Optional, Tuple

from ..errors import InputError
from ..geometry import geometry_coords, geometry_from_coords, geometry_kind
from .common import (
    ExportBundle,
    ImportReport,
    ParsedItem,
    check_mode_supported,
    collect_entries,
    fmt_float,
    merge_items,
)

FILE_NAME = "annotations.csv"

COLUMNS = (
    "image",
    "width",
    "height",
    "class",
    "kind",
    "coords",
    "detector_score",
    "verified_score",
    "source",
)

_KINDS = ("bbox", "obb", "polygon")


def export(handle, *, geometry_policy: str, include_pending: bool) -> ExportBundle:
    check_mode_supported(handle, "csv", geometry_policy)
    images, grouped = collect_entries(
        handle, include_pending=include_pending, geometry_policy=geometry_policy
    )
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for record in images:
        for entry in grouped[record.id]:
            writer.writerow(
                [
                    record.name,
                    record.width,
                    record.height,
                    entry.class_name,
                    geometry_kind(entry.geometry),
                    ";".join(fmt_float(v) for v in geometry_coords(entry.geometry)),
                    "" if entry.detector_score is None else fmt_float(entry.detector_score),
                    "" if entry.verified_score is None else fmt_float(entry.verified_score),
                    entry.source,
                ]
            )
    return ExportBundle(format="csv", files={FILE_NAME: buffer.getvalue()})


def _csv_files(files: Dict[str, str]) -> List[str]:
    return [n for n in sorted(files) if n.lower().endswith(".csv")]


def _score(cell: Optional[str]) -> Optional[float]:
    if cell is None or cell == "":
        return None
    return float(cell)


def parse_items(files: Dict[str, str]) -> Tuple[List[ParsedItem], List[Tuple[str, str]]]:
    names = _csv_files(files)
    if not names:
        raise InputError("no CSV file in the provided set")
    items: List[ParsedItem] = []
    skipped: List[Tuple[str, str]] = []
    for name in names:
        reader = csv.DictReader(io.StringIO(files[name]))
        missing = set(COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise InputError(f"{name}: missing columns {sorted(missing)}")
        for line_no, row in enumerate(reader, start=2):
            where = f"{name}:{line_no}"
            kind = row["kind"]
            if kind not in _KINDS:
                skipped.append((where, f"unknown geometry kind {kind!r}"))
                continue
            try:
                coords = [float(v) for v in row["coords"].split(";") if v != ""]
                geometry = geometry_from_coords(kind, coords)
                detector_score = _score(row["detector_score"])
                verified_score = _score(row["verified_score"])
            except (InputError, ValueError) as exc:
                skipped.append((where, str(exc)))
                continue
            if not row["class"].strip():
                skipped.append((where, "empty class name"))
                continue
            items.append(
                ParsedItem(
                    image=row["image"],
                    class_name=row["class"].strip(),
                    geometry=geometry,
                    detector_score=detector_score,
                    verified_score=verified_score,
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
    names = _csv_files(files)
    if not names:
        return ["no CSV file in the provided set"]
    for name in names:
        reader = csv.DictReader(io.StringIO(files[name]))
        missing = set(COLUMNS) - set(reader.fieldnames or ())
        if missing:
            diagnostics.append(f"{name}: missing columns {sorted(missing)}")
            continue
        for line_no, row in enumerate(reader, start=2):
            where = f"{name}:{line_no}"
            if row["kind"] not in _KINDS:
                diagnostics.append(f"{where}: unknown geometry kind {row['kind']!r}")
                continue
            try:
                coords = [float(v) for v in row["coords"].split(";") if v != ""]
                geometry_from_coords(row["kind"], coords)
            except (InputError, ValueError) as exc:
                diagnostics.append(f"{where}: {exc}")
            for column in ("width", "height"):
                try:
                    int(row[column])
                except ValueError:
                    diagnostics.append(f"{where}: non-integer {column}")
    return diagnostics
