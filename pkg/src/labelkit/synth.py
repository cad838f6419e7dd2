"""Synthetic scene generation with exact ground truth.

Renders simple colored-rectangle scenes to PNG and records where everything
is, so pipeline quality can be measured against known answers. Placement
keeps objects nearly disjoint (pairwise IoU capped) so one detection cannot
legitimately match two planted objects.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from PIL import Image, ImageDraw

from .errors import InputError
from .geometry import BBox, iou
from .providers.mock import PlantedObject

# Pairwise overlap cap between planted objects in one scene.
MAX_PLACEMENT_IOU = 0.1

_PALETTE = (
    (200, 70, 60),
    (60, 140, 200),
    (80, 180, 90),
    (220, 180, 50),
    (160, 80, 190),
    (230, 120, 40),
    (70, 200, 180),
    (150, 150, 150),
)

TruthMap = Dict[str, List[PlantedObject]]


def generate_scenes(
    out_dir,
    *,
    seed: int,
    image_count: int = 20,
    class_names: Sequence[str] = ("cat", "dog", "bird", "car", "tree"),
    image_size: Tuple[int, int] = (160, 120),
    objects_per_image: Tuple[int, int] = (1, 4),
) -> TruthMap:
    """Write image_count PNG scenes plus truth.json into out_dir."""
    if image_count < 1:
        raise InputError("image_count must be at least 1")
    if not class_names:
        raise InputError("need at least one class name")
    lo, hi = objects_per_image
    if not (0 <= lo <= hi):
        raise InputError("objects_per_image must satisfy 0 <= lo <= hi")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    width, height = image_size
    truth: TruthMap = {}

    for index in range(image_count):
        name = f"scene_{index:03d}.png"
        img = Image.new("RGB", (width, height), (24, 28, 33))
        draw = ImageDraw.Draw(img)
        placed: List[PlantedObject] = []
        for _ in range(rng.randint(lo, hi)):
            box = _place_box(rng, width, height, [p.box for p in placed])
            if box is None:
                continue
            class_index = rng.randrange(len(class_names))
            color = _PALETTE[class_index % len(_PALETTE)]
            draw.rectangle((box.x1, box.y1, box.x2 - 1, box.y2 - 1), fill=color)
            placed.append(PlantedObject(label=class_names[class_index], box=box))
        img.save(out / name)
        truth[name] = placed

    _write_truth(out / "truth.json", truth)
    return truth


def _place_box(rng, width, height, existing, attempts: int = 60):
    for _ in range(attempts):
        bw = rng.uniform(0.15, 0.35) * width
        bh = rng.uniform(0.15, 0.35) * height
        x1 = rng.uniform(0, width - bw)
        y1 = rng.uniform(0, height - bh)
        box = BBox(round(x1, 1), round(y1, 1), round(x1 + bw, 1), round(y1 + bh, 1))
        if all(iou(box, other) <= MAX_PLACEMENT_IOU for other in existing):
            return box
    return None


def _write_truth(path: Path, truth: TruthMap) -> None:
    payload = {
        name: [
            {"label": p.label, "box": [p.box.x1, p.box.y1, p.box.x2, p.box.y2]}
            for p in objects
        ]
        for name, objects in truth.items()
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))


def load_truth(path) -> TruthMap:
    """Read a truth.json written by generate_scenes."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot load ground truth from {path}: {exc}") from exc
    truth: TruthMap = {}
    for name, objects in payload.items():
        truth[name] = [
            PlantedObject(label=o["label"], box=BBox(*o["box"])) for o in objects
        ]
    return truth
