"""Uncompressed run-length codec for binary masks on the sidecar wire.

Runs are counted in column-major order and always start with the number of
background pixels, so a mask whose first pixel is foreground begins with a
zero count. This matches the uncompressed layout used by common detection
dataset tooling.
"""

from __future__ import annotations

from typing import Dict, List

import numpy as np

from ..errors import ParseError
from ..postprocess import BinaryMask


def encode_rle(mask: BinaryMask) -> Dict[str, object]:
    flat = mask.to_array().flatten(order="F").astype(np.int8)
    boundaries = np.flatnonzero(np.diff(flat)) + 1
    runs = np.diff(np.concatenate(([0], boundaries, [flat.size])))
    counts: List[int] = [int(c) for c in runs]
    if flat[0] == 1:
        counts = [0] + counts
    return {"counts": counts, "size": [mask.height, mask.width]}


def decode_rle(obj: Dict[str, object]) -> BinaryMask:
    if not isinstance(obj, dict) or "counts" not in obj or "size" not in obj:
        raise ParseError("mask payload needs 'counts' and 'size'")
    size = obj["size"]
    counts = obj["counts"]
    if (
        not isinstance(size, (list, tuple))
        or len(size) != 2
        or not all(isinstance(v, int) and v >= 1 for v in size)
    ):
        raise ParseError(f"mask size must be two positive integers, got {size!r}")
    height, width = size
    if not isinstance(counts, (list, tuple)) or not all(
        isinstance(c, int) and c >= 0 for c in counts
    ):
        raise ParseError("mask counts must be non-negative integers")
    total = sum(counts)
    if total != width * height:
        raise ParseError(
            f"mask counts cover {total} pixels, expected {width * height}"
        )
    values = np.zeros(0, dtype=bool)
    fills = []
    value = False
    for c in counts:
        fills.append(np.full(int(c), value, dtype=bool))
        value = not value
    if fills:
        values = np.concatenate(fills)
    grid = values.reshape((height, width), order="F")
    return BinaryMask(grid)
