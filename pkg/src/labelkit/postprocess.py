"""Mask cleanup: adaptive hole filling, contour tracing, and box encapsulation.

Turns raw binary segmentation masks into editor-ready geometry. Holes are
closed with a growing-kernel morphological pass, outer contours become
simplified polygons, and polygons can be collapsed to plain or oriented
boxes when a box-only output is wanted.
"""

from __future__ import annotations

from typing import List, Union

import cv2
import numpy as np
from scipy import ndimage

from .errors import InputError
from .geometry import (
    BBox,
    OrientedBox,
    Polygon,
    enclosing_bbox,
    min_area_obb,
    polygon_perimeter,
    rdp_simplify,
)

# Odd square kernels keep the closing centered; one pass per size.
KERNEL_SIDES = (3, 5, 7, 9, 11, 13, 15, 17, 19, 21)

# Fraction of a contour's perimeter used as the simplification tolerance.
SIMPLIFY_PERIMETER_FRACTION = 0.002


class BinaryMask:
    """Immutable row-major boolean grid indexed as bits[y][x]."""

    __slots__ = ("_bits",)

    def __init__(self, bits) -> None:
        arr = np.array(bits, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError("mask must be a 2-D grid with at least one pixel")
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def zeros(cls, width: int, height: int) -> "BinaryMask":
        if width < 1 or height < 1:
            raise InputError("mask dimensions must be at least 1x1")
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return int(self._bits.shape[1])

    @property
    def height(self) -> int:
        return int(self._bits.shape[0])

    def to_array(self) -> np.ndarray:
        """Read-only (height, width) bool view."""
        return self._bits

    def count(self) -> int:
        return int(self._bits.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self._bits.shape == other._bits.shape and bool(
            np.array_equal(self._bits, other._bits)
        )

    def __hash__(self) -> int:
        return hash((self._bits.shape, self._bits.tobytes()))

    def __repr__(self) -> str:
        return f"BinaryMask({self.width}x{self.height}, on={self.count()})"


def _close_once(arr: np.ndarray, side: int) -> np.ndarray:
    # Pad by the kernel radius so dilation is never clipped at the border;
    # with background padding, dilate-then-erode can only add pixels.
    r = side // 2
    structure = np.ones((side, side), dtype=bool)
    padded = np.pad(arr, r, constant_values=False)
    closed = ndimage.binary_erosion(
        ndimage.binary_dilation(padded, structure=structure), structure=structure
    )
    return closed[r:-r, r:-r]


def _hole_free(arr: np.ndarray) -> bool:
    return bool(np.array_equal(ndimage.binary_fill_holes(arr), arr))


def close_mask(mask: BinaryMask) -> BinaryMask:
    """Fill interior holes by repeated closing with a growing square kernel.

    Runs at most one pass per kernel size in KERNEL_SIDES. Stops early once a
    pass changes nothing and no holes remain; an unchanged mask that still has
    holes keeps going, because a larger kernel may close what the current one
    cannot. Foreground is never removed.
    """
    arr = mask.to_array()
    for side in KERNEL_SIDES:
        new = _close_once(arr, side) | arr
        unchanged = bool(np.array_equal(new, arr))
        arr = new
        if unchanged and _hole_free(arr):
            break
    return BinaryMask(arr)


def _trace_contours(arr: np.ndarray) -> List[List[tuple]]:
    contours, _ = cv2.findContours(
        arr.astype(np.uint8), cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE
    )
    rings = []
    for contour in contours:
        pts = [(float(x), float(y)) for x, y in contour.reshape(-1, 2)]
        # contour tracing can emit the same pixel twice in a row on thin parts
        deduped = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
        if len(deduped) > 1 and deduped[0] == deduped[-1]:
            deduped.pop()
        rings.append(deduped)
    return rings


def mask_to_polygons(mask: BinaryMask, min_points: int = 3) -> List[Polygon]:
    """Outer contour of each 8-connected component, simplified.

    Each contour is reduced with a tolerance of SIMPLIFY_PERIMETER_FRACTION
    times its own perimeter; components that cannot yield min_points vertices
    are dropped. Interior holes are not represented (close the mask first).
    """
    if min_points < 3:
        raise InputError("min_points must be at least 3")
    polygons = []
    for ring in _trace_contours(mask.to_array()):
        if len(ring) < 3:
            continue
        poly = Polygon(ring)
        simplified = rdp_simplify(
            poly, SIMPLIFY_PERIMETER_FRACTION * polygon_perimeter(poly)
        )
        if len(simplified) >= min_points:
            polygons.append(simplified)
    return polygons


def encapsulate(poly: Polygon, mode: str) -> Union[BBox, OrientedBox]:
    """Collapse a polygon to its tight axis-aligned or minimum-area oriented box."""
    if mode == "axis_aligned":
        return enclosing_bbox(poly)
    if mode == "oriented":
        return min_area_obb(poly.points)
    raise InputError(f"unknown encapsulation mode {mode!r}")
