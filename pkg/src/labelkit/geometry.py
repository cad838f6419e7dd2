"""Pure 2D geometry kernel: boxes, oriented boxes, polygons.

Coordinates are real-valued pixels with the origin at the image top-left
and y increasing downward.  All operations are pure functions over
immutable values and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError

__all__ = [
    "BBox",
    "OrientedBox",
    "Polygon",
    "Geometry",
    "iou",
    "union_box",
    "min_area_obb",
    "rdp_simplify",
    "polygon_perimeter",
    "geometry_kind",
    "geometry_coords",
    "geometry_from_coords",
    "enclosing_bbox",
]


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: corners (x1, y1) top-left, (x2, y2) bottom-right."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        vals = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"box coordinates must be finite, got {vals}")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise InputError(f"box corners out of order: {vals}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def clip(self, width: float, height: float) -> "BBox":
        """Clip to the image rectangle [0, width] x [0, height]."""
        x1 = min(max(self.x1, 0.0), width)
        y1 = min(max(self.y1, 0.0), height)
        x2 = min(max(self.x2, 0.0), width)
        y2 = min(max(self.y2, 0.0), height)
        return BBox(x1, y1, x2, y2)

    def intersect(self, other: "BBox") -> "BBox | None":
        x1 = max(self.x1, other.x1)
        y1 = max(self.y1, other.y1)
        x2 = min(self.x2, other.x2)
        y2 = min(self.y2, other.y2)
        if x1 > x2 or y1 > y2:
            return None
        return BBox(x1, y1, x2, y2)

    def corners(self) -> list[tuple[float, float]]:
        return [
            (self.x1, self.y1),
            (self.x2, self.y1),
            (self.x2, self.y2),
            (self.x1, self.y2),
        ]


def _normalize_half_turn(theta: float) -> float:
    """Map an angle onto [-pi/2, pi/2)."""
    half = math.pi / 2.0
    t = math.fmod(theta + half, math.pi)
    if t < 0:
        t += math.pi
    return t - half


@dataclass(frozen=True)
class OrientedBox:
    """Rotated rectangle in canonical form.

    theta is the rotation of the w-axis in radians, normalized to
    [-pi/2, pi/2).  Canonical form additionally requires w >= h; when
    w == h the representation with theta closest to 0 is chosen.
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.w, self.h, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"oriented box values must be finite, got {vals}")
        if self.w < 0 or self.h < 0:
            raise InputError(f"oriented box sides must be >= 0, got w={self.w}, h={self.h}")
        if not (-math.pi / 2.0 <= self.theta < math.pi / 2.0):
            raise InputError(f"theta {self.theta} outside [-pi/2, pi/2)")

    @staticmethod
    def canonical(cx: float, cy: float, w: float, h: float, theta: float) -> "OrientedBox":
        """Build an OrientedBox, normalizing (w, h, theta) to canonical form."""
        if w < h:
            w, h = h, w
            theta += math.pi / 2.0
        theta = _normalize_half_turn(theta)
        # Square: rotation by 90 degrees is a symmetry, pick theta nearest 0
        # (positive on an exact +/- tie).
        if abs(w - h) <= 1e-9 * max(w, h, 1.0):
            alt = _normalize_half_turn(theta + math.pi / 2.0)
            if abs(alt) < abs(theta) or (abs(alt) == abs(theta) and alt > theta):
                theta = alt
        return OrientedBox(cx, cy, w, h, theta)

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> list[tuple[float, float]]:
        """The 4 corners in consistent winding order (starting at -w/2, -h/2)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        out = []
        for dx, dy in ((-self.w / 2, -self.h / 2), (self.w / 2, -self.h / 2),
                       (self.w / 2, self.h / 2), (-self.w / 2, self.h / 2)):
            out.append((self.cx + dx * c - dy * s, self.cy + dx * s + dy * c))
        return out


@dataclass(frozen=True)
class Polygon:
    """Implicitly-closed ring of >= 3 points; last point != first point."""

    points: tuple[tuple[float, float], ...]

    def __init__(self, points):
        pts = tuple((float(x), float(y)) for x, y in points)
        if len(pts) < 3:
            raise InputError(f"polygon needs >= 3 points, got {len(pts)}")
        for x, y in pts:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InputError("polygon coordinates must be finite")
        for a, b in zip(pts, pts[1:] + pts[:1]):
            if a == b:
                raise InputError(f"consecutive duplicate point {a} in polygon")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


Geometry = BBox | OrientedBox | Polygon


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 when the union has zero area."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def union_box(boxes) -> BBox:
    """Component-wise min/max envelope of a nonempty collection of boxes."""
    boxes = list(boxes)
    if not boxes:
        raise InputError("union_box requires at least one box")
    return BBox(
        min(b.x1 for b in boxes),
        min(b.y1 for b in boxes),
        max(b.x2 for b in boxes),
        max(b.y2 for b in boxes),
    )


def _convex_hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Monotone-chain convex hull, counter-clockwise, no repeated endpoint.

    Collinear inputs collapse to the 2 extreme points (or 1 if all equal).
    """
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:  # all points collinear -> extremes only
        return [pts[0], pts[-1]]
    return hull


def min_area_obb(points) -> OrientedBox:
    """Minimum-area rotated rectangle enclosing the points.

    Rotating calipers over the convex hull edges: the minimum-area
    rectangle has one side collinear with a hull edge.  Collinear point
    sets yield a zero-area box aligned with the segment.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise InputError(f"min_area_obb needs >= 3 points, got {len(pts)}")
    hull = _convex_hull(pts)

    if len(hull) == 1:  # all points identical
        return OrientedBox.canonical(hull[0][0], hull[0][1], 0.0, 0.0, 0.0)
    if len(hull) == 2:  # collinear: degenerate segment box
        (x1, y1), (x2, y2) = hull
        length = math.hypot(x2 - x1, y2 - y1)
        theta = math.atan2(y2 - y1, x2 - x1)
        return OrientedBox.canonical((x1 + x2) / 2, (y1 + y2) / 2, length, 0.0, theta)

    best = None  # (area, angle, min_u, max_u, min_v, max_v)
    for (ax, ay), (bx, by) in zip(hull, hull[1:] + hull[:1]):
        angle = math.atan2(by - ay, bx - ax)
        c, s = math.cos(angle), math.sin(angle)
        us = [px * c + py * s for px, py in hull]
        vs = [-px * s + py * c for px, py in hull]
        min_u, max_u = min(us), max(us)
        min_v, max_v = min(vs), max(vs)
        area = (max_u - min_u) * (max_v - min_v)
        if best is None or area < best[0]:
            best = (area, angle, min_u, max_u, min_v, max_v)

    _, angle, min_u, max_u, min_v, max_v = best
    cu = (min_u + max_u) / 2.0
    cv = (min_v + max_v) / 2.0
    c, s = math.cos(angle), math.sin(angle)
    # Rotate the rectangle center back into image coordinates.
    cx = cu * c - cv * s
    cy = cu * s + cv * c
    return OrientedBox.canonical(cx, cy, max_u - min_u, max_v - min_v, angle)


def _point_segment_dist(p, a, b) -> float:
    """Distance from point p to the segment a-b."""
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg_sq
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _rdp_keep(pts, chain: list[int], epsilon: float, keep: set[int]) -> None:
    """Mark indices of `chain` (an open polyline) kept by RDP.

    Removal criterion is deviation <= epsilon, so exactly-collinear
    points are removed even at epsilon = 0.  Iterative to avoid
    recursion limits on long contours.
    """
    stack = [(0, len(chain) - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        a = pts[chain[lo]]
        b = pts[chain[hi]]
        best_d = -1.0
        best_i = -1
        for i in range(lo + 1, hi):
            d = _point_segment_dist(pts[chain[i]], a, b)
            if d > best_d:
                best_d = d
                best_i = i
        if best_d > epsilon:
            keep.add(chain[best_i])
            stack.append((lo, best_i))
            stack.append((best_i, hi))


def rdp_simplify(poly: Polygon, epsilon: float) -> Polygon:
    """Ramer-Douglas-Peucker simplification of a closed polygon.

    The ring is split at two stable anchors (the lexicographically
    smallest vertex and the vertex farthest from it) so that results do
    not depend on where the ring happens to start, and simplifying an
    already-simplified polygon with the same epsilon is a no-op.
    Output never drops below 3 points: if simplification would, the two
    anchors plus the highest-deviation remaining vertex are returned.
    """
    if epsilon < 0:
        raise InputError(f"epsilon must be >= 0, got {epsilon}")
    pts = poly.points
    n = len(pts)
    if n == 3:
        return poly

    a = min(range(n), key=lambda i: pts[i])
    b = max(range(n), key=lambda i: ((pts[i][0] - pts[a][0]) ** 2
                                     + (pts[i][1] - pts[a][1]) ** 2, -i))
    keep: set[int] = {a, b}
    chain1 = [(a + k) % n for k in range(((b - a) % n) + 1)]
    chain2 = [(b + k) % n for k in range(((a - b) % n) + 1)]
    _rdp_keep(pts, chain1, epsilon, keep)
    _rdp_keep(pts, chain2, epsilon, keep)

    if len(keep) < 3:
        rest = [i for i in range(n) if i not in keep]
        third = max(rest, key=lambda i: (_point_segment_dist(pts[i], pts[a], pts[b]), -i))
        keep.add(third)
    return Polygon(pts[i] for i in sorted(keep))


def polygon_perimeter(poly: Polygon) -> float:
    """Total edge length including the closing edge."""
    pts = poly.points
    return sum(
        math.hypot(b[0] - a[0], b[1] - a[1])
        for a, b in zip(pts, pts[1:] + pts[:1])
    )


def enclosing_bbox(geom: Geometry) -> BBox:
    """Tight axis-aligned box around any geometry kind."""
    if isinstance(geom, BBox):
        return geom
    if isinstance(geom, OrientedBox):
        xs, ys = zip(*geom.corners())
        return BBox(min(xs), min(ys), max(xs), max(ys))
    xs, ys = zip(*geom.points)
    return BBox(min(xs), min(ys), max(xs), max(ys))


# Flat-list coordinate codecs shared by the store, the formats, and the API.

def geometry_kind(geom: Geometry) -> str:
    if isinstance(geom, BBox):
        return "bbox"
    if isinstance(geom, OrientedBox):
        return "obb"
    if isinstance(geom, Polygon):
        return "polygon"
    raise InputError(f"unknown geometry type {type(geom).__name__}")


def geometry_coords(geom: Geometry) -> list[float]:
    if isinstance(geom, BBox):
        return [geom.x1, geom.y1, geom.x2, geom.y2]
    if isinstance(geom, OrientedBox):
        return [geom.cx, geom.cy, geom.w, geom.h, geom.theta]
    if isinstance(geom, Polygon):
        return [v for pt in geom.points for v in pt]
    raise InputError(f"unknown geometry type {type(geom).__name__}")


def geometry_from_coords(kind: str, coords) -> Geometry:
    coords = [float(v) for v in coords]
    if kind == "bbox":
        if len(coords) != 4:
            raise InputError(f"bbox needs 4 coords, got {len(coords)}")
        return BBox(*coords)
    if kind == "obb":
        if len(coords) != 5:
            raise InputError(f"obb needs 5 coords, got {len(coords)}")
        return OrientedBox.canonical(*coords)
    if kind == "polygon":
        if len(coords) < 6 or len(coords) % 2:
            raise InputError(f"polygon needs an even number >= 6 of coords, got {len(coords)}")
        return Polygon(zip(coords[0::2], coords[1::2]))
    raise InputError(f"unknown geometry kind {kind!r}")
