/**
 * Client-side mirror of the server's annotation acceptance rules.
 *
 * The editor validates every mutation with these checks before a bulk PUT
 * goes out, so the UI never sends geometry the server would reject. The
 * rules must stay in lockstep with the service contract: axis boxes keep
 * ordered corners, oriented boxes are canonical (w >= h, theta in
 * [-pi/2, pi/2)), polygons have >= 3 points with no consecutive
 * duplicates, and everything stays inside the image bounds within a
 * 1e-6 tolerance.
 */

import type { AnnotationDraft, GeometryKind, ProjectMode } from "./types.js";

export const BOUNDS_TOLERANCE = 1e-6;

const finite = (values: number[]): boolean => values.every((v) => Number.isFinite(v));

export const allowedKinds = (mode: ProjectMode): GeometryKind[] => {
  switch (mode) {
    case "detection":
      return ["bbox"];
    case "obb":
      return ["obb", "bbox"];
    case "segmentation":
      return ["polygon", "bbox"];
  }
};

const HALF_PI = Math.PI / 2;

/** Map an angle onto [-pi/2, pi/2). */
export const normalizeHalfTurn = (theta: number): number => {
  let t = (theta + HALF_PI) % Math.PI;
  if (t < 0) t += Math.PI;
  return t - HALF_PI;
};

/**
 * Normalize (cx, cy, w, h, theta) to the canonical oriented-box form the
 * server stores: w >= h, theta in [-pi/2, pi/2), and for squares the
 * rotation nearest zero (positive side on an exact tie).
 */
export const canonicalObb = (coords: number[]): number[] => {
  let [cx = 0, cy = 0, w = 0, h = 0, theta = 0] = coords;
  if (w < h) {
    [w, h] = [h, w];
    theta += HALF_PI;
  }
  theta = normalizeHalfTurn(theta);
  if (Math.abs(w - h) <= 1e-9 * Math.max(w, h, 1)) {
    const alt = normalizeHalfTurn(theta + HALF_PI);
    if (Math.abs(alt) < Math.abs(theta) || (Math.abs(alt) === Math.abs(theta) && alt > theta)) {
      theta = alt;
    }
  }
  return [cx, cy, w, h, theta];
};

export interface Bounds {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

/** Axis-aligned envelope of any geometry, in image pixels. */
export const enclosingBounds = (kind: GeometryKind, coords: number[]): Bounds => {
  if (kind === "bbox") {
    const [x1 = 0, y1 = 0, x2 = 0, y2 = 0] = coords;
    return { x1, y1, x2, y2 };
  }
  if (kind === "obb") {
    const [cx = 0, cy = 0, w = 0, h = 0, theta = 0] = coords;
    const c = Math.cos(theta);
    const s = Math.sin(theta);
    const extentX = (Math.abs(w * c) + Math.abs(h * s)) / 2;
    const extentY = (Math.abs(w * s) + Math.abs(h * c)) / 2;
    return { x1: cx - extentX, y1: cy - extentY, x2: cx + extentX, y2: cy + extentY };
  }
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (let i = 0; i + 1 < coords.length; i += 2) {
    const x = coords[i] ?? 0;
    const y = coords[i + 1] ?? 0;
    minX = Math.min(minX, x);
    minY = Math.min(minY, y);
    maxX = Math.max(maxX, x);
    maxY = Math.max(maxY, y);
  }
  return { x1: minX, y1: minY, x2: maxX, y2: maxY };
};

/**
 * Problems with one geometry, empty when the server would accept it.
 * Oriented boxes are expected in canonical form already; pass them
 * through canonicalObb before validating or sending.
 */
export const geometryProblems = (
  kind: GeometryKind,
  coords: number[],
  imageWidth: number,
  imageHeight: number,
): string[] => {
  const problems: string[] = [];
  if (!finite(coords)) {
    problems.push("coordinates must be finite");
    return problems;
  }
  if (kind === "bbox") {
    if (coords.length !== 4) {
      problems.push(`bbox needs 4 coords, got ${coords.length}`);
      return problems;
    }
    const [x1 = 0, y1 = 0, x2 = 0, y2 = 0] = coords;
    if (x1 > x2 || y1 > y2) problems.push("box corners out of order");
  } else if (kind === "obb") {
    if (coords.length !== 5) {
      problems.push(`obb needs 5 coords, got ${coords.length}`);
      return problems;
    }
    const [, , w = 0, h = 0, theta = 0] = coords;
    if (w < 0 || h < 0) problems.push("oriented box sides must be >= 0");
    if (theta < -HALF_PI || theta >= HALF_PI) problems.push("rotation outside [-pi/2, pi/2)");
  } else {
    if (coords.length < 6 || coords.length % 2 !== 0) {
      problems.push(`polygon needs an even number >= 6 of coords, got ${coords.length}`);
      return problems;
    }
    const count = coords.length / 2;
    for (let i = 0; i < count; i += 1) {
      const j = (i + 1) % count;
      if (coords[2 * i] === coords[2 * j] && coords[2 * i + 1] === coords[2 * j + 1]) {
        problems.push(`consecutive duplicate point at index ${i}`);
        break;
      }
    }
  }
  if (problems.length === 0) {
    const box = enclosingBounds(kind, coords);
    if (
      box.x1 < -BOUNDS_TOLERANCE ||
      box.y1 < -BOUNDS_TOLERANCE ||
      box.x2 > imageWidth + BOUNDS_TOLERANCE ||
      box.y2 > imageHeight + BOUNDS_TOLERANCE
    ) {
      problems.push("geometry outside image bounds");
    }
  }
  return problems;
};

const SOURCES = new Set(["auto", "auto_verified", "assisted", "manual"]);
const STATES = new Set(["pending", "accepted"]);

/**
 * Full pre-flight check for one bulk-PUT item: class, kind-for-mode,
 * source, state, then geometry.
 */
export const draftProblems = (
  draft: AnnotationDraft,
  mode: ProjectMode,
  classIds: ReadonlySet<number>,
  imageWidth: number,
  imageHeight: number,
): string[] => {
  if (!classIds.has(draft.class_id)) return [`unknown class id ${draft.class_id}`];
  if (!allowedKinds(mode).includes(draft.kind)) {
    return [`${draft.kind} not allowed in ${mode} mode`];
  }
  if (!SOURCES.has(draft.source)) return [`unknown source ${draft.source}`];
  if (!STATES.has(draft.state)) return [`unknown state ${draft.state}`];
  return geometryProblems(draft.kind, draft.coords, imageWidth, imageHeight);
};
