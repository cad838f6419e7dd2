/**
 * Gesture-level editing on top of CanvasState, and the save path that
 * persists the working list with one bulk PUT.
 *
 * All gestures arrive in screen pixels and are converted to image pixels
 * through the current view transform before touching geometry. Every
 * draft is validated with the client-side mirror of the server rules, so
 * an invalid edit produces a local message instead of a doomed request.
 * A 422 reply still rolls the list back to the last acknowledged state;
 * a 409 reply surfaces as a conflict so the app can offer a refetch.
 */

import type { ApiClient } from "./api.js";
import { ApiError, detailText } from "./api.js";
import { CanvasState } from "./canvasState.js";
import { screenDeltaToImage, screenToImage, type Point } from "./transform.js";
import {
  canonicalObb,
  draftProblems,
  enclosingBounds,
  geometryProblems,
} from "./validate.js";
import type {
  AnnotationsPayload,
  ImageInfo,
  LocalAnnotation,
  ProjectMode,
} from "./types.js";
import { fromRecord, toDraft } from "./types.js";

/** Clicking this close (screen px) to the first vertex closes a polygon. */
export const POLYGON_CLOSE_RADIUS_PX = 8;
/** A committed rectangle must span at least this many image pixels. */
export const MIN_BOX_SIZE_PX = 1;
/** Copies land this far from the original, in image pixels, both axes. */
export const DUPLICATE_OFFSET_PX = 10;

export interface EditorOptions {
  mode: ProjectMode;
  classIds: ReadonlySet<number>;
}

export type SaveResult =
  | { ok: true; image: ImageInfo; payload: AnnotationsPayload }
  | { ok: false; kind: "invalid" | "rejected" | "conflict" | "error"; message: string };

interface RectangleGesture {
  start: Point;
  current: Point;
}

export class AnnotationEditor {
  readonly state: CanvasState;
  private readonly api: Pick<ApiClient, "putAnnotations">;
  private readonly options: EditorOptions;

  private rectangle: RectangleGesture | null = null;
  private polygonVertices: Point[] = [];
  private acknowledged: { annotations: LocalAnnotation[]; revision: number } | null = null;

  constructor(state: CanvasState, api: Pick<ApiClient, "putAnnotations">, options: EditorOptions) {
    this.state = state;
    this.api = api;
    this.options = options;
  }

  /** Record the freshly loaded server payload as the rollback target. */
  markAcknowledged(): void {
    this.acknowledged = {
      annotations: this.state.annotations.map((a) => ({ ...a, coords: [...a.coords] })),
      revision: this.state.revision,
    };
  }

  private get imageSize(): { width: number; height: number } {
    const image = this.state.image;
    return { width: image?.width ?? 0, height: image?.height ?? 0 };
  }

  // -- rectangle and oriented-box drawing ----------------------------------

  beginRectangle(screenPt: Point): void {
    const start = screenToImage(this.state.view, screenPt);
    this.rectangle = { start, current: start };
  }

  dragRectangle(screenPt: Point): void {
    if (this.rectangle === null) return;
    this.rectangle.current = screenToImage(this.state.view, screenPt);
  }

  /**
   * Finish the drag. In obb mode the new shape is an axis-aligned
   * oriented box (theta 0) so the rotation handle can take it from there.
   */
  commitRectangle(classId: number): LocalAnnotation | null {
    if (this.rectangle === null) return null;
    const { start, current } = this.rectangle;
    this.rectangle = null;
    const { width, height } = this.imageSize;
    const x1 = clamp(Math.min(start.x, current.x), 0, width);
    const x2 = clamp(Math.max(start.x, current.x), 0, width);
    const y1 = clamp(Math.min(start.y, current.y), 0, height);
    const y2 = clamp(Math.max(start.y, current.y), 0, height);
    if (x2 - x1 < MIN_BOX_SIZE_PX || y2 - y1 < MIN_BOX_SIZE_PX) return null;
    const asObb = this.state.tool === "obb";
    const ann: LocalAnnotation = {
      localId: this.state.allocateLocalId(),
      serverId: null,
      classId,
      kind: asObb ? "obb" : "bbox",
      coords: asObb
        ? canonicalObb([(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1, 0])
        : [x1, y1, x2, y2],
      detectorScore: null,
      verifiedScore: null,
      source: "manual",
      state: "accepted",
    };
    this.state.snapshot();
    this.state.add(ann);
    this.state.select(ann.localId);
    return this.state.selected;
  }

  // -- polygon drawing -----------------------------------------------------

  get polygonInProgress(): readonly Point[] {
    return this.polygonVertices;
  }

  startPolygon(): void {
    this.polygonVertices = [];
  }

  /**
   * Add one vertex; a click within POLYGON_CLOSE_RADIUS_PX of the first
   * vertex (screen distance) closes the ring instead.
   */
  addPolygonVertex(screenPt: Point, classId: number): "added" | "closed" | "ignored" {
    const first = this.polygonVertices[0];
    if (first !== undefined && this.polygonVertices.length >= 3) {
      const firstScreen = {
        x: first.x * this.state.view.zoom + this.state.view.panX,
        y: first.y * this.state.view.zoom + this.state.view.panY,
      };
      const dist = Math.hypot(screenPt.x - firstScreen.x, screenPt.y - firstScreen.y);
      if (dist <= POLYGON_CLOSE_RADIUS_PX) {
        return this.closePolygon(classId) !== null ? "closed" : "ignored";
      }
    }
    const { width, height } = this.imageSize;
    const pt = screenToImage(this.state.view, screenPt);
    const vertex = { x: clamp(pt.x, 0, width), y: clamp(pt.y, 0, height) };
    const last = this.polygonVertices[this.polygonVertices.length - 1];
    if (last !== undefined && last.x === vertex.x && last.y === vertex.y) return "ignored";
    this.polygonVertices.push(vertex);
    return "added";
  }

  closePolygon(classId: number): LocalAnnotation | null {
    if (this.polygonVertices.length < 3) return null;
    const vertices = [...this.polygonVertices];
    const last = vertices[vertices.length - 1];
    const first = vertices[0];
    if (last !== undefined && first !== undefined && last.x === first.x && last.y === first.y) {
      vertices.pop();
    }
    this.polygonVertices = [];
    if (vertices.length < 3) return null;
    const coords = vertices.flatMap((v) => [v.x, v.y]);
    const { width, height } = this.imageSize;
    if (geometryProblems("polygon", coords, width, height).length > 0) return null;
    const ann: LocalAnnotation = {
      localId: this.state.allocateLocalId(),
      serverId: null,
      classId,
      kind: "polygon",
      coords,
      detectorScore: null,
      verifiedScore: null,
      source: "manual",
      state: "accepted",
    };
    this.state.snapshot();
    this.state.add(ann);
    this.state.select(ann.localId);
    return this.state.selected;
  }

  cancelPolygon(): void {
    this.polygonVertices = [];
  }

  // -- transforms on the selection -----------------------------------------

  /** Take one undo snapshot before a drag-style gesture begins. */
  beginTransform(): void {
    this.state.snapshot();
  }

  /** Shift the selected geometry by a screen-space delta, kept in bounds. */
  moveSelected(screenDx: number, screenDy: number): boolean {
    const ann = this.state.selected;
    if (ann === null) return false;
    const delta = screenDeltaToImage(this.state.view, screenDx, screenDy);
    const { width, height } = this.imageSize;
    const box = enclosingBounds(ann.kind, ann.coords);
    const dx = clamp(delta.x, -box.x1, width - box.x2);
    const dy = clamp(delta.y, -box.y1, height - box.y2);
    if (ann.kind === "bbox") {
      const [x1 = 0, y1 = 0, x2 = 0, y2 = 0] = ann.coords;
      ann.coords = [x1 + dx, y1 + dy, x2 + dx, y2 + dy];
    } else if (ann.kind === "obb") {
      const [cx = 0, cy = 0, w = 0, h = 0, theta = 0] = ann.coords;
      ann.coords = [cx + dx, cy + dy, w, h, theta];
    } else {
      ann.coords = ann.coords.map((v, i) => (i % 2 === 0 ? v + dx : v + dy));
    }
    return true;
  }

  /** Drag one corner of the selected axis box to a new screen position. */
  resizeSelectedCorner(corner: "nw" | "ne" | "sw" | "se", screenPt: Point): boolean {
    const ann = this.state.selected;
    if (ann === null || ann.kind !== "bbox") return false;
    const { width, height } = this.imageSize;
    const pt = screenToImage(this.state.view, screenPt);
    const x = clamp(pt.x, 0, width);
    const y = clamp(pt.y, 0, height);
    let [x1 = 0, y1 = 0, x2 = 0, y2 = 0] = ann.coords;
    if (corner === "nw" || corner === "sw") x1 = x;
    else x2 = x;
    if (corner === "nw" || corner === "ne") y1 = y;
    else y2 = y;
    ann.coords = [Math.min(x1, x2), Math.min(y1, y2), Math.max(x1, x2), Math.max(y1, y2)];
    return true;
  }

  /**
   * Rotation handle for oriented boxes: adds to theta and re-canonicalizes,
   * leaving center and side lengths alone.
   */
  rotateSelected(deltaTheta: number): boolean {
    const ann = this.state.selected;
    if (ann === null || ann.kind !== "obb") return false;
    const [cx = 0, cy = 0, w = 0, h = 0, theta = 0] = ann.coords;
    const rotated = canonicalObb([cx, cy, w, h, theta + deltaTheta]);
    const { width, height } = this.imageSize;
    if (geometryProblems("obb", rotated, width, height).length > 0) return false;
    ann.coords = rotated;
    return true;
  }

  // -- discrete actions ----------------------------------------------------

  deleteSelected(): boolean {
    const ann = this.state.selected;
    if (ann === null) return false;
    this.state.snapshot();
    return this.state.remove(ann.localId);
  }

  /**
   * Copy the selection, offset exactly DUPLICATE_OFFSET_PX image px on
   * both axes. The offset is fixed, so a copy that would land outside
   * the image is refused instead of squeezed in.
   */
  duplicateSelected(): LocalAnnotation | null {
    const ann = this.state.selected;
    if (ann === null || this.state.image === null) return null;
    const { width, height } = this.imageSize;
    const d = DUPLICATE_OFFSET_PX;
    let coords: number[];
    if (ann.kind === "bbox") {
      const [x1 = 0, y1 = 0, x2 = 0, y2 = 0] = ann.coords;
      coords = [x1 + d, y1 + d, x2 + d, y2 + d];
    } else if (ann.kind === "obb") {
      const [cx = 0, cy = 0, w = 0, h = 0, theta = 0] = ann.coords;
      coords = [cx + d, cy + d, w, h, theta];
    } else {
      coords = ann.coords.map((v) => v + d);
    }
    if (geometryProblems(ann.kind, coords, width, height).length > 0) return null;
    const copy: LocalAnnotation = {
      ...ann,
      localId: this.state.allocateLocalId(),
      serverId: null,
      coords,
    };
    this.state.snapshot();
    this.state.add(copy);
    this.state.select(copy.localId);
    return this.state.selected;
  }

  undo(): boolean {
    return this.state.undo();
  }

  // -- persistence ---------------------------------------------------------

  /**
   * Persist the working list. The whole list goes in one PUT guarded by
   * the image revision; the acknowledged reply replaces local items so
   * server ids line up (insertion order is preserved server-side).
   */
  async save(): Promise<SaveResult> {
    const image = this.state.image;
    if (image === null) return { ok: false, kind: "error", message: "no image loaded" };
    const working = this.state.annotations;
    const drafts = working.map((ann) =>
      toDraft(ann.kind === "obb" ? { ...ann, coords: canonicalObb(ann.coords) } : ann),
    );
    for (const [index, draft] of drafts.entries()) {
      const problems = draftProblems(
        draft,
        this.options.mode,
        this.options.classIds,
        image.width,
        image.height,
      );
      if (problems.length > 0) {
        return {
          ok: false,
          kind: "invalid",
          message: `annotation ${index + 1}: ${problems.join("; ")}`,
        };
      }
    }
    let payload: AnnotationsPayload;
    try {
      payload = await this.api.putAnnotations(image.id, this.state.revision, drafts);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        return {
          ok: false,
          kind: "conflict",
          message: "annotations changed on the server, reload this image",
        };
      }
      if (err instanceof ApiError && err.status === 422) {
        this.rollback();
        return { ok: false, kind: "rejected", message: detailText(err.detail) || err.message };
      }
      return { ok: false, kind: "error", message: err instanceof Error ? err.message : String(err) };
    }
    const selectedIndex = working.findIndex((a) => a.localId === this.state.selectedId);
    const replacement = payload.items.map((record, index) => {
      const prior = working[index];
      return fromRecord(record, prior !== undefined ? prior.localId : this.state.allocateLocalId());
    });
    this.state.replaceAll(replacement, payload.image.revision);
    this.state.image = payload.image;
    if (selectedIndex >= 0 && selectedIndex < replacement.length) {
      const kept = replacement[selectedIndex];
      if (kept !== undefined) this.state.select(kept.localId);
    }
    this.markAcknowledged();
    return { ok: true, image: payload.image, payload };
  }

  /** Drop local edits back to the last server-acknowledged list. */
  rollback(): void {
    if (this.acknowledged === null) return;
    this.state.replaceAll(
      this.acknowledged.annotations.map((a) => ({ ...a, coords: [...a.coords] })),
      this.acknowledged.revision,
    );
  }
}

const clamp = (v: number, lo: number, hi: number): number =>
  Math.min(hi, Math.max(lo, v));
