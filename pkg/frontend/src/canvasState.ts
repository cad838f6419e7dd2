/**
 * Canvas working state: the loaded image, view transform, active tool,
 * the annotation list being edited, selection, and a bounded undo stack.
 *
 * Invariants kept here rather than scattered through the UI code:
 *  - zoom stays strictly positive (clamped, never zero or negative)
 *  - the undo stack holds at most UNDO_LIMIT snapshots, oldest dropped
 *  - the selection always references an annotation that exists
 */

import { clampZoom, type ViewTransform } from "./transform.js";
import type { ImageInfo, LocalAnnotation, ToolName } from "./types.js";

export const UNDO_LIMIT = 100;

export interface Snapshot {
  annotations: LocalAnnotation[];
  selectedId: number | null;
}

const copyAnnotation = (ann: LocalAnnotation): LocalAnnotation => ({
  ...ann,
  coords: [...ann.coords],
});

export class CanvasState {
  image: ImageInfo | null = null;
  revision = 0;
  view: ViewTransform = { zoom: 1, panX: 0, panY: 0 };
  tool: ToolName = "select";
  annotations: LocalAnnotation[] = [];
  selectedId: number | null = null;

  private undoStack: Snapshot[] = [];
  private nextLocalId = 1;

  loadImage(image: ImageInfo, annotations: LocalAnnotation[]): void {
    this.image = image;
    this.revision = image.revision;
    this.annotations = annotations.map(copyAnnotation);
    this.selectedId = null;
    this.undoStack = [];
    const maxId = Math.max(0, ...annotations.map((a) => a.localId));
    this.nextLocalId = maxId + 1;
  }

  allocateLocalId(): number {
    const id = this.nextLocalId;
    this.nextLocalId += 1;
    return id;
  }

  setTool(tool: ToolName): void {
    this.tool = tool;
  }

  setZoom(zoom: number): void {
    this.view = { ...this.view, zoom: clampZoom(zoom) };
  }

  panBy(dx: number, dy: number): void {
    this.view = { ...this.view, panX: this.view.panX + dx, panY: this.view.panY + dy };
  }

  setView(view: ViewTransform): void {
    this.view = { ...view, zoom: clampZoom(view.zoom) };
  }

  find(localId: number): LocalAnnotation | undefined {
    return this.annotations.find((a) => a.localId === localId);
  }

  get selected(): LocalAnnotation | null {
    if (this.selectedId === null) return null;
    return this.find(this.selectedId) ?? null;
  }

  /** Select an existing annotation; unknown ids leave selection unchanged. */
  select(localId: number | null): boolean {
    if (localId === null) {
      this.selectedId = null;
      return true;
    }
    if (this.find(localId) === undefined) return false;
    this.selectedId = localId;
    return true;
  }

  /** Push the current annotations onto the undo stack, oldest-out at the cap. */
  snapshot(): void {
    this.undoStack.push({
      annotations: this.annotations.map(copyAnnotation),
      selectedId: this.selectedId,
    });
    if (this.undoStack.length > UNDO_LIMIT) this.undoStack.shift();
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  undo(): boolean {
    const prior = this.undoStack.pop();
    if (prior === undefined) return false;
    this.annotations = prior.annotations;
    this.selectedId =
      prior.selectedId !== null && this.find(prior.selectedId) !== undefined
        ? prior.selectedId
        : null;
    return true;
  }

  add(ann: LocalAnnotation): void {
    this.annotations.push(copyAnnotation(ann));
  }

  remove(localId: number): boolean {
    const index = this.annotations.findIndex((a) => a.localId === localId);
    if (index < 0) return false;
    this.annotations.splice(index, 1);
    if (this.selectedId === localId) this.selectedId = null;
    return true;
  }

  /** Replace the whole list after a server acknowledgement. */
  replaceAll(annotations: LocalAnnotation[], revision: number): void {
    this.annotations = annotations.map(copyAnnotation);
    this.revision = revision;
    if (this.selectedId !== null && this.find(this.selectedId) === undefined) {
      this.selectedId = null;
    }
  }
}
