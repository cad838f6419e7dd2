/**
 * Click-to-segment tool: one click asks the server for a mask around the
 * point, and the returned outline lands in the working list as a pending
 * polygon. From there it is a normal annotation: selectable, movable,
 * and saved through the same bulk PUT as hand-drawn geometry.
 */

import { screenToImage, type Point } from "./transform.js";
import type { CanvasState } from "./canvasState.js";
import type { LocalAnnotation, MaskResult } from "./types.js";

export interface MaskApi {
  requestMask(
    imageId: number,
    seed: { point?: [number, number]; box?: [number, number, number, number] },
    minPoints?: number,
  ): Promise<MaskResult>;
}

export type MagicOutcome =
  | { ok: true; annotation: LocalAnnotation }
  | { ok: false; message: string };

export const NO_REGION_MESSAGE = "no region found";

/** Shoelace area; used only to pick the biggest returned outline. */
const ringArea = (coords: number[]): number => {
  let doubled = 0;
  const count = coords.length / 2;
  for (let i = 0; i < count; i += 1) {
    const j = (i + 1) % count;
    doubled +=
      (coords[2 * i] ?? 0) * (coords[2 * j + 1] ?? 0) -
      (coords[2 * j] ?? 0) * (coords[2 * i + 1] ?? 0);
  }
  return Math.abs(doubled) / 2;
};

export class MagicTool {
  private readonly api: MaskApi;
  private readonly state: CanvasState;

  constructor(api: MaskApi, state: CanvasState) {
    this.api = api;
    this.state = state;
  }

  /**
   * One round trip: click in screen coordinates, pending polygon out.
   * An empty mask or a failed request leaves the canvas untouched.
   */
  async clickAt(screenPt: Point, classId: number): Promise<MagicOutcome> {
    const image = this.state.image;
    if (image === null) return { ok: false, message: "no image loaded" };
    const pt = screenToImage(this.state.view, screenPt);
    let result;
    try {
      result = await this.api.requestMask(image.id, { point: [pt.x, pt.y] });
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      return { ok: false, message: message || "mask request failed" };
    }
    const best = [...result.polygons].sort((a, b) => ringArea(b) - ringArea(a))[0];
    if (best === undefined || best.length < 6) {
      return { ok: false, message: NO_REGION_MESSAGE };
    }
    const annotation: LocalAnnotation = {
      localId: this.state.allocateLocalId(),
      serverId: null,
      classId,
      kind: "polygon",
      coords: [...best],
      detectorScore: null,
      verifiedScore: null,
      source: "assisted",
      state: "pending",
    };
    this.state.snapshot();
    this.state.add(annotation);
    this.state.select(annotation.localId);
    return { ok: true, annotation };
  }
}
