import { describe, expect, it } from "vitest";

import { CanvasState, UNDO_LIMIT } from "../src/canvasState.js";
import type { ImageInfo, LocalAnnotation } from "../src/types.js";

const image: ImageInfo = {
  id: 1,
  name: "scene.png",
  width: 200,
  height: 150,
  status: "unannotated",
  revision: 0,
};

const box = (localId: number, x = 10): LocalAnnotation => ({
  localId,
  serverId: null,
  classId: 1,
  kind: "bbox",
  coords: [x, 10, x + 20, 40],
  detectorScore: null,
  verifiedScore: null,
  source: "manual",
  state: "accepted",
});

describe("zoom invariant", () => {
  it("stays strictly positive no matter what is requested", () => {
    const state = new CanvasState();
    for (const bad of [0, -1, -500, NaN]) {
      state.setZoom(bad);
      expect(state.view.zoom).toBeGreaterThan(0);
    }
    state.setView({ zoom: -2, panX: 5, panY: 5 });
    expect(state.view.zoom).toBeGreaterThan(0);
    expect(state.view.panX).toBe(5);
  });
});

describe("undo stack", () => {
  it("holds at most the documented number of snapshots", () => {
    const state = new CanvasState();
    state.loadImage(image, []);
    for (let i = 0; i < UNDO_LIMIT + 50; i += 1) {
      state.snapshot();
      state.add(box(state.allocateLocalId()));
    }
    expect(state.undoDepth).toBe(UNDO_LIMIT);
    let undone = 0;
    while (state.undo()) undone += 1;
    expect(undone).toBe(UNDO_LIMIT);
    // 150 additions, only the last 100 snapshots kept: 50 remain
    expect(state.annotations.length).toBe(50);
  });

  it("restores the annotation list and is a no-op when empty", () => {
    const state = new CanvasState();
    state.loadImage(image, [box(1), box(2, 50)]);
    state.snapshot();
    state.remove(1);
    expect(state.annotations.length).toBe(1);
    expect(state.undo()).toBe(true);
    expect(state.annotations.map((a) => a.localId)).toEqual([1, 2]);
    expect(state.undo()).toBe(false);
  });

  it("snapshots are deep copies, later edits cannot corrupt them", () => {
    const state = new CanvasState();
    state.loadImage(image, [box(1)]);
    state.snapshot();
    const live = state.find(1);
    if (live === undefined) throw new Error("annotation missing");
    live.coords[0] = 99;
    state.undo();
    expect(state.find(1)?.coords[0]).toBe(10);
  });

  it("loading another image clears the stack", () => {
    const state = new CanvasState();
    state.loadImage(image, [box(1)]);
    state.snapshot();
    state.loadImage({ ...image, id: 2 }, []);
    expect(state.undoDepth).toBe(0);
  });
});

describe("selection validity", () => {
  it("only existing annotations can be selected", () => {
    const state = new CanvasState();
    state.loadImage(image, [box(1)]);
    expect(state.select(42)).toBe(false);
    expect(state.selectedId).toBeNull();
    expect(state.select(1)).toBe(true);
    expect(state.selected?.localId).toBe(1);
  });

  it("removing the selected annotation clears the selection", () => {
    const state = new CanvasState();
    state.loadImage(image, [box(1), box(2, 60)]);
    state.select(2);
    state.remove(2);
    expect(state.selectedId).toBeNull();
    expect(state.selected).toBeNull();
  });

  it("undo drops a selection whose annotation no longer exists", () => {
    const state = new CanvasState();
    state.loadImage(image, [box(1)]);
    state.snapshot();
    state.add(box(2, 60));
    state.select(2);
    state.undo();
    expect(state.selectedId).toBeNull();
    expect(state.annotations.length).toBe(1);
  });

  it("replaceAll keeps the selection only while it stays valid", () => {
    const state = new CanvasState();
    state.loadImage(image, [box(1), box(2, 60)]);
    state.select(2);
    state.replaceAll([box(2, 61)], 1);
    expect(state.selectedId).toBe(2);
    expect(state.revision).toBe(1);
    state.replaceAll([box(7)], 2);
    expect(state.selectedId).toBeNull();
  });
});
