import { describe, expect, it } from "vitest";

import {
  clampZoom,
  fitToView,
  imageToScreen,
  MAX_ZOOM,
  MIN_ZOOM,
  screenDeltaToImage,
  screenToImage,
  zoomAround,
  type ViewTransform,
} from "../src/transform.js";
import { mulberry32 } from "./fakes.js";

describe("coordinate round trips", () => {
  it("screen to image and back is identity within half a pixel at zoom 0.25, 1, 4 with arbitrary pan", () => {
    const rng = mulberry32(20260822);
    for (const zoom of [0.25, 1, 4]) {
      for (let trial = 0; trial < 200; trial += 1) {
        const view: ViewTransform = {
          zoom,
          panX: (rng() - 0.5) * 10000,
          panY: (rng() - 0.5) * 10000,
        };
        const screen = { x: (rng() - 0.5) * 4000, y: (rng() - 0.5) * 4000 };
        const back = imageToScreen(view, screenToImage(view, screen));
        expect(Math.abs(back.x - screen.x)).toBeLessThanOrEqual(0.5);
        expect(Math.abs(back.y - screen.y)).toBeLessThanOrEqual(0.5);

        const image = { x: rng() * 3000, y: rng() * 3000 };
        const round = screenToImage(view, imageToScreen(view, image));
        expect(Math.abs(round.x - image.x)).toBeLessThanOrEqual(0.5);
        expect(Math.abs(round.y - image.y)).toBeLessThanOrEqual(0.5);
      }
    }
  });

  it("a 100 px screen drag at zoom 2 is 50 image px", () => {
    const view: ViewTransform = { zoom: 2, panX: 37, panY: -12 };
    const delta = screenDeltaToImage(view, 100, 0);
    expect(delta.x).toBe(50);
    expect(delta.y).toBe(0);
  });

  it("pan never affects displacement conversion", () => {
    const rng = mulberry32(7);
    for (let trial = 0; trial < 50; trial += 1) {
      const zoom = 0.25 + rng() * 8;
      const a = screenDeltaToImage({ zoom, panX: 0, panY: 0 }, 60, -40);
      const b = screenDeltaToImage({ zoom, panX: rng() * 999, panY: -rng() * 999 }, 60, -40);
      expect(a).toEqual(b);
    }
  });
});

describe("zoomAround", () => {
  it("keeps the anchor point over the same image location", () => {
    const rng = mulberry32(99);
    for (let trial = 0; trial < 100; trial += 1) {
      const view: ViewTransform = {
        zoom: 0.2 + rng() * 6,
        panX: (rng() - 0.5) * 2000,
        panY: (rng() - 0.5) * 2000,
      };
      const anchor = { x: rng() * 1200, y: rng() * 800 };
      const pivot = screenToImage(view, anchor);
      const zoomed = zoomAround(view, view.zoom * (0.5 + rng() * 2), anchor);
      const after = imageToScreen(zoomed, pivot);
      expect(Math.abs(after.x - anchor.x)).toBeLessThan(1e-6);
      expect(Math.abs(after.y - anchor.y)).toBeLessThan(1e-6);
    }
  });

  it("clamps the new zoom to the positive range", () => {
    const view: ViewTransform = { zoom: 1, panX: 0, panY: 0 };
    expect(zoomAround(view, 0, { x: 10, y: 10 }).zoom).toBe(MIN_ZOOM);
    expect(zoomAround(view, 1e9, { x: 10, y: 10 }).zoom).toBe(MAX_ZOOM);
  });
});

describe("clampZoom", () => {
  it("never returns zero or a negative zoom", () => {
    for (const bad of [0, -1, -1e9, NaN, -Infinity]) {
      expect(clampZoom(bad)).toBeGreaterThan(0);
    }
    expect(clampZoom(Infinity)).toBe(MAX_ZOOM);
  });

  it("passes ordinary values through", () => {
    expect(clampZoom(0.25)).toBe(0.25);
    expect(clampZoom(4)).toBe(4);
  });
});

describe("fitToView", () => {
  it("places the whole image inside the viewport", () => {
    const rng = mulberry32(3);
    for (let trial = 0; trial < 50; trial += 1) {
      const imageW = 20 + rng() * 4000;
      const imageH = 20 + rng() * 4000;
      const viewW = 200 + rng() * 1400;
      const viewH = 200 + rng() * 1000;
      const view = fitToView(imageW, imageH, viewW, viewH);
      const tl = imageToScreen(view, { x: 0, y: 0 });
      const br = imageToScreen(view, { x: imageW, y: imageH });
      expect(view.zoom).toBeGreaterThan(0);
      expect(tl.x).toBeGreaterThanOrEqual(-1e-6);
      expect(tl.y).toBeGreaterThanOrEqual(-1e-6);
      expect(br.x).toBeLessThanOrEqual(viewW + 1e-6);
      expect(br.y).toBeLessThanOrEqual(viewH + 1e-6);
    }
  });
});
