/**
 * Screen/image coordinate mapping for the canvas.
 *
 * A view places the image on screen as: screen = image * zoom + pan.
 * Annotations are stored in image pixels, gestures arrive in screen
 * pixels, and the two conversions below are exact inverses of each other
 * up to float rounding.
 */

export interface Point {
  x: number;
  y: number;
}

export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export const MIN_ZOOM = 0.01;
export const MAX_ZOOM = 40;

export const clampZoom = (zoom: number): number => {
  if (Number.isNaN(zoom)) return 1;
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, zoom));
};

export const imageToScreen = (view: ViewTransform, pt: Point): Point => ({
  x: pt.x * view.zoom + view.panX,
  y: pt.y * view.zoom + view.panY,
});

export const screenToImage = (view: ViewTransform, pt: Point): Point => ({
  x: (pt.x - view.panX) / view.zoom,
  y: (pt.y - view.panY) / view.zoom,
});

/** Convert a screen-space displacement to image pixels (pan cancels out). */
export const screenDeltaToImage = (view: ViewTransform, dx: number, dy: number): Point => ({
  x: dx / view.zoom,
  y: dy / view.zoom,
});

/**
 * Change zoom while keeping the given screen point over the same image
 * point, the usual wheel-zoom behavior.
 */
export const zoomAround = (view: ViewTransform, newZoom: number, anchor: Point): ViewTransform => {
  const zoom = clampZoom(newZoom);
  const pivot = screenToImage(view, anchor);
  return {
    zoom,
    panX: anchor.x - pivot.x * zoom,
    panY: anchor.y - pivot.y * zoom,
  };
};

/** Zoom-to-fit with a small margin, centered in the viewport. */
export const fitToView = (
  imageWidth: number,
  imageHeight: number,
  viewWidth: number,
  viewHeight: number,
): ViewTransform => {
  const margin = 0.95;
  const zoom = clampZoom(
    margin * Math.min(viewWidth / Math.max(imageWidth, 1), viewHeight / Math.max(imageHeight, 1)),
  );
  return {
    zoom,
    panX: (viewWidth - imageWidth * zoom) / 2,
    panY: (viewHeight - imageHeight * zoom) / 2,
  };
};
