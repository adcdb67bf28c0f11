/** Pure coordinate math shared by rendering and selection.
 *
 * Pages use top-left-origin units; the canvas shows a page scaled by a
 * single uniform factor with optional margins. Keeping every transform
 * here makes the drag-to-bbox logic unit-testable without a browser.
 */

export interface Rect {
  x0: number
  y0: number
  x1: number
  y1: number
}

export interface Transform {
  scale: number
  offsetX: number
  offsetY: number
}

/** Uniform scale that fits a page into a canvas, centered. */
export function fitTransform(
  pageW: number,
  pageH: number,
  canvasW: number,
  canvasH: number,
): Transform {
  const scale = Math.min(canvasW / pageW, canvasH / pageH)
  return {
    scale,
    offsetX: (canvasW - pageW * scale) / 2,
    offsetY: (canvasH - pageH * scale) / 2,
  }
}

export function pageToCanvas(t: Transform, x: number, y: number): [number, number] {
  return [t.offsetX + x * t.scale, t.offsetY + y * t.scale]
}

export function canvasToPage(t: Transform, x: number, y: number): [number, number] {
  return [(x - t.offsetX) / t.scale, (y - t.offsetY) / t.scale]
}

export function rectPageToCanvas(t: Transform, r: Rect): Rect {
  const [x0, y0] = pageToCanvas(t, r.x0, r.y0)
  const [x1, y1] = pageToCanvas(t, r.x1, r.y1)
  return { x0, y0, x1, y1 }
}

/** Normalize a drag in any direction into x0<=x1, y0<=y1. */
export function normalizeRect(ax: number, ay: number, bx: number, by: number): Rect {
  return {
    x0: Math.min(ax, bx),
    y0: Math.min(ay, by),
    x1: Math.max(ax, bx),
    y1: Math.max(ay, by),
  }
}

/** Clamp a page-space rectangle to the page bounds. */
export function clampRect(r: Rect, pageW: number, pageH: number): Rect {
  const clamp = (v: number, hi: number) => Math.min(Math.max(v, 0), hi)
  return {
    x0: clamp(r.x0, pageW),
    y0: clamp(r.y0, pageH),
    x1: clamp(r.x1, pageW),
    y1: clamp(r.y1, pageH),
  }
}

export function rectArea(r: Rect): number {
  return Math.max(0, r.x1 - r.x0) * Math.max(0, r.y1 - r.y0)
}

export function formatScore(score: number): string {
  return score.toFixed(2)
}
