import { describe, expect, it } from 'vitest'

import {
  canvasToPage,
  clampRect,
  fitTransform,
  formatScore,
  normalizeRect,
  pageToCanvas,
  rectArea,
  rectPageToCanvas,
} from '../src/geometry'

describe('fitTransform', () => {
  it('scales a tall page to the canvas height and centers horizontally', () => {
    // Page 100x400 into canvas 800x800: scale = min(8, 2) = 2, the scaled
    // page is 200 wide, so it sits at x offset (800-200)/2 = 300.
    const t = fitTransform(100, 400, 800, 800)
    expect(t.scale).toBe(2)
    expect(t.offsetX).toBe(300)
    expect(t.offsetY).toBe(0)
  })

  it('scales a wide page to the canvas width', () => {
    const t = fitTransform(400, 100, 800, 800)
    expect(t.scale).toBe(2)
    expect(t.offsetX).toBe(0)
    expect(t.offsetY).toBe(300)
  })
})

describe('coordinate transforms', () => {
  const t = fitTransform(136, 168, 760, 960)

  it('round-trips page -> canvas -> page', () => {
    for (const [x, y] of [[0, 0], [136, 168], [8, 32], [57.3, 91.8]] as const) {
      const [cx, cy] = pageToCanvas(t, x, y)
      const [px, py] = canvasToPage(t, cx, cy)
      expect(px).toBeCloseTo(x, 9)
      expect(py).toBeCloseTo(y, 9)
    }
  })

  it('maps page corners onto the fitted region', () => {
    // Transform oracle: corner (0,0) lands at the offsets, the far corner
    // at offset + dimension * scale.
    const [x0, y0] = pageToCanvas(t, 0, 0)
    const [x1, y1] = pageToCanvas(t, 136, 168)
    expect([x0, y0]).toEqual([t.offsetX, t.offsetY])
    expect(x1).toBeCloseTo(t.offsetX + 136 * t.scale, 9)
    expect(y1).toBeCloseTo(t.offsetY + 168 * t.scale, 9)
  })

  it('transforms rectangles corner-wise', () => {
    const r = rectPageToCanvas(t, { x0: 8, y0: 0, x1: 112, y1: 24 })
    const [ax, ay] = pageToCanvas(t, 8, 0)
    const [bx, by] = pageToCanvas(t, 112, 24)
    expect(r).toEqual({ x0: ax, y0: ay, x1: bx, y1: by })
  })
})

describe('normalizeRect', () => {
  it('orders corners regardless of drag direction', () => {
    expect(normalizeRect(10, 20, 3, 5)).toEqual({ x0: 3, y0: 5, x1: 10, y1: 20 })
    expect(normalizeRect(3, 20, 10, 5)).toEqual({ x0: 3, y0: 5, x1: 10, y1: 20 })
  })
})

describe('clampRect', () => {
  it('clips to the page bounds', () => {
    expect(clampRect({ x0: -5, y0: -2, x1: 150, y1: 90 }, 100, 80)).toEqual({
      x0: 0, y0: 0, x1: 100, y1: 80,
    })
  })
})

describe('rectArea', () => {
  it('is zero for degenerate rects', () => {
    expect(rectArea({ x0: 5, y0: 5, x1: 5, y1: 9 })).toBe(0)
    expect(rectArea({ x0: 0, y0: 0, x1: 2, y1: 3 })).toBe(6)
  })
})

describe('formatScore', () => {
  it('renders two decimals for overlay badges', () => {
    expect(formatScore(1)).toBe('1.00')
    expect(formatScore(0.9375)).toBe('0.94')
  })
})
