/** Canvas drawing: color-coded layout boxes, selection, match overlays. */

import { formatScore, rectPageToCanvas, type Rect, type Transform } from './geometry.js'
import type { PagePayload, SearchMatch } from './types.js'

const KIND_COLORS = [
  '#4e79a7', '#f28e2b', '#59a14f', '#e15759', '#b07aa1',
  '#76b7b2', '#edc948', '#9c755f',
]

/** Stable color per kind: alphabetical order of the kinds present. */
export function kindPalette(kinds: Iterable<string>): Map<string, string> {
  const sorted = [...new Set(kinds)].sort()
  return new Map(sorted.map((k, i) => [k, KIND_COLORS[i % KIND_COLORS.length]!]))
}

export function renderPage(
  ctx: CanvasRenderingContext2D,
  page: PagePayload,
  t: Transform,
  palette: Map<string, string>,
  showLabels: boolean,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height)
  ctx.fillStyle = '#ffffff'
  const [px, py] = [t.offsetX, t.offsetY]
  ctx.fillRect(px, py, page.width * t.scale, page.height * t.scale)
  ctx.strokeStyle = '#888'
  ctx.strokeRect(px, py, page.width * t.scale, page.height * t.scale)

  for (const el of page.elements) {
    const [x0, y0, x1, y1] = el.bbox
    const r = rectPageToCanvas(t, { x0, y0, x1, y1 })
    const color = palette.get(el.kind) ?? '#999'
    ctx.fillStyle = color + '33'
    ctx.fillRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0)
    ctx.strokeStyle = color
    ctx.lineWidth = 1
    ctx.strokeRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0)
    if (showLabels) {
      ctx.fillStyle = '#333'
      ctx.font = '10px sans-serif'
      const label = el.text ? `${el.kind}: ${el.text.slice(0, 18)}` : el.kind
      ctx.fillText(label, r.x0 + 2, r.y0 + 10, Math.max(10, r.x1 - r.x0 - 4))
    }
  }
}

export function renderSelection(
  ctx: CanvasRenderingContext2D,
  t: Transform,
  selection: Rect,
): void {
  const r = rectPageToCanvas(t, selection)
  ctx.save()
  ctx.strokeStyle = '#1f6feb'
  ctx.lineWidth = 2
  ctx.setLineDash([6, 3])
  ctx.strokeRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0)
  ctx.restore()
}

/** Overlay matches that live on the rendered page, score badge included. */
export function renderOverlays(
  ctx: CanvasRenderingContext2D,
  page: PagePayload,
  t: Transform,
  matches: SearchMatch[],
  hovered: number | null,
): void {
  matches.forEach((m, i) => {
    if (m.doc_id !== page.doc_id || m.page_no !== page.page_no) return
    const [x0, y0, x1, y1] = m.bbox
    const r = rectPageToCanvas(t, { x0, y0, x1, y1 })
    ctx.save()
    ctx.strokeStyle = hovered === i ? '#d62728' : '#2ca02c'
    ctx.lineWidth = hovered === i ? 3 : 2
    ctx.strokeRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0)
    const badge = formatScore(m.score)
    ctx.font = 'bold 11px sans-serif'
    const w = ctx.measureText(badge).width + 6
    ctx.fillStyle = hovered === i ? '#d62728' : '#2ca02c'
    ctx.fillRect(r.x0, Math.max(0, r.y0 - 14), w, 14)
    ctx.fillStyle = '#fff'
    ctx.fillText(badge, r.x0 + 3, Math.max(11, r.y0 - 3))
    ctx.restore()
  })
}

export function renderLegend(container: HTMLElement, palette: Map<string, string>): void {
  container.replaceChildren()
  for (const [kind, color] of palette) {
    const item = document.createElement('span')
    item.className = 'legend-item'
    const swatch = document.createElement('span')
    swatch.className = 'legend-swatch'
    swatch.style.backgroundColor = color
    item.append(swatch, document.createTextNode(kind))
    container.append(item)
  }
}
