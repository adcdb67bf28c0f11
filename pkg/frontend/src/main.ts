/** DOM wiring for the snippet-search app. */

import { ApiClient } from './api.js'
import { dragToSelection, selectAndSearch, type InflightSearch } from './controller.js'
import { fitTransform, type Transform } from './geometry.js'
import {
  debounce,
  initialState,
  setHovered,
  setScope,
  setThreshold,
  type TargetScope,
  type ViewState,
} from './state.js'
import { kindPalette, renderLegend, renderOverlays, renderPage, renderSelection } from './render.js'
import type { PagePayload } from './types.js'

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id)
  if (!el) throw new Error(`missing element #${id}`)
  return el as T
}

const canvas = $<HTMLCanvasElement>('page-canvas')
const ctx = canvas.getContext('2d')!
const serverInput = $<HTMLInputElement>('server-url')
const corpusInput = $<HTMLInputElement>('corpus-id')
const loadButton = $<HTMLButtonElement>('load-corpus')
const pageLabel = $<HTMLSpanElement>('page-label')
const prevButton = $<HTMLButtonElement>('prev-page')
const nextButton = $<HTMLButtonElement>('next-page')
const thSlider = $<HTMLInputElement>('th-slider')
const thLabel = $<HTMLSpanElement>('th-label')
const scopeSelect = $<HTMLSelectElement>('scope-select')
const labelsToggle = $<HTMLInputElement>('labels-toggle')
const noticeBox = $<HTMLDivElement>('notice')
const resultsList = $<HTMLUListElement>('results')
const legendBox = $<HTMLDivElement>('legend')

let state: ViewState = initialState()
let api = new ApiClient(serverInput.value)
let page: PagePayload | null = null
let nPages = 0
let transform: Transform | null = null
let dragStart: [number, number] | null = null
let dragEnd: [number, number] | null = null
const inflight: InflightSearch = { controller: null }

function redraw(): void {
  if (!page || !transform) return
  const palette = kindPalette(page.elements.map((e) => e.kind))
  renderPage(ctx, page, transform, palette, labelsToggle.checked)
  renderLegend(legendBox, palette)
  if (dragStart && dragEnd) {
    renderSelection(
      ctx,
      transform,
      dragToSelection(transform, page, dragStart[0], dragStart[1], dragEnd[0], dragEnd[1]),
    )
  } else if (state.selection) {
    renderSelection(ctx, transform, state.selection)
  }
  renderOverlays(ctx, page, transform, state.results, state.hovered)
}

function syncPanel(): void {
  noticeBox.textContent = state.notice ?? (state.searching ? 'searching…' : '')
  noticeBox.className = state.notice ? 'notice visible' : 'notice'
  thLabel.textContent = state.thSim.toFixed(2)
  resultsList.replaceChildren()
  state.results.forEach((m, i) => {
    const li = document.createElement('li')
    li.textContent = `${m.doc_id} p${m.page_no}  score ${m.score.toFixed(2)}`
    li.className = state.hovered === i ? 'hovered' : ''
    li.addEventListener('mouseenter', () => {
      state = setHovered(state, i)
      syncPanel()
      redraw()
    })
    li.addEventListener('mouseleave', () => {
      state = setHovered(state, null)
      syncPanel()
      redraw()
    })
    resultsList.append(li)
  })
  pageLabel.textContent = page
    ? `${page.doc_id} p${page.page_no} (${state.pageIndex + 1}/${nPages}) — ${page.lstr}`
    : 'no corpus loaded'
}

async function loadPage(index: number): Promise<void> {
  if (!state.corpusId) return
  try {
    page = await api.getPage(state.corpusId, index)
    state = { ...state, pageIndex: index, selection: null, results: [], notice: null }
    transform = fitTransform(page.width, page.height, canvas.width, canvas.height)
    redraw()
    syncPanel()
  } catch (err) {
    state = { ...state, notice: String(err) }
    syncPanel()
  }
}

async function runSearch(): Promise<void> {
  if (!page || !state.selection) return
  state = await selectAndSearch(state, api, page, state.selection, inflight)
  syncPanel()
  redraw()
}

loadButton.addEventListener('click', async () => {
  api = new ApiClient(serverInput.value)
  state = { ...initialState(), corpusId: corpusInput.value.trim() || null }
  if (!state.corpusId) {
    try {
      const health = await api.health()
      state = { ...state, corpusId: health.corpora[0] ?? null }
      if (state.corpusId) corpusInput.value = state.corpusId
    } catch (err) {
      state = { ...state, notice: String(err) }
      syncPanel()
      return
    }
  }
  if (!state.corpusId) {
    state = { ...state, notice: 'no corpus available on the server' }
    syncPanel()
    return
  }
  const stats = await api.getStats(state.corpusId)
  nPages = stats.n_pages
  await loadPage(0)
})

prevButton.addEventListener('click', () => {
  if (state.pageIndex > 0) void loadPage(state.pageIndex - 1)
})
nextButton.addEventListener('click', () => {
  if (state.pageIndex + 1 < nPages) void loadPage(state.pageIndex + 1)
})

function canvasPoint(ev: MouseEvent): [number, number] {
  const rect = canvas.getBoundingClientRect()
  return [ev.clientX - rect.left, ev.clientY - rect.top]
}

canvas.addEventListener('mousedown', (ev) => {
  if (!page || !transform) return
  dragStart = canvasPoint(ev)
  dragEnd = dragStart
})

canvas.addEventListener('mousemove', (ev) => {
  if (!dragStart) return
  dragEnd = canvasPoint(ev)
  redraw()
})

canvas.addEventListener('mouseup', (ev) => {
  if (!dragStart || !page || !transform) return
  const [ex, ey] = canvasPoint(ev)
  const selection = dragToSelection(transform, page, dragStart[0], dragStart[1], ex, ey)
  dragStart = null
  dragEnd = null
  state = { ...state, selection }
  void runSearch()
})

const debouncedSearch = debounce(() => void runSearch(), 200)

thSlider.addEventListener('input', () => {
  state = setThreshold(state, Number(thSlider.value))
  thLabel.textContent = state.thSim.toFixed(2)
  if (state.selection) debouncedSearch()
})

scopeSelect.addEventListener('change', () => {
  state = setScope(state, scopeSelect.value as TargetScope)
  if (state.selection) void runSearch()
})

labelsToggle.addEventListener('change', redraw)

syncPanel()
