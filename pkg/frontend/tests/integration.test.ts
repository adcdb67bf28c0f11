/**
 * Scripted end-to-end run against a live backend: build a small corpus,
 * serve it, then drive the same controller logic the browser uses.
 *
 * The fixture holds four single-page documents whose reading orders spell
 * THLAF (A), THLAF (B, the twin), THLAT (C, one substitution) and THLTT
 * (D, two substitutions), so sweeping the threshold changes how many
 * regions qualify.
 */

import { execFile, spawn, type ChildProcess } from 'node:child_process'
import { mkdtempSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { promisify } from 'node:util'

import { afterAll, beforeAll, describe, expect, it } from 'vitest'

import { ApiClient } from '../src/api'
import { dragToSelection, selectAndSearch } from '../src/controller'
import { fitTransform, formatScore, pageToCanvas } from '../src/geometry'
import { initialState, setThreshold, type ViewState } from '../src/state'
import type { PagePayload } from '../src/types'

const run = promisify(execFile)

const PORT = 8914
const BASE = `http://127.0.0.1:${PORT}`

// Stacked layout: element i sits at y = 32*i, height 24; widths vary by
// kind so the pages carry some geometry. Mirrors the backend fixtures.
const WIDTHS: Record<string, number> = { F: 40, L: 56, A: 72, T: 88, H: 104 }
const KIND: Record<string, string> = { T: 'text', H: 'title', L: 'list', A: 'table', F: 'figure' }

function stackedPage(doc: string, symbols: string) {
  return {
    doc_id: doc,
    page_no: 0,
    width: 136,
    height: 32 * symbols.length + 8,
    elements: [...symbols].map((sym, i) => ({
      kind: KIND[sym]!,
      bbox: [8, 32 * i, 8 + WIDTHS[sym]!, 32 * i + 24],
    })),
  }
}

let server: ChildProcess | null = null
let api: ApiClient
let corpusId: string

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), 'snipsearch-ui-'))
  const fixture = join(dir, 'corpus.json')
  writeFileSync(
    fixture,
    JSON.stringify({
      pages: ['THLAF', 'THLAF', 'THLAT', 'THLTT'].map((syms, i) =>
        stackedPage('ABCD'[i]!, syms),
      ),
    }),
  )
  const index = join(dir, 'corpus.idx')
  const ingest = await run('python3', [
    '-m', 'snipsearch.cli', 'ingest', '--format', 'form',
    '--alphabet', 'publaynet', fixture, '--out', index,
  ])
  corpusId = JSON.parse(ingest.stdout).corpus_id

  server = spawn('python3', [
    '-m', 'snipsearch.cli', 'serve', '--index', index,
    '--port', String(PORT), '--host', '127.0.0.1',
  ], { stdio: 'ignore' })

  api = new ApiClient(BASE)
  const deadline = Date.now() + 20000
  for (;;) {
    try {
      await api.health()
      break
    } catch {
      if (Date.now() > deadline) throw new Error('backend did not come up')
      await new Promise((r) => setTimeout(r, 250))
    }
  }
}, 60000)

afterAll(() => {
  server?.kill()
})

function fullPageDrag(page: PagePayload) {
  const t = fitTransform(page.width, page.height, 760, 960)
  const [sx, sy] = pageToCanvas(t, 0, 0)
  const [ex, ey] = pageToCanvas(t, page.width, page.height)
  return dragToSelection(t, page, sx, sy, ex, ey)
}

describe('scripted drag and threshold sweep', () => {
  it('shows non-increasing result counts as the threshold rises', async () => {
    const page = await api.getPage(corpusId, 0)
    const selection = fullPageDrag(page)
    const counts: number[] = []
    for (const th of [0.55, 0.75, 0.92, 1.0]) {
      let state: ViewState = setThreshold(
        { ...initialState(), corpusId },
        th,
      )
      state = await selectAndSearch(state, api, page, selection)
      counts.push(state.results.length)
    }
    // 0.55 admits two-edit regions (plus narrow shifted sub-runs that
    // clear region NMS), 0.75 the twin and the one-edit copy, 0.92 the
    // twin alone, and nothing strictly exceeds 1.0.
    expect(counts).toEqual([5, 2, 1, 0])
    for (let i = 1; i < counts.length; i++) {
      expect(counts[i]!).toBeLessThanOrEqual(counts[i - 1]!)
    }
  })

  it('overlays a score-1.00 badge at the default threshold', async () => {
    const page = await api.getPage(corpusId, 0)
    let state: ViewState = { ...initialState(), corpusId }
    expect(state.thSim).toBe(0.92)
    state = await selectAndSearch(state, api, page, fullPageDrag(page))
    expect(state.results).toHaveLength(1)
    const top = state.results[0]!
    expect(top.doc_id).toBe('B')
    expect(top.score).toBe(1.0)
    expect(formatScore(top.score)).toBe('1.00')
    expect(state.queryLstr).toBe('THLAF')
  })

  it('re-issuing the same selection returns identical overlays', async () => {
    const page = await api.getPage(corpusId, 0)
    const selection = fullPageDrag(page)
    const runs = []
    for (let i = 0; i < 3; i++) {
      let state: ViewState = { ...initialState(), corpusId }
      state = await selectAndSearch(state, api, page, selection)
      runs.push(JSON.stringify(state.results))
    }
    expect(new Set(runs).size).toBe(1)
  })

  it('surfaces a whitespace selection as an inline notice, not an error', async () => {
    const page = await api.getPage(corpusId, 0)
    const t = fitTransform(page.width, page.height, 760, 960)
    const [sx, sy] = pageToCanvas(t, 120, 156)
    const [ex, ey] = pageToCanvas(t, 134, 166)
    const selection = dragToSelection(t, page, sx, sy, ex, ey)
    let state: ViewState = { ...initialState(), corpusId }
    state = await selectAndSearch(state, api, page, selection)
    expect(state.notice).toContain('no elements selected')
    expect(state.results).toHaveLength(0)
    expect(state.searching).toBe(false)
  })

  it('scopes targets to the same document when asked', async () => {
    const page = await api.getPage(corpusId, 0)
    let state: ViewState = { ...initialState(), corpusId, scope: 'same-doc' as const }
    state = await selectAndSearch(state, api, page, fullPageDrag(page))
    // The query's own full-page run is excluded, so nothing remains.
    expect(state.results).toHaveLength(0)
  })
})
