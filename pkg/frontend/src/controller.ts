/** Drag-to-search orchestration, kept free of DOM access for testing. */

import { ApiClient, ServiceError } from './api.js'
import { clampRect, normalizeRect, rectArea, type Rect, type Transform } from './geometry.js'
import { canvasToPage } from './geometry.js'
import { applyError, applyResults, beginSearch, type ViewState } from './state.js'
import type { PagePayload } from './types.js'

/** Convert a canvas drag into a page-space selection rectangle. */
export function dragToSelection(
  t: Transform,
  page: PagePayload,
  startX: number,
  startY: number,
  endX: number,
  endY: number,
): Rect {
  const [px0, py0] = canvasToPage(t, startX, startY)
  const [px1, py1] = canvasToPage(t, endX, endY)
  return clampRect(normalizeRect(px0, py0, px1, py1), page.width, page.height)
}

/** Holder for the single permitted in-flight request. */
export interface InflightSearch {
  controller: AbortController | null
}

/**
 * Issue a search for the given selection and fold the response (or a
 * structured error such as an empty selection) into the state. Passing an
 * InflightSearch holder aborts any still-running predecessor, so at most
 * one request is live; stale responses are additionally discarded by
 * sequence number inside the state helpers.
 */
export async function selectAndSearch(
  state: ViewState,
  api: ApiClient,
  page: PagePayload,
  selection: Rect,
  inflight?: InflightSearch,
): Promise<ViewState> {
  if (state.corpusId === null || rectArea(selection) === 0) return state
  let next = beginSearch(state, selection)
  const seq = next.requestSeq
  let signal: AbortSignal | undefined
  if (inflight) {
    inflight.controller?.abort()
    inflight.controller = new AbortController()
    signal = inflight.controller.signal
  }
  try {
    const resp = await api.search(
      {
        corpusId: state.corpusId,
        query: {
          doc_id: page.doc_id,
          page_no: page.page_no,
          bbox: [selection.x0, selection.y0, selection.x1, selection.y1],
        },
        targets: next.scope === 'same-doc' ? [page.doc_id] : 'all',
        thSim: next.thSim,
      },
      signal,
    )
    next = applyResults(next, seq, resp.matches, resp.query_lstr)
  } catch (err) {
    if (err instanceof ServiceError) {
      next = applyError(next, seq, err.code, err.message)
    } else if (err instanceof DOMException && err.name === 'AbortError') {
      // Superseded by a newer selection; that search owns the state now.
      return next
    } else {
      next = applyError(next, seq, 'network', String(err))
    }
  }
  return next
}
