/** View state and its transitions.
 *
 * At most one search result set is live at a time: every issued search gets
 * a sequence number, and a response only lands if its number still matches
 * the latest issued one, so a superseded selection can never overwrite a
 * newer result.
 */

import type { Rect } from './geometry.js'
import type { SearchMatch } from './types.js'

export type TargetScope = 'same-doc' | 'all'

export interface ViewState {
  corpusId: string | null
  pageIndex: number
  selection: Rect | null
  thSim: number
  scope: TargetScope
  results: SearchMatch[]
  queryLstr: string | null
  hovered: number | null
  notice: string | null
  searching: boolean
  requestSeq: number
  appliedSeq: number
}

export function initialState(): ViewState {
  return {
    corpusId: null,
    pageIndex: 0,
    selection: null,
    thSim: 0.92,
    scope: 'all',
    results: [],
    queryLstr: null,
    hovered: null,
    notice: null,
    searching: false,
    requestSeq: 0,
    appliedSeq: 0,
  }
}

export function beginSearch(state: ViewState, selection: Rect): ViewState {
  return {
    ...state,
    selection,
    searching: true,
    notice: null,
    requestSeq: state.requestSeq + 1,
  }
}

function isStale(state: ViewState, seq: number): boolean {
  return seq !== state.requestSeq || seq <= state.appliedSeq
}

export function applyResults(
  state: ViewState,
  seq: number,
  matches: SearchMatch[],
  queryLstr: string,
): ViewState {
  if (isStale(state, seq)) return state
  return {
    ...state,
    results: matches,
    queryLstr,
    hovered: null,
    notice: matches.length === 0 ? 'no matches above the threshold' : null,
    searching: false,
    appliedSeq: seq,
  }
}

export function applyError(state: ViewState, seq: number, code: string, message: string): ViewState {
  if (isStale(state, seq)) return state
  const notice =
    code === 'empty_snippet'
      ? 'no elements selected — drag over some layout boxes'
      : `${code}: ${message}`
  return {
    ...state,
    results: [],
    queryLstr: null,
    notice,
    searching: false,
    appliedSeq: seq,
  }
}

export function setThreshold(state: ViewState, thSim: number): ViewState {
  if (!(thSim > 0 && thSim <= 1)) return state
  return { ...state, thSim }
}

export function setScope(state: ViewState, scope: TargetScope): ViewState {
  return { ...state, scope }
}

export function setHovered(state: ViewState, index: number | null): ViewState {
  return { ...state, hovered: index }
}

/** Debounce helper for slider drags: trailing call after `wait` ms. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  wait: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer)
    timer = setTimeout(() => fn(...args), wait)
  }
}
