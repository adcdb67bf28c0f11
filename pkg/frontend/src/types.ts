/** Wire types for the search service. */

export interface PageElement {
  kind: string
  bbox: [number, number, number, number]
  text?: string
}

export interface PagePayload {
  doc_id: string
  page_no: number
  width: number
  height: number
  elements: PageElement[]
  lstr: string
}

export interface SearchMatch {
  doc_id: string
  page_no: number
  bbox: [number, number, number, number]
  score: number
  elem_range: [number, number]
}

export interface SearchResponse {
  matches: SearchMatch[]
  query_lstr: string
}

export interface CorpusStats {
  n_pages: number
  n_unique_layout_strings: number
  length_histogram: Record<string, number>
}

export interface ApiError {
  code: string
  message: string
  detail?: unknown
}
