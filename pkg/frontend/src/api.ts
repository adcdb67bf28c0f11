/** Thin typed client over the search service endpoints. */

import type { ApiError, CorpusStats, PagePayload, SearchResponse } from './types.js'

export class ServiceError extends Error {
  readonly code: string
  readonly status: number

  constructor(status: number, err: ApiError) {
    super(err.message)
    this.code = err.code
    this.status = status
  }
}

export interface SearchParams {
  corpusId: string
  query:
    | { doc_id: string; page_no: number; bbox: [number, number, number, number] }
    | { lstr: string }
  targets: string[] | 'all'
  thSim: number
  maxResults?: number
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiClient {
  private readonly baseUrl: string
  private readonly fetchFn: FetchLike

  constructor(baseUrl: string, fetchFn: FetchLike = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, '')
    this.fetchFn = fetchFn
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init)
    const body = await resp.json()
    if (!resp.ok) {
      const err: ApiError = body?.error ?? { code: 'unknown', message: resp.statusText }
      throw new ServiceError(resp.status, err)
    }
    return body as T
  }

  getPage(corpusId: string, index: number): Promise<PagePayload> {
    return this.request(`/corpora/${encodeURIComponent(corpusId)}/pages/${index}`)
  }

  getStats(corpusId: string): Promise<CorpusStats> {
    return this.request(`/corpora/${encodeURIComponent(corpusId)}/stats`)
  }

  search(params: SearchParams, signal?: AbortSignal): Promise<SearchResponse> {
    return this.request('/search', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({
        corpus_id: params.corpusId,
        query: params.query,
        targets: params.targets,
        th_sim: params.thSim,
        max_results: params.maxResults ?? 50,
      }),
      signal,
    })
  }

  health(): Promise<{ status: string; corpora: string[] }> {
    return this.request('/health')
  }
}
