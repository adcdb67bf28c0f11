"""Read-only HTTP search service over in-memory corpora.

Corpora are ingested once and then shared immutably across request
handlers, so any interleaving of concurrent searches returns the same
bodies as serial execution. Response bodies are canonical JSON; request
timing is reported in the X-Elapsed-Ms header so identical requests have
byte-identical bodies.
"""

from __future__ import annotations

import threading
from typing import Optional

from fastapi import Body, FastAPI, Request
from fastapi.responses import Response

from .alphabet import get_profile
from .errors import (
    EmptyQuery,
    EmptySnippet,
    InvalidRequest,
    MalformedAnnotation,
    SnipSearchError,
    UnknownDocument,
)
from .ingest import Corpus, canonical_json, load_index, parse_coco_layout, parse_form_layout
from .layout import BBox
from .search import SearchRequest, search_snippet

_STATUS = {
    MalformedAnnotation: 400,
    UnknownDocument: 404,
    EmptySnippet: 422,
    EmptyQuery: 422,
    InvalidRequest: 422,
}


def _error_response(exc: SnipSearchError) -> Response:
    status = 500
    for klass, code in _STATUS.items():
        if isinstance(exc, klass):
            status = code
            break
    return _json_response({"error": exc.to_dict()}, status)


def _json_response(payload: object, status: int = 200, headers: Optional[dict] = None) -> Response:
    return Response(
        content=canonical_json(payload) + "\n",
        status_code=status,
        media_type="application/json",
        headers=headers,
    )


def _page_payload(corpus: Corpus, index: int) -> dict:
    page = corpus.pages[index]
    elements = []
    for el in page.elements:
        rec: dict = {"kind": el.kind.name, "bbox": el.bbox.as_list()}
        if el.text is not None:
            rec["text"] = el.text
        elements.append(rec)
    return {
        "doc_id": page.doc_id,
        "page_no": page.page_no,
        "width": page.width,
        "height": page.height,
        "elements": elements,
        "lstr": corpus.lstrs[index].symbols,
    }


def create_app(corpora: Optional[dict[str, Corpus]] = None, cors: bool = False) -> FastAPI:
    app = FastAPI(title="snipsearch", docs_url=None, redoc_url=None)
    app.state.corpora = dict(corpora or {})
    app.state.lock = threading.Lock()

    if cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
        )

    @app.exception_handler(SnipSearchError)
    async def _handle_domain_error(_request: Request, exc: SnipSearchError):
        return _error_response(exc)

    def _corpus_or_404(corpus_id: str) -> Corpus:
        corpus = app.state.corpora.get(corpus_id)
        if corpus is None:
            raise UnknownDocument(f"no corpus {corpus_id!r}")
        return corpus

    @app.get("/health")
    def health():
        return _json_response({"status": "ok", "corpora": sorted(app.state.corpora)})

    @app.post("/corpora")
    def ingest_corpus(payload: dict = Body(...)):
        fmt = payload.get("format")
        if fmt not in ("coco", "form"):
            raise InvalidRequest(f"format must be 'coco' or 'form', got {fmt!r}")
        alphabet = get_profile(str(payload.get("alphabet_profile", "publaynet")))
        if "payload" in payload:
            data = payload["payload"]
            if not isinstance(data, str):
                data = canonical_json(data)
        elif "path" in payload:
            with open(payload["path"], "r", encoding="utf-8") as fh:
                data = fh.read()
        else:
            raise InvalidRequest("supply 'payload' (inline) or 'path' (server-side file)")
        parse = parse_coco_layout if fmt == "coco" else parse_form_layout
        corpus = parse(data, alphabet)
        with app.state.lock:
            app.state.corpora[corpus.corpus_id] = corpus
        return _json_response(
            {"corpus_id": corpus.corpus_id, "n_pages": len(corpus)}, status=201
        )

    @app.get("/corpora/{corpus_id}/pages/{n}")
    def get_page(corpus_id: str, n: int):
        corpus = _corpus_or_404(corpus_id)
        if not (0 <= n < len(corpus.pages)):
            raise UnknownDocument(f"page index {n} outside 0..{len(corpus.pages) - 1}")
        return _json_response(_page_payload(corpus, n))

    @app.get("/corpora/{corpus_id}/stats")
    def get_stats(corpus_id: str):
        corpus = _corpus_or_404(corpus_id)
        histogram: dict[int, int] = {}
        uniques = set()
        for lstr in corpus.lstrs:
            histogram[len(lstr)] = histogram.get(len(lstr), 0) + 1
            uniques.add(lstr.symbols)
        return _json_response(
            {
                "n_pages": len(corpus.pages),
                "n_unique_layout_strings": len(uniques),
                "length_histogram": {str(k): v for k, v in sorted(histogram.items())},
            }
        )

    @app.post("/search")
    def search(payload: dict = Body(...)):
        corpus = _corpus_or_404(str(payload.get("corpus_id", "")))
        query = payload.get("query")
        if not isinstance(query, dict):
            raise InvalidRequest("missing 'query' object")
        region = None
        lstr = None
        if "lstr" in query:
            lstr = str(query["lstr"])
        if {"doc_id", "page_no", "bbox"} <= set(query):
            try:
                box = BBox(*(float(v) for v in query["bbox"]))
            except (TypeError, ValueError) as exc:
                raise InvalidRequest(f"bad bbox: {exc}") from exc
            region = (str(query["doc_id"]), int(query["page_no"]), box)
        request = SearchRequest(
            query_region=region,
            query_lstr=lstr,
            targets=payload.get("targets", "all"),
            th_sim=float(payload.get("th_sim", 0.92)),
            max_results=int(payload.get("max_results", 50)),
        )
        response = search_snippet(corpus, request)
        return _json_response(
            response.to_dict(),
            headers={"X-Elapsed-Ms": f"{response.elapsed_ms:.3f}"},
        )

    return app


def serve(
    index_paths: list[str],
    host: str = "127.0.0.1",
    port: int = 8080,
    cors: bool = False,
) -> None:
    """Load one or more index files and serve them until interrupted."""
    import uvicorn

    corpora = {}
    for path in index_paths:
        corpus = load_index(path)
        corpora[corpus.corpus_id] = corpus
    app = create_app(corpora, cors=cors)
    uvicorn.run(app, host=host, port=port, log_level="warning")
