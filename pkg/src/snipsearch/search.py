"""One-shot snippet search over a loaded corpus.

A request supplies either a rectangle on a corpus page (clipped to a
snippet) or a raw layout string, a target scope, and a threshold; the
response lists every qualifying region across the targeted pages, best
first. Rectangle queries exclude the query's own element range on its own
page, so a selection never trivially reports itself.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .errors import InvalidRequest, UnknownDocument
from .ingest import Corpus
from .layout import BBox, snippet_clip
from .similarity import SubsequenceFinder, consolidate_matches


@dataclass(frozen=True)
class SearchRequest:
    """Exactly one of query_region / query_lstr must be set."""

    query_region: Optional[tuple[str, int, BBox]] = None
    query_lstr: Optional[str] = None
    targets: Union[str, Sequence[str]] = "all"
    th_sim: float = 0.92
    max_results: int = 50
    containment_threshold: float = 0.5
    region_nms_iou: float = 0.5

    def __post_init__(self):
        if (self.query_region is None) == (self.query_lstr is None):
            raise InvalidRequest("supply exactly one of a query region or a query lstr")
        if not (0.0 < self.th_sim <= 1.0):
            raise InvalidRequest(f"th_sim must be in (0, 1], got {self.th_sim}")
        if self.max_results < 1:
            raise InvalidRequest("max_results must be >= 1")


@dataclass(frozen=True)
class SearchMatch:
    doc_id: str
    page_no: int
    bbox: BBox
    score: float
    elem_range: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "page_no": self.page_no,
            "bbox": self.bbox.as_list(),
            "score": self.score,
            "elem_range": list(self.elem_range),
        }


@dataclass(frozen=True)
class SearchResponse:
    matches: tuple[SearchMatch, ...]
    query_lstr: str
    elapsed_ms: float = field(compare=False, default=0.0)

    def to_dict(self) -> dict:
        return {
            "matches": [m.to_dict() for m in self.matches],
            "query_lstr": self.query_lstr,
        }


def search_snippet(corpus: Corpus, request: SearchRequest) -> SearchResponse:
    """Run the full pipeline: clip, scan target pages, consolidate, rank."""
    started = time.perf_counter()
    exclude: Optional[tuple[tuple[str, int], tuple[int, int]]] = None
    if request.query_region is not None:
        doc_id, page_no, box = request.query_region
        idx = corpus.page_index(doc_id, page_no)
        if idx is None:
            raise UnknownDocument(f"no page ({doc_id!r}, {page_no}) in corpus")
        snippet = snippet_clip(corpus.pages[idx], box, request.containment_threshold)
        query_lstr = snippet.lstr.symbols
        if snippet.elem_range is not None:
            exclude = (snippet.source, snippet.elem_range)
    else:
        query_lstr = request.query_lstr

    if request.targets == "all":
        wanted = None
    else:
        wanted = set(request.targets)
        known = set(corpus.doc_ids())
        missing = wanted - known
        if missing:
            raise UnknownDocument(f"unknown target documents: {sorted(missing)}")

    finder = SubsequenceFinder(query_lstr, request.th_sim)
    order = sorted(range(len(corpus.pages)),
                   key=lambda i: (corpus.pages[i].doc_id, corpus.pages[i].page_no))
    results: list[SearchMatch] = []
    for i in order:
        page, lstr = corpus.pages[i], corpus.lstrs[i]
        if wanted is not None and page.doc_id not in wanted:
            continue
        matches = finder.find(lstr.symbols)
        if not matches:
            continue
        regions = consolidate_matches(matches, page, lstr, request.region_nms_iou)
        for region in regions:
            if exclude is not None and region.target == exclude[0] \
                    and region.element_range == exclude[1]:
                continue
            results.append(
                SearchMatch(page.doc_id, page.page_no, region.bbox,
                            region.score, region.element_range)
            )
    results.sort(key=lambda m: (-m.score, m.doc_id, m.page_no, m.elem_range))
    elapsed = (time.perf_counter() - started) * 1000.0
    return SearchResponse(tuple(results[: request.max_results]), query_lstr, elapsed)
