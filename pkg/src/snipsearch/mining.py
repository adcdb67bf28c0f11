"""Programmatic query-target pair mining and dataset bookkeeping.

Queries are contiguous reading-order runs sampled from corpus pages; each
query is scanned against every page's layout string, and pages holding at
least one qualifying region become one pair record carrying all of that
page's ground-truth regions. Sampling is seeded per page, so mining is
deterministic for a fixed corpus and seed regardless of worker count, and
the query's trivial self-match on its own page is excluded.
"""

from __future__ import annotations

import hashlib
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .errors import MalformedAnnotation
from .ingest import Corpus, canonical_json
from .layout import BBox, Page, Snippet, bbox_union, layout_string_of
from .similarity import MatchRegion, SubsequenceFinder, consolidate_matches


@dataclass(frozen=True)
class QueryRef:
    """The persisted face of a query snippet: source, box, and layout string."""

    source: tuple[str, int]
    bbox: BBox
    lstr: str
    elem_range: tuple[int, int]


@dataclass(frozen=True)
class PairRecord:
    query: QueryRef
    target: tuple[str, int]
    gt_regions: tuple[MatchRegion, ...]


@dataclass(frozen=True)
class DatasetStats:
    n_pairs: int
    n_unique_layout_strings: int
    length_histogram: dict[int, int]


def _page_seed(rng_seed: int, doc_id: str, page_no: int) -> int:
    digest = hashlib.sha256(f"{rng_seed}|{doc_id}|{page_no}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def extract_query_snippets(
    page: Page,
    min_len: int = 2,
    max_len: int = 8,
    samples_per_page: int = 4,
    rng_seed: int = 0,
) -> list[Snippet]:
    """Sample contiguous reading-order runs of the page as query snippets.

    Deterministic for a fixed seed; runs whose layout strings repeat within
    the page are deduplicated. Pages shorter than min_len yield nothing.
    """
    if not (1 <= min_len <= max_len):
        raise ValueError("need 1 <= min_len <= max_len")
    n = len(page.elements)
    if n < min_len:
        return []
    rng = random.Random(_page_seed(rng_seed, page.doc_id, page.page_no))
    seen: set[str] = set()
    out: list[Snippet] = []
    hi = min(max_len, n)
    for _ in range(samples_per_page):
        k = rng.randint(min_len, hi)
        start = rng.randint(0, n - k)
        elements = page.elements[start : start + k]
        lstr = layout_string_of(elements)
        if lstr.symbols in seen:
            continue
        seen.add(lstr.symbols)
        out.append(
            Snippet(
                source=(page.doc_id, page.page_no),
                bbox=bbox_union(e.bbox for e in elements),
                elements=elements,
                lstr=lstr,
                elem_range=(start, start + k),
            )
        )
    return out


def _scan_query(
    corpus: Corpus,
    snippet: Snippet,
    th_sim: float,
    region_nms_iou: float,
) -> list[PairRecord]:
    finder = SubsequenceFinder(snippet.lstr.symbols, th_sim)
    ref = QueryRef(snippet.source, snippet.bbox, snippet.lstr.symbols, snippet.elem_range)
    records: list[PairRecord] = []
    for page, lstr in zip(corpus.pages, corpus.lstrs):
        matches = finder.find(lstr.symbols)
        if not matches:
            continue
        regions = consolidate_matches(matches, page, lstr, region_nms_iou)
        if (page.doc_id, page.page_no) == snippet.source:
            regions = [r for r in regions if r.element_range != snippet.elem_range]
        if regions:
            records.append(PairRecord(ref, (page.doc_id, page.page_no), tuple(regions)))
    return records


def mine_pairs(
    corpus: Corpus,
    th_sim: float = 0.92,
    min_len: int = 2,
    max_len: int = 8,
    samples_per_page: int = 4,
    rng_seed: int = 0,
    region_nms_iou: float = 0.5,
    workers: int = 1,
) -> list[PairRecord]:
    """Mine query-target pair records from the whole corpus.

    Output order is (query doc, page, element range, target doc, page),
    independent of worker count.
    """
    queries: list[Snippet] = []
    for page in corpus.pages:
        queries.extend(
            extract_query_snippets(page, min_len, max_len, samples_per_page, rng_seed)
        )
    if workers <= 1:
        batches = [_scan_query(corpus, q, th_sim, region_nms_iou) for q in queries]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(
                pool.map(lambda q: _scan_query(corpus, q, th_sim, region_nms_iou), queries)
            )
    records = [rec for batch in batches for rec in batch]
    records.sort(
        key=lambda r: (r.query.source, r.query.elem_range, r.target)
    )
    return records


def split_seen_unseen(
    train_pairs: Sequence[PairRecord], test_pairs: Sequence[PairRecord]
) -> list[str]:
    """Label each test pair "seen" or "unseen" by exact query-string reuse."""
    train_lstrs = {p.query.lstr for p in train_pairs}
    return ["seen" if p.query.lstr in train_lstrs else "unseen" for p in test_pairs]


def dataset_stats(pairs: Sequence[PairRecord]) -> DatasetStats:
    histogram: dict[int, int] = {}
    uniques: set[str] = set()
    for pair in pairs:
        length = len(pair.query.lstr)
        histogram[length] = histogram.get(length, 0) + 1
        uniques.add(pair.query.lstr)
    return DatasetStats(len(pairs), len(uniques), dict(sorted(histogram.items())))


def pair_to_dict(pair: PairRecord) -> dict:
    return {
        "query": {
            "doc": pair.query.source[0],
            "page": pair.query.source[1],
            "bbox": pair.query.bbox.as_list(),
            "lstr": pair.query.lstr,
            "elem_range": list(pair.query.elem_range),
        },
        "target": {"doc": pair.target[0], "page": pair.target[1]},
        "gt": [
            {
                "bbox": r.bbox.as_list(),
                "score": r.score,
                "elem_range": list(r.element_range),
            }
            for r in pair.gt_regions
        ],
    }


def pair_from_dict(obj: dict) -> PairRecord:
    try:
        q = obj["query"]
        t = obj["target"]
        query = QueryRef(
            (str(q["doc"]), int(q["page"])),
            BBox(*q["bbox"]),
            str(q["lstr"]),
            (int(q["elem_range"][0]), int(q["elem_range"][1])),
        )
        regions = tuple(
            MatchRegion(
                (str(t["doc"]), int(t["page"])),
                BBox(*r["bbox"]),
                (int(r["elem_range"][0]), int(r["elem_range"][1])),
                float(r["score"]),
            )
            for r in obj["gt"]
        )
        return PairRecord(query, (str(t["doc"]), int(t["page"])), regions)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise MalformedAnnotation(f"bad pair record: {exc}") from exc


def write_pairs(pairs: Iterable[PairRecord], fh: IO[str]) -> None:
    for pair in pairs:
        fh.write(canonical_json(pair_to_dict(pair)))
        fh.write("\n")


def save_pairs(pairs: Iterable[PairRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_pairs(pairs, fh)


def load_pairs(path: str) -> list[PairRecord]:
    pairs: list[PairRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedAnnotation(f"pairs line {line_no}: {exc}") from exc
            pairs.append(pair_from_dict(obj))
    return pairs
