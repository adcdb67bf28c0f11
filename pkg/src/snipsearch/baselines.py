"""Template-matching baselines over rasterized layout masks.

Pages are rasterized onto a coarse grid of element-kind codes (no pixel
imagery is involved); a query snippet becomes a small mask slid over the
target mask. SSD scores a window by the sum of squared code differences
(0 means identical); NCC scores by zero-mean normalized cross-correlation
(1 means identical up to affine code shifts). Both operate on valid
positions only, so the query must fit inside the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import AllWindowsDegenerate, NoValidPosition
from .ingest import Corpus
from .layout import BBox, Element, Page, Snippet, bbox_union, layout_string_of
from .metrics import Detection
from .mining import PairRecord
from .similarity import SubsequenceFinder, consolidate_matches


def kind_codes_for(corpus: Corpus) -> dict[str, int]:
    """Stable 1-based kind codes derived from the corpus alphabet."""
    return {kind: i + 1 for i, kind in enumerate(sorted(corpus.alphabet.mapping))}


def _rasterize(
    elements: Sequence[Element],
    width: float,
    height: float,
    cell_size: float,
    kind_codes: dict[str, int],
    origin: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    rows = math.ceil(height / cell_size)
    cols = math.ceil(width / cell_size)
    grid = np.zeros((rows, cols), dtype=np.int16)
    ox, oy = origin
    xs = (np.arange(cols) + 0.5) * cell_size + ox
    ys = (np.arange(rows) + 0.5) * cell_size + oy
    # Later elements overwrite earlier ones: last in reading order wins.
    for el in elements:
        code = kind_codes[el.kind.name]
        ci = np.searchsorted(xs, el.bbox.x0, side="left")
        cj = np.searchsorted(xs, el.bbox.x1, side="left")
        ri = np.searchsorted(ys, el.bbox.y0, side="left")
        rj = np.searchsorted(ys, el.bbox.y1, side="left")
        grid[ri:rj, ci:cj] = code
    return grid


def rasterize_layout(
    page: Page,
    cell_size: float = 4.0,
    kind_codes: Optional[dict[str, int]] = None,
) -> np.ndarray:
    """Rasterize a page to a grid of kind codes (0 = empty).

    A cell takes the code of the last reading-order element covering its
    center. Codes default to 1-based alphabetical order of the kinds
    present; pass an explicit map when masks must be comparable.
    """
    if kind_codes is None:
        kind_codes = {k: i + 1 for i, k in enumerate(sorted({e.kind.name for e in page.elements}))}
    return _rasterize(page.elements, page.width, page.height, cell_size, kind_codes)


def rasterize_snippet(
    snippet: Snippet,
    cell_size: float = 4.0,
    kind_codes: Optional[dict[str, int]] = None,
) -> np.ndarray:
    """Rasterize a snippet in its own bbox frame (origin at bbox top-left)."""
    if kind_codes is None:
        kind_codes = {
            k: i + 1 for i, k in enumerate(sorted({e.kind.name for e in snippet.elements}))
        }
    return _rasterize(
        snippet.elements,
        snippet.bbox.width,
        snippet.bbox.height,
        cell_size,
        kind_codes,
        origin=(snippet.bbox.x0, snippet.bbox.y0),
    )


@dataclass(frozen=True)
class TemplateMatch:
    """One sliding-window position in cell coordinates."""

    row: int
    col: int
    score: float

    def cell_bbox(self, query_shape: tuple[int, int]) -> BBox:
        h, w = query_shape
        return BBox(self.col, self.row, self.col + w, self.row + h)


@dataclass(frozen=True)
class TemplateMatchResult:
    score_map: np.ndarray
    best: TemplateMatch
    accepted: tuple[TemplateMatch, ...]
    query_shape: tuple[int, int]


def _windows(query: np.ndarray, target: np.ndarray) -> np.ndarray:
    qh, qw = query.shape
    th, tw = target.shape
    if qh > th or qw > tw:
        raise NoValidPosition(
            f"query mask {qh}x{qw} does not fit inside target {th}x{tw}"
        )
    return np.lib.stride_tricks.sliding_window_view(target, (qh, qw))


def ssd_match(
    query_mask: np.ndarray,
    target_mask: np.ndarray,
    accept_threshold: Optional[float] = None,
) -> TemplateMatchResult:
    """Sum-of-squared-differences sliding match; lower is better, 0 exact."""
    query = np.asarray(query_mask, dtype=np.float64)
    windows = _windows(query, np.asarray(target_mask, dtype=np.float64))
    scores = np.einsum("ijkl,ijkl->ij", windows, windows)
    scores -= 2.0 * np.einsum("ijkl,kl->ij", windows, query)
    scores += float(np.sum(query * query))
    np.maximum(scores, 0.0, out=scores)
    flat = int(np.argmin(scores))
    r, c = divmod(flat, scores.shape[1])
    best = TemplateMatch(r, c, float(scores[r, c]))
    accepted: list[TemplateMatch] = []
    if accept_threshold is not None:
        for r, c in zip(*np.nonzero(scores <= accept_threshold)):
            accepted.append(TemplateMatch(int(r), int(c), float(scores[r, c])))
    return TemplateMatchResult(scores, best, tuple(accepted), query.shape)


def ncc_match(
    query_mask: np.ndarray,
    target_mask: np.ndarray,
    accept_threshold: Optional[float] = None,
) -> TemplateMatchResult:
    """Zero-mean normalized cross-correlation; higher is better, 1 exact.

    Windows with zero variance score NaN and are never best or accepted;
    a constant query makes every window degenerate and raises.
    """
    query = np.asarray(query_mask, dtype=np.float64)
    q = query - query.mean()
    q_energy = float(np.sum(q * q))
    if q_energy == 0.0:
        raise AllWindowsDegenerate("query mask is constant, correlation undefined")
    windows = _windows(query, np.asarray(target_mask, dtype=np.float64))
    n = query.size
    win_sum = np.einsum("ijkl->ij", windows)
    win_sq = np.einsum("ijkl,ijkl->ij", windows, windows)
    win_var = win_sq - win_sum * win_sum / n
    np.maximum(win_var, 0.0, out=win_var)
    cross = np.einsum("ijkl,kl->ij", windows, q)
    denom = np.sqrt(win_var * q_energy)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(denom > 0, cross / denom, np.nan)
    if np.all(np.isnan(scores)):
        raise AllWindowsDegenerate("every target window is constant")
    flat = int(np.nanargmax(scores))
    r, c = divmod(flat, scores.shape[1])
    best = TemplateMatch(r, c, float(scores[r, c]))
    accepted: list[TemplateMatch] = []
    if accept_threshold is not None:
        good = np.where(np.isnan(scores), -np.inf, scores) >= accept_threshold
        for r, c in zip(*np.nonzero(good)):
            accepted.append(TemplateMatch(int(r), int(c), float(scores[r, c])))
    return TemplateMatchResult(scores, best, tuple(accepted), query.shape)


def _snippet_from_ref(corpus: Corpus, doc: str, page_no: int, elem_range: tuple[int, int]) -> Snippet:
    idx = corpus.page_index(doc, page_no)
    page = corpus.pages[idx]
    elements = page.elements[elem_range[0] : elem_range[1]]
    return Snippet(
        source=(doc, page_no),
        bbox=bbox_union(e.bbox for e in elements),
        elements=elements,
        lstr=layout_string_of(elements),
        elem_range=elem_range,
    )


def template_detections(
    corpus: Corpus,
    pairs: Sequence[PairRecord],
    method: str,
    cell_size: float = 4.0,
    accept_threshold: Optional[float] = None,
) -> list[list[Detection]]:
    """Run a template baseline over mined pairs, one detection list per pair.

    SSD confidences are 1/(1+score); NCC confidences are (score+1)/2. Both
    are monotone in match quality so ranking metrics are meaningful.
    """
    if method not in ("ssd", "ncc"):
        raise ValueError(f"unknown template method {method!r}")
    if accept_threshold is None:
        accept_threshold = 0.0 if method == "ssd" else 0.99
    codes = kind_codes_for(corpus)
    target_masks: dict[tuple[str, int], np.ndarray] = {}
    out: list[list[Detection]] = []
    for pair in pairs:
        query = _snippet_from_ref(corpus, *pair.query.source, pair.query.elem_range)
        qmask = rasterize_snippet(query, cell_size, codes)
        if pair.target not in target_masks:
            tpage = corpus.pages[corpus.page_index(*pair.target)]
            target_masks[pair.target] = rasterize_layout(tpage, cell_size, codes)
        tmask = target_masks[pair.target]
        dets: list[Detection] = []
        try:
            if method == "ssd":
                result = ssd_match(qmask, tmask, accept_threshold)
                for m in result.accepted:
                    cb = m.cell_bbox(result.query_shape)
                    dets.append(
                        Detection(
                            BBox(
                                cb.x0 * cell_size,
                                cb.y0 * cell_size,
                                cb.x1 * cell_size,
                                cb.y1 * cell_size,
                            ),
                            1.0 / (1.0 + m.score),
                        )
                    )
            else:
                result = ncc_match(qmask, tmask, accept_threshold)
                for m in result.accepted:
                    cb = m.cell_bbox(result.query_shape)
                    dets.append(
                        Detection(
                            BBox(
                                cb.x0 * cell_size,
                                cb.y0 * cell_size,
                                cb.x1 * cell_size,
                                cb.y1 * cell_size,
                            ),
                            max(0.0, min(1.0, (m.score + 1.0) / 2.0)),
                        )
                    )
        except (NoValidPosition, AllWindowsDegenerate):
            pass
        out.append(dets)
    return out


def similarity_detections(
    corpus: Corpus,
    pairs: Sequence[PairRecord],
    th_sim: float = 0.92,
    region_nms_iou: float = 0.5,
) -> list[list[Detection]]:
    """Run the layout-string matcher over mined pairs as a detector."""
    finders: dict[str, SubsequenceFinder] = {}
    out: list[list[Detection]] = []
    for pair in pairs:
        finder = finders.get(pair.query.lstr)
        if finder is None:
            finder = SubsequenceFinder(pair.query.lstr, th_sim)
            finders[pair.query.lstr] = finder
        idx = corpus.page_index(*pair.target)
        page, lstr = corpus.pages[idx], corpus.lstrs[idx]
        matches = finder.find(lstr.symbols)
        regions = consolidate_matches(matches, page, lstr, region_nms_iou)
        out.append([Detection(r.bbox, min(1.0, r.score)) for r in regions])
    return out
