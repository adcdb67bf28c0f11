"""Layout-string similarity and thresholded subsequence search.

The similarity of a query string ``a`` against a candidate ``b`` is
``1 - d(a, b) / len(a)`` with ``d`` the unit-cost Levenshtein distance.
The score is normalized by the query length only, so it is asymmetric,
equals 1 exactly when the strings match, and goes negative for distant
candidates. A candidate region of a target page is any contiguous
subsequence of the target's layout string whose score strictly exceeds
the threshold (0.92 unless configured otherwise).

Searching every contiguous subsequence naively is quadratic in the target
length per candidate, so the finder exploits two exact prunings:

* a qualifying candidate's distance is below ``(1 - th) * len(q)``, so its
  length lies within ``len(q) +/- cutoff`` and a banded DP with that cutoff
  suffices;
* any candidate within ``cutoff`` edits of the query must contain at least
  one of ``cutoff + 1`` contiguous query pieces verbatim (an edit can break
  at most one piece), so target pages that contain no piece are skipped at
  C string-search speed.

Both prunings are supersets of the qualifying set; the final inclusion test
is always the exact score comparison, so results match brute force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import EmptyQuery
from .layout import BBox, LayoutString, Page, bbox_union, iou


@dataclass(frozen=True)
class SubseqMatch:
    """A qualifying contiguous subsequence of a target layout string."""

    start: int
    end: int
    distance: int
    score: float


@dataclass(frozen=True)
class MatchRegion:
    """A matched page region: element range, union box, and score."""

    target: tuple[str, int]
    bbox: BBox
    element_range: tuple[int, int]
    score: float


def edit_distance(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance (insert/delete/substitute)."""
    # Strip common prefix/suffix; the distance is unaffected.
    lo = 0
    hi_a, hi_b = len(a), len(b)
    while lo < hi_a and lo < hi_b and a[lo] == b[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    a, b = a[lo:hi_a], b[lo:hi_b]
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        append = cur.append
        for j, cb in enumerate(b):
            append(min(prev[j + 1] + 1, cur[j] + 1, prev[j] + (ca != cb)))
        prev = cur
    return prev[-1]


def _banded_final_row(a: str, b: str, k: int) -> Optional[tuple[int, list[int]]]:
    """Last DP row of Levenshtein(a, b) within the |i-j| <= k band.

    Returns (lo, row) where row[t] = D[len(a)][lo + t]; cells are capped at
    k + 1, so any entry exceeding k means "more than k". Returns None when
    every band cell already exceeds k (no prefix of b is within k edits).
    """
    la, lb = len(a), len(b)
    big = k + 1
    hi = min(lb, k)
    prev = list(range(hi + 1))
    prev_lo = 0
    for i in range(1, la + 1):
        lo = max(0, i - k)
        hi = min(lb, i + k)
        if lo > hi:
            return None
        cur: list[int] = []
        ai = a[i - 1]
        prev_hi = prev_lo + len(prev) - 1
        for j in range(lo, hi + 1):
            if j == 0:
                cur.append(min(i, big))
                continue
            best = big
            if prev_lo <= j <= prev_hi:
                v = prev[j - prev_lo] + 1
                if v < best:
                    best = v
            if j - 1 >= lo:
                v = cur[-1] + 1
                if v < best:
                    best = v
            if prev_lo <= j - 1 <= prev_hi:
                v = prev[j - 1 - prev_lo] + (ai != b[j - 1])
                if v < best:
                    best = v
            cur.append(best)
        if min(cur) >= big:
            return None
        prev, prev_lo = cur, lo
    return prev_lo, prev


def edit_distance_bounded(a: str, b: str, k: int) -> Optional[int]:
    """Exact distance when d(a, b) <= k, else None.

    Uses a (2k+1)-wide banded DP, never materializing the full matrix.
    """
    if k < 0:
        raise ValueError("cutoff must be >= 0")
    if abs(len(a) - len(b)) > k:
        return None
    res = _banded_final_row(a, b, k)
    if res is None:
        return None
    lo, row = res
    d = row[len(b) - lo]
    return d if d <= k else None


def g_sim(query_lstr: str, candidate_lstr: str) -> float:
    """Similarity score: 1 minus edit distance over query length.

    Asymmetric (normalized by the query) and unclamped, so distant
    candidates score negative. Raises EmptyQuery for an empty query.
    """
    if not query_lstr:
        raise EmptyQuery("similarity is undefined for an empty query string")
    return 1.0 - edit_distance(query_lstr, candidate_lstr) / len(query_lstr)


def distance_cutoff(query_len: int, th_sim: float) -> int:
    """Largest edit distance a qualifying candidate can have.

    Qualifying means score strictly above th_sim, i.e. distance strictly
    below (1 - th_sim) * query_len; may be -1 when nothing can qualify.
    """
    return math.ceil((1.0 - th_sim) * query_len) - 1


class SubsequenceFinder:
    """Reusable thresholded search of one query over many target strings.

    Precomputes the distance cutoff and the verbatim-piece prefilter once,
    so corpus scans pay only a few C-speed substring probes per target page
    that contains no plausible match.
    """

    def __init__(self, query_lstr: str, th_sim: float = 0.92):
        if not query_lstr:
            raise EmptyQuery("cannot search with an empty query string")
        if not (0.0 < th_sim <= 1.0):
            raise ValueError(f"th_sim must be in (0, 1], got {th_sim}")
        self.query = query_lstr
        self.th_sim = th_sim
        self.m = len(query_lstr)
        # One extra edit of slack keeps the band a strict superset of the
        # qualifying set even at float boundaries; inclusion is decided by
        # the exact score comparison below, never by the band.
        self.cutoff = distance_cutoff(self.m, th_sim) + 1
        self.pieces: Optional[list[tuple[int, str]]] = None
        n_pieces = self.cutoff + 1
        if self.cutoff >= 1 and self.m >= n_pieces:
            base, rem = divmod(self.m, n_pieces)
            pieces = []
            off = 0
            for i in range(n_pieces):
                ln = base + (1 if i < rem else 0)
                pieces.append((off, query_lstr[off : off + ln]))
                off += ln
            self.pieces = pieces

    def _candidate_starts(self, target: str, smax: int) -> Sequence[int]:
        if self.pieces is None:
            return range(smax + 1)
        k = self.cutoff
        starts: set[int] = set()
        for off, piece in self.pieces:
            idx = target.find(piece)
            while idx != -1:
                base = idx - off
                for s in range(base - k, base + k + 1):
                    if 0 <= s <= smax:
                        starts.add(s)
                idx = target.find(piece, idx + 1)
        return sorted(starts)

    def find(self, target_lstr: str, dedup: str = "best-per-start") -> list[SubseqMatch]:
        if dedup not in ("best-per-start", "none"):
            raise ValueError(f"unknown dedup policy {dedup!r}")
        m, th, k = self.m, self.th_sim, self.cutoff
        if k <= 0:
            # Only exact occurrences can qualify; confirm via the score test.
            out = []
            if k == 0:
                idx = target_lstr.find(self.query)
                while idx != -1:
                    score = 1.0 - 0.0 / m
                    if score > th:
                        out.append(SubseqMatch(idx, idx + m, 0, score))
                    idx = target_lstr.find(self.query, idx + 1)
            return out
        n = len(target_lstr)
        min_len = m - k
        if n < max(1, min_len):
            return []
        smax = n - max(1, min_len)
        results: list[SubseqMatch] = []
        query = self.query
        for s in self._candidate_starts(target_lstr, smax):
            window = target_lstr[s : s + m + k]
            res = _banded_final_row(query, window, k)
            if res is None:
                continue
            lo, row = res
            best: Optional[tuple[int, int, float]] = None
            qualifying: list[tuple[int, int, float]] = []
            for length in range(max(1, min_len), len(window) + 1):
                t = length - lo
                if t < 0 or t >= len(row):
                    continue
                d = row[t]
                if d > k:
                    continue
                score = 1.0 - d / m
                if score > th:
                    if dedup == "none":
                        qualifying.append((length, d, score))
                    elif best is None or d < best[1]:
                        best = (length, d, score)
            if dedup == "none":
                for length, d, score in sorted(qualifying, key=lambda q: (-q[2], q[0])):
                    results.append(SubseqMatch(s, s + length, d, score))
            elif best is not None:
                length, d, score = best
                results.append(SubseqMatch(s, s + length, d, score))
        return results


def find_similar_subsequences(
    query_lstr: str,
    target_lstr: str,
    th_sim: float = 0.92,
    dedup: str = "best-per-start",
) -> list[SubseqMatch]:
    """All contiguous subsequences of the target scoring above th_sim.

    With the default dedup policy, overlapping qualifying candidates that
    share a start index are reduced to the best-scoring one (shortest end
    on ties); ``dedup="none"`` returns every qualifying candidate. Results
    are sorted by (start, descending score).
    """
    return SubsequenceFinder(query_lstr, th_sim).find(target_lstr, dedup=dedup)


def consolidate_matches(
    matches: Sequence[SubseqMatch],
    target_page: Page,
    target_lstr: LayoutString,
    region_nms_iou: float = 0.5,
) -> list[MatchRegion]:
    """Map symbol-range matches to page regions and suppress overlaps.

    Each match becomes the union box of the elements its symbols point at;
    regions are then greedily kept by descending score, dropping any whose
    IoU with an already-kept region exceeds ``region_nms_iou``.
    """
    regions: list[MatchRegion] = []
    for match in matches:
        elem_lo = target_lstr.element_index[match.start]
        elem_hi = target_lstr.element_index[match.end - 1] + 1
        box = bbox_union(e.bbox for e in target_page.elements[elem_lo:elem_hi])
        regions.append(
            MatchRegion(
                target=(target_page.doc_id, target_page.page_no),
                bbox=box,
                element_range=(elem_lo, elem_hi),
                score=match.score,
            )
        )
    regions.sort(key=lambda r: (-r.score, r.element_range))
    kept: list[MatchRegion] = []
    for region in regions:
        if all(iou(region.bbox, other.bbox) <= region_nms_iou for other in kept):
            kept.append(region)
    return kept
