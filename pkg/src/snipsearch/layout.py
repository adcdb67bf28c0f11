"""Geometric layout primitives, reading-order sorting, and layout strings.

A page is a flat list of typed, axis-aligned boxes. Sorting them into
natural reading order (top-to-bottom bands, left-to-right within a band)
and substituting one character per element kind yields the page's layout
string, the representation every similarity operation works on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .alphabet import Alphabet
from .errors import EmptySnippet


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in page units, origin top-left, y growing downward."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        for v in (self.x0, self.y0, self.x1, self.y1):
            if not math.isfinite(v):
                raise ValueError(f"non-finite bbox coordinate: {self}")
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError(f"inverted bbox: {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


def bbox_union(boxes: Iterable[BBox]) -> BBox:
    boxes = list(boxes)
    if not boxes:
        raise ValueError("union of zero boxes")
    return BBox(
        min(b.x0 for b in boxes),
        min(b.y0 for b in boxes),
        max(b.x1 for b in boxes),
        max(b.y1 for b in boxes),
    )


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x1, b.x1) - max(a.x0, b.x0)
    h = min(a.y1, b.y1) - max(a.y0, b.y0)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 when the union has zero area."""
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class ElementKind:
    name: str
    symbol: str


@dataclass(frozen=True)
class Element:
    bbox: BBox
    kind: ElementKind
    text: Optional[str] = None


@dataclass(frozen=True)
class Page:
    doc_id: str
    page_no: int
    width: float
    height: float
    elements: tuple[Element, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"non-positive page dimensions: {self.width}x{self.height}")


@dataclass(frozen=True)
class LayoutString:
    """Symbol sequence with per-symbol back-pointers into the element list."""

    symbols: str
    element_index: tuple[int, ...]

    def __post_init__(self):
        if len(self.symbols) != len(self.element_index):
            raise ValueError("symbols and element_index lengths differ")

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class Snippet:
    """A query region: reading-ordered elements plus their layout string.

    ``elem_range`` is the half-open index range the elements occupy in the
    source page's reading order, when they form a contiguous run; it is None
    for selections that skip elements.
    """

    source: tuple[str, int]
    bbox: BBox
    elements: tuple[Element, ...]
    lstr: LayoutString
    elem_range: Optional[tuple[int, int]] = None


def reading_order_sort(elements: Sequence[Element], row_epsilon: float = 0.5) -> list[Element]:
    """Sort elements into natural reading order.

    Elements are grouped into horizontal bands: two elements share a band
    when their vertical overlap is at least ``row_epsilon`` times the shorter
    element's height (transitively closed). Bands run top to bottom; within a
    band, elements run left to right, with (y0, input index) tie-breaks so
    the order is deterministic.
    """
    if row_epsilon < 0:
        raise ValueError("row_epsilon must be >= 0")
    n = len(elements)
    if n <= 1:
        return list(elements)

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    boxes = [e.bbox for e in elements]
    for i in range(n):
        bi = boxes[i]
        hi = bi.height
        for j in range(i + 1, n):
            bj = boxes[j]
            overlap = min(bi.y1, bj.y1) - max(bi.y0, bj.y0)
            if overlap < 0:
                continue
            if overlap >= row_epsilon * min(hi, bj.height):
                union(i, j)

    bands: dict[int, list[int]] = {}
    for i in range(n):
        bands.setdefault(find(i), []).append(i)

    def band_key(members: list[int]):
        return (
            min(boxes[i].y0 for i in members),
            min(boxes[i].x0 for i in members),
            min(members),
        )

    ordered: list[Element] = []
    for members in sorted(bands.values(), key=band_key):
        members.sort(key=lambda i: (boxes[i].x0, boxes[i].y0, i))
        ordered.extend(elements[i] for i in members)
    return ordered


def encode_layout_string(elements: Sequence[Element], alphabet: Alphabet) -> LayoutString:
    """Encode reading-ordered elements as a layout string.

    Raises UnknownKind when an element's kind is missing from the alphabet.
    """
    symbols = "".join(alphabet.symbol_for(e.kind.name) for e in elements)
    return LayoutString(symbols, tuple(range(len(elements))))


def snippet_clip(page: Page, bbox: BBox, containment_threshold: float = 0.5) -> Snippet:
    """Clip a selection rectangle to a snippet of the page.

    An element is captured when the intersection over its own area reaches
    ``containment_threshold`` (zero-area elements are captured when they lie
    inside the rectangle). Raises EmptySnippet when nothing qualifies.
    """
    ordered = reading_order_sort(page.elements)
    picked: list[tuple[int, Element]] = []
    for idx, el in enumerate(ordered):
        area = el.bbox.area
        if area > 0:
            ratio = intersection_area(el.bbox, bbox) / area
            hit = ratio >= containment_threshold
        else:
            hit = (
                bbox.x0 <= el.bbox.x0 <= bbox.x1
                and bbox.y0 <= el.bbox.y0 <= bbox.y1
            )
        if hit:
            picked.append((idx, el))
    if not picked:
        raise EmptySnippet(
            "selection captured no elements",
            detail={"bbox": bbox.as_list(), "threshold": containment_threshold},
        )
    indices = [i for i, _ in picked]
    chosen = tuple(e for _, e in picked)
    contiguous = indices == list(range(indices[0], indices[-1] + 1))
    elem_range = (indices[0], indices[-1] + 1) if contiguous else None
    return Snippet(
        source=(page.doc_id, page.page_no),
        bbox=bbox_union(e.bbox for e in chosen),
        elements=chosen,
        lstr=layout_string_of(chosen),
        elem_range=elem_range,
    )


def layout_string_of(elements: Sequence[Element]) -> LayoutString:
    """Layout string from the symbols the element kinds already carry."""
    return LayoutString(
        "".join(e.kind.symbol for e in elements),
        tuple(range(len(elements))),
    )
