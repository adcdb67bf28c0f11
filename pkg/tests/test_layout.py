import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snipsearch.alphabet import FLAMINGO, PUBLAYNET
from snipsearch.errors import EmptySnippet, UnknownKind
from snipsearch.layout import (
    BBox,
    Element,
    ElementKind,
    Page,
    bbox_union,
    encode_layout_string,
    intersection_area,
    iou,
    reading_order_sort,
    snippet_clip,
)

from conftest import stack_page

TEXT = ElementKind("text", "T")
WIDGET = ElementKind("widget", "W")


def box_el(x0, y0, x1, y1, kind=TEXT):
    return Element(BBox(x0, y0, x1, y1), kind)


class TestBBox:
    def test_rejects_inverted(self):
        with pytest.raises(ValueError):
            BBox(5, 0, 1, 10)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            BBox(0, 0, float("inf"), 1)

    def test_union_and_intersection(self):
        a, b = BBox(0, 0, 2, 2), BBox(1, 0, 3, 2)
        assert bbox_union([a, b]) == BBox(0, 0, 3, 2)
        assert intersection_area(a, b) == 2.0
        # inter 2, union 4 + 4 - 2 = 6
        assert iou(a, b) == pytest.approx(1 / 3)


class TestReadingOrder:
    def test_top_bottom(self):
        a = box_el(0, 0, 10, 10)
        b = box_el(0, 20, 10, 30)
        assert reading_order_sort([b, a]) == [a, b]

    def test_left_right_within_row(self):
        a = box_el(50, 0, 60, 10)
        b = box_el(0, 0, 10, 10)
        assert reading_order_sort([a, b]) == [b, a]

    def test_grid_row_major(self):
        # 3x3 grid supplied shuffled must come back row-major; the oracle is
        # a plain lexicographic (row, column) sort of the construction.
        cells = [
            box_el(10 * c, 10 * r, 10 * c + 8, 10 * r + 8)
            for r in range(3)
            for c in range(3)
        ]
        shuffled = cells[:]
        random.Random(7).shuffle(shuffled)
        assert reading_order_sort(shuffled) == cells

    def test_jittered_row_stays_one_band(self):
        # y jitter below half the shorter height must not split a row
        a = box_el(0, 0.0, 10, 10.0)
        b = box_el(20, 3.0, 30, 13.0)
        c = box_el(40, 1.5, 50, 11.5)
        assert reading_order_sort([c, b, a]) == [a, b, c]

    def test_empty_input(self):
        assert reading_order_sort([]) == []

    @given(
        st.lists(
            st.tuples(
                st.integers(0, 40), st.integers(0, 40),
                st.integers(1, 15), st.integers(1, 15),
            ),
            max_size=12,
        )
    )
    @settings(max_examples=60)
    def test_permutation_and_idempotence(self, quads):
        elements = [box_el(x, y, x + w, y + h) for x, y, w, h in quads]
        ordered = reading_order_sort(elements)
        assert sorted(map(id, ordered)) == sorted(map(id, elements))
        assert reading_order_sort(ordered) == ordered

    @given(
        st.lists(
            st.tuples(
                st.integers(0, 40), st.integers(0, 40),
                st.integers(1, 15), st.integers(1, 15),
            ),
            max_size=10,
        ),
        st.integers(-30, 30),
        st.integers(-30, 30),
    )
    @settings(max_examples=60)
    def test_translation_invariance(self, quads, dx, dy):
        elements = [box_el(x, y, x + w, y + h) for x, y, w, h in quads]
        moved = [
            box_el(x + dx, y + dy, x + dx + w, y + dy + h) for x, y, w, h in quads
        ]
        order_a = [elements.index(e) for e in reading_order_sort(elements)]
        order_b = [moved.index(e) for e in reading_order_sort(moved)]
        assert order_a == order_b


class TestEncodeLayoutString:
    def test_flamingo_substitution(self):
        els = [box_el(0, 0, 10, 10, TEXT), box_el(0, 20, 10, 30, WIDGET)]
        lstr = encode_layout_string(els, FLAMINGO)
        assert lstr.symbols == "TW"
        assert lstr.element_index == (0, 1)

    def test_empty(self):
        assert encode_layout_string([], FLAMINGO).symbols == ""

    def test_publaynet_four_kinds(self):
        page = stack_page("d", 0, "HTFT")
        lstr = encode_layout_string(list(page.elements), PUBLAYNET)
        assert lstr.symbols == "HTFT"

    def test_unknown_kind(self):
        els = [box_el(0, 0, 1, 1, ElementKind("signature", "S"))]
        with pytest.raises(UnknownKind):
            encode_layout_string(els, FLAMINGO)

    def test_length_matches_and_index_decodes(self):
        page = stack_page("d", 0, "TTHAL")
        lstr = encode_layout_string(list(page.elements), PUBLAYNET)
        assert len(lstr) == len(page.elements)
        decoded = [page.elements[i] for i in lstr.element_index]
        assert decoded == list(page.elements)


class TestSnippetClip:
    def test_whole_page(self):
        page = stack_page("d", 0, "THLA")
        snip = snippet_clip(page, BBox(0, 0, page.width, page.height))
        assert snip.lstr.symbols == "THLA"
        assert snip.elem_range == (0, 4)
        assert snip.bbox == bbox_union(e.bbox for e in page.elements)

    def test_low_overlap_is_empty(self):
        page = stack_page("d", 0, "T")
        el = page.elements[0]
        # Cover ~10% of the element's area with the default 0.5 threshold.
        sliver = BBox(el.bbox.x0, el.bbox.y0, el.bbox.x1, el.bbox.y0 + el.bbox.height * 0.1)
        with pytest.raises(EmptySnippet):
            snippet_clip(page, sliver)

    def test_two_of_four_elements(self):
        page = stack_page("d", 0, "THLA")
        top_two = BBox(0, 0, page.width, 2 * 32.0)
        snip = snippet_clip(page, top_two)
        assert snip.lstr.symbols == "TH"
        assert snip.elem_range == (0, 2)
        # Contiguous selection: the snippet string is a substring of the page's.
        assert "TH" == "THLA"[0:2]

    def test_own_bounds_reproduce_page_string(self, twin_corpus):
        page = twin_corpus.pages[0]
        snip = snippet_clip(page, BBox(0, 0, page.width, page.height))
        assert snip.lstr.symbols == twin_corpus.lstrs[0].symbols


class TestPage:
    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            Page("d", 0, 0, 100, ())
