"""Shared builders: symbol-string pages, stacked layouts, twin corpora."""

from __future__ import annotations

import json

import pytest

from snipsearch.alphabet import PUBLAYNET
from snipsearch.ingest import parse_form_layout
from snipsearch.layout import BBox, Element, ElementKind, Page

# Reverse map of the publaynet profile: symbol -> canonical kind name.
KIND_OF = {sym: kind for kind, sym in PUBLAYNET.mapping.items()}
SYMBOLS = "".join(sorted(KIND_OF))

ROW_PITCH = 32.0
ROW_HEIGHT = 24.0
LEFT_MARGIN = 8.0
PAGE_WIDTH = 136.0


def element_for(symbol: str, slot: int, width_scale: float = 1.0,
                height_scale: float = 1.0) -> Element:
    """One stacked element: row `slot`, width keyed to the symbol."""
    kind = KIND_OF[symbol]
    code = SYMBOLS.index(symbol) + 1
    width = (24.0 + 16.0 * code) * width_scale
    y0 = ROW_PITCH * slot
    return Element(
        BBox(LEFT_MARGIN, y0, LEFT_MARGIN + width, y0 + ROW_HEIGHT * height_scale),
        ElementKind(kind, symbol),
    )


def stack_page(doc_id: str, page_no: int, symbols: str,
               scales: list[tuple[float, float]] | None = None) -> Page:
    """A page whose reading order spells `symbols` top to bottom."""
    elements = []
    for i, sym in enumerate(symbols):
        ws, hs = scales[i] if scales else (1.0, 1.0)
        elements.append(element_for(sym, i, ws, hs))
    return Page(doc_id, page_no, PAGE_WIDTH, ROW_PITCH * len(symbols) + 8.0,
                tuple(elements))


def form_payload_for(pages: list[Page]) -> str:
    """Serialize pages to the generic form-layout input format."""
    return json.dumps({
        "pages": [
            {
                "doc_id": p.doc_id,
                "page_no": p.page_no,
                "width": p.width,
                "height": p.height,
                "elements": [
                    {"kind": e.kind.name, "bbox": e.bbox.as_list()} for e in p.elements
                ],
            }
            for p in pages
        ]
    })


@pytest.fixture
def twin_corpus():
    """Two identical single-page documents, A and B."""
    pages = [stack_page("A", 0, "THLAF"), stack_page("B", 0, "THLAF")]
    return parse_form_layout(form_payload_for(pages), PUBLAYNET)
