"""Corpus ingestion: annotation parsing and index persistence.

Two input formats are supported:

* COCO-style annotations (``images``/``categories``/``annotations`` with
  ``bbox: [x, y, w, h]``), the convention article-layout datasets ship in;
  every image becomes a single-page document keyed by its file name.
* A generic form-layout document: ``{"doc_id"?, "pages": [{"doc_id"?,
  "width", "height", "elements": [{"kind", "bbox": [x0, y0, x1, y1],
  "text"?}]}]}`` with top-left-origin corner coordinates.

Parsing is deterministic: identical bytes produce an identical corpus,
including element order (elements are stored in reading order). Elements
fully outside their page are dropped with a logged count; partial overlaps
are clamped to the page. The persisted index is a canonical, checksummed
JSON container that round-trips byte-identically.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .alphabet import Alphabet
from .errors import CorruptIndex, IoFailure, MalformedAnnotation
from .layout import (
    BBox,
    Element,
    ElementKind,
    LayoutString,
    Page,
    layout_string_of,
    reading_order_sort,
)

log = logging.getLogger(__name__)

INDEX_FORMAT = "snipsearch-index"
INDEX_VERSION = 1


def canonical_json(obj: object) -> str:
    """Stable serialization: sorted keys, no whitespace, escaped non-ASCII."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


@dataclass(frozen=True)
class Corpus:
    """An immutable set of pages with precomputed layout strings."""

    corpus_id: str
    alphabet: Alphabet
    pages: tuple[Page, ...]
    lstrs: tuple[LayoutString, ...]
    _page_pos: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.pages) != len(self.lstrs):
            raise ValueError("pages and layout strings out of step")
        pos: dict[tuple[str, int], int] = {}
        for i, page in enumerate(self.pages):
            key = (page.doc_id, page.page_no)
            if key in pos:
                raise MalformedAnnotation(f"duplicate page identity {key}")
            pos[key] = i
        object.__setattr__(self, "_page_pos", pos)

    def __len__(self) -> int:
        return len(self.pages)

    def page_index(self, doc_id: str, page_no: int) -> Optional[int]:
        return self._page_pos.get((doc_id, page_no))

    def doc_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for page in self.pages:
            seen.setdefault(page.doc_id, None)
        return list(seen)


def _clamp_elements(
    raw: Iterable[tuple[BBox, ElementKind, Optional[str]]],
    width: float,
    height: float,
) -> tuple[list[Element], int]:
    kept: list[Element] = []
    dropped = 0
    for box, kind, text in raw:
        if box.x1 <= 0 or box.y1 <= 0 or box.x0 >= width or box.y0 >= height:
            dropped += 1
            continue
        clamped = BBox(
            max(0.0, box.x0),
            max(0.0, box.y0),
            min(width, box.x1),
            min(height, box.y1),
        )
        kept.append(Element(clamped, kind, text))
    return kept, dropped


def _build_corpus(alphabet: Alphabet, page_specs: list[dict]) -> Corpus:
    pages: list[Page] = []
    lstrs: list[LayoutString] = []
    total_dropped = 0
    for spec in page_specs:
        kept, dropped = _clamp_elements(spec["raw"], spec["width"], spec["height"])
        total_dropped += dropped
        ordered = tuple(reading_order_sort(kept))
        page = Page(spec["doc_id"], spec["page_no"], spec["width"], spec["height"], ordered)
        pages.append(page)
        lstrs.append(layout_string_of(ordered))
    if total_dropped:
        log.warning("dropped %d elements lying fully outside their page", total_dropped)
    payload = _corpus_payload("", alphabet, pages, lstrs)
    del payload["corpus_id"]
    corpus_id = hashlib.sha256(canonical_json(payload).encode()).hexdigest()[:12]
    return Corpus(corpus_id, alphabet, tuple(pages), tuple(lstrs))


def _as_text(data: bytes | str) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedAnnotation(f"annotation file is not UTF-8: {exc}") from exc
    return data


def _load_json(data: bytes | str) -> object:
    try:
        return json.loads(_as_text(data))
    except json.JSONDecodeError as exc:
        raise MalformedAnnotation(f"annotation file is not valid JSON: {exc}") from exc


def parse_coco_layout(data: bytes | str, alphabet: Alphabet) -> Corpus:
    """Parse COCO-style layout annotations into a corpus."""
    doc = _load_json(data)
    if not isinstance(doc, dict):
        raise MalformedAnnotation("COCO root must be an object")
    for key in ("images", "categories", "annotations"):
        if key not in doc or not isinstance(doc[key], list):
            raise MalformedAnnotation(f"COCO file missing list field {key!r}")

    categories: dict[object, str] = {}
    for i, cat in enumerate(doc["categories"]):
        try:
            categories[cat["id"]] = str(cat["name"])
        except (KeyError, TypeError) as exc:
            raise MalformedAnnotation(f"bad category record {i}: {exc}") from exc

    image_meta: dict[object, dict] = {}
    order: list[object] = []
    for i, img in enumerate(doc["images"]):
        try:
            image_id = img["id"]
            width = float(img["width"])
            height = float(img["height"])
            file_name = str(img.get("file_name", f"image-{image_id}"))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedAnnotation(f"bad image record {i}: {exc}") from exc
        if width <= 0 or height <= 0:
            raise MalformedAnnotation(
                f"image record {i}: non-positive dimensions {width}x{height}"
            )
        if image_id in image_meta:
            raise MalformedAnnotation(f"image record {i}: duplicate id {image_id!r}")
        image_meta[image_id] = {
            "doc_id": file_name,
            "page_no": 0,
            "width": width,
            "height": height,
            "raw": [],
        }
        order.append(image_id)

    for i, ann in enumerate(doc["annotations"]):
        try:
            image_id = ann["image_id"]
            cat_id = ann["category_id"]
            x, y, w, h = (float(v) for v in ann["bbox"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedAnnotation(f"bad annotation record {i}: {exc}") from exc
        if image_id not in image_meta:
            raise MalformedAnnotation(f"annotation record {i}: unknown image_id {image_id!r}")
        if cat_id not in categories:
            raise MalformedAnnotation(f"annotation record {i}: unknown category_id {cat_id!r}")
        if w < 0 or h < 0:
            raise MalformedAnnotation(f"annotation record {i}: negative box size {w}x{h}")
        kind_name = categories[cat_id]
        try:
            canonical = alphabet.canonical_kind(kind_name)
        except Exception as exc:
            raise MalformedAnnotation(
                f"annotation record {i}: kind {kind_name!r} not in alphabet "
                f"{alphabet.profile_name!r}"
            ) from exc
        kind = ElementKind(canonical, alphabet.mapping[canonical])
        image_meta[image_id]["raw"].append((BBox(x, y, x + w, y + h), kind, None))

    return _build_corpus(alphabet, [image_meta[i] for i in order])


def parse_form_layout(data: bytes | str, alphabet: Alphabet) -> Corpus:
    """Parse the generic form-layout format into a corpus."""
    doc = _load_json(data)
    if not isinstance(doc, dict) or not isinstance(doc.get("pages"), list):
        raise MalformedAnnotation("form layout root must be an object with a 'pages' list")
    default_doc = str(doc.get("doc_id", "doc"))
    page_counters: dict[str, int] = {}
    specs: list[dict] = []
    for i, pg in enumerate(doc["pages"]):
        if not isinstance(pg, dict):
            raise MalformedAnnotation(f"page record {i} is not an object")
        try:
            width = float(pg["width"])
            height = float(pg["height"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedAnnotation(f"bad page record {i}: {exc}") from exc
        if width <= 0 or height <= 0:
            raise MalformedAnnotation(f"page record {i}: non-positive dimensions")
        doc_id = str(pg.get("doc_id", default_doc))
        page_no = pg.get("page_no")
        if page_no is None:
            page_no = page_counters.get(doc_id, 0)
        page_counters[doc_id] = int(page_no) + 1
        raw = []
        for j, el in enumerate(pg.get("elements", [])):
            try:
                kind_name = str(el["kind"])
                x0, y0, x1, y1 = (float(v) for v in el["bbox"])
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedAnnotation(f"bad element record {i}/{j}: {exc}") from exc
            if x0 > x1 or y0 > y1:
                raise MalformedAnnotation(f"element record {i}/{j}: inverted bbox")
            try:
                canonical = alphabet.canonical_kind(kind_name)
            except Exception:
                raise MalformedAnnotation(
                    f"element record {i}/{j}: kind {kind_name!r} not in alphabet "
                    f"{alphabet.profile_name!r}"
                ) from None
            kind = ElementKind(canonical, alphabet.mapping[canonical])
            text = el.get("text")
            raw.append((BBox(x0, y0, x1, y1), kind, None if text is None else str(text)))
        specs.append(
            {"doc_id": doc_id, "page_no": int(page_no), "width": width,
             "height": height, "raw": raw}
        )
    return _build_corpus(alphabet, specs)


def _corpus_payload(corpus_id, alphabet, pages, lstrs) -> dict:
    page_records = []
    for page, lstr in zip(pages, lstrs):
        elements = []
        for el in page.elements:
            rec: dict = {"kind": el.kind.name, "bbox": el.bbox.as_list()}
            if el.text is not None:
                rec["text"] = el.text
            elements.append(rec)
        page_records.append(
            {
                "doc_id": page.doc_id,
                "page_no": page.page_no,
                "width": page.width,
                "height": page.height,
                "elements": elements,
                "lstr": lstr.symbols,
            }
        )
    return {
        "corpus_id": corpus_id,
        "alphabet": alphabet.to_dict(),
        "pages": page_records,
    }


def save_index(corpus: Corpus, path: str) -> None:
    """Write the corpus to a canonical, checksummed index file."""
    payload = _corpus_payload(corpus.corpus_id, corpus.alphabet, corpus.pages, corpus.lstrs)
    body = canonical_json(payload)
    container = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "sha256": hashlib.sha256(body.encode()).hexdigest(),
        "corpus": payload,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(container))
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write index {path!r}: {exc}") from exc


def load_index(path: str) -> Corpus:
    """Load an index file, validating checksum and structural invariants."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read index {path!r}: {exc}") from exc
    try:
        container = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptIndex(f"index {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(container, dict) or container.get("format") != INDEX_FORMAT:
        raise CorruptIndex(f"index {path!r} has an unrecognized container format")
    if container.get("version") != INDEX_VERSION:
        raise CorruptIndex(f"index {path!r} has unsupported version {container.get('version')}")
    payload = container.get("corpus")
    digest = hashlib.sha256(canonical_json(payload).encode()).hexdigest()
    if digest != container.get("sha256"):
        raise CorruptIndex(f"index {path!r} failed its checksum")

    try:
        alphabet = Alphabet.from_dict(payload["alphabet"])
        pages: list[Page] = []
        lstrs: list[LayoutString] = []
        for rec in payload["pages"]:
            elements = tuple(
                Element(
                    BBox(*el["bbox"]),
                    ElementKind(el["kind"], alphabet.mapping[el["kind"]]),
                    el.get("text"),
                )
                for el in rec["elements"]
            )
            page = Page(
                rec["doc_id"], int(rec["page_no"]),
                float(rec["width"]), float(rec["height"]), elements,
            )
            stored = rec["lstr"]
            recomputed = layout_string_of(tuple(reading_order_sort(elements)))
            if recomputed.symbols != stored or tuple(elements) != tuple(
                reading_order_sort(elements)
            ):
                raise CorruptIndex(
                    f"page ({page.doc_id}, {page.page_no}): stored layout string "
                    "does not match its elements"
                )
            for el in elements:
                if not (0 <= el.bbox.x0 and el.bbox.x1 <= page.width
                        and 0 <= el.bbox.y0 and el.bbox.y1 <= page.height):
                    raise CorruptIndex(
                        f"page ({page.doc_id}, {page.page_no}): element outside page bounds"
                    )
            pages.append(page)
            lstrs.append(recomputed)
        return Corpus(str(payload["corpus_id"]), alphabet, tuple(pages), tuple(lstrs))
    except CorruptIndex:
        raise
    except Exception as exc:
        raise CorruptIndex(f"index {path!r} failed validation: {exc}") from exc
