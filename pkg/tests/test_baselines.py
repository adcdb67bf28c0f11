import numpy as np
import pytest

from snipsearch.baselines import (
    kind_codes_for,
    ncc_match,
    rasterize_layout,
    rasterize_snippet,
    ssd_match,
)
from snipsearch.errors import AllWindowsDegenerate, NoValidPosition
from snipsearch.layout import BBox, Element, ElementKind, Page, snippet_clip

from conftest import stack_page


def flat_page(width, height, elements=()):
    return Page("d", 0, width, height, tuple(elements))


TEXT = ElementKind("text", "T")
TITLE = ElementKind("title", "H")


class TestRasterize:
    def test_empty_page_all_zero(self):
        grid = rasterize_layout(flat_page(16, 8), cell_size=4)
        assert grid.shape == (2, 4)
        assert not grid.any()

    def test_full_page_element(self):
        page = flat_page(16, 8, [Element(BBox(0, 0, 16, 8), TEXT)])
        grid = rasterize_layout(page, cell_size=4, kind_codes={"text": 3})
        assert (grid == 3).all()

    def test_two_element_grid_hand_checked(self):
        # text covers the left half, title the bottom-right quadrant;
        # centers at (2,2),(6,2),(10,2),(14,2) / y=2 then y=6.
        page = flat_page(16, 8, [
            Element(BBox(0, 0, 8, 8), TEXT),
            Element(BBox(8, 4, 16, 8), TITLE),
        ])
        grid = rasterize_layout(page, cell_size=4, kind_codes={"text": 1, "title": 2})
        want = np.array([
            [1, 1, 0, 0],
            [1, 1, 2, 2],
        ])
        assert (grid == want).all()

    def test_last_in_reading_order_wins(self):
        page = flat_page(8, 4, [
            Element(BBox(0, 0, 8, 4), TEXT),
            Element(BBox(0, 0, 8, 4), TITLE),
        ])
        grid = rasterize_layout(page, cell_size=4, kind_codes={"text": 1, "title": 2})
        assert (grid == 2).all()

    def test_snippet_frame_matches_page_window(self):
        page = stack_page("d", 0, "THLAF")
        codes = {"figure": 1, "list": 2, "table": 3, "text": 4, "title": 5}
        snip = snippet_clip(page, BBox(0, 0, page.width, page.height))
        smask = rasterize_snippet(snip, cell_size=4, kind_codes=codes)
        pmask = rasterize_layout(page, cell_size=4, kind_codes=codes)
        r0 = int(snip.bbox.y0 // 4)
        c0 = int(snip.bbox.x0 // 4)
        window = pmask[r0 : r0 + smask.shape[0], c0 : c0 + smask.shape[1]]
        assert (window == smask).all()


class TestSsdMatch:
    def test_verbatim_plant_scores_zero(self):
        rng = np.random.default_rng(0)
        target = rng.integers(0, 5, size=(24, 24))
        query = target[5:13, 7:15].copy()
        result = ssd_match(query, target)
        assert result.best.score == 0.0
        assert (result.best.row, result.best.col) == (5, 7)

    def test_query_larger_than_target(self):
        with pytest.raises(NoValidPosition):
            ssd_match(np.zeros((5, 5)), np.zeros((3, 8)))

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(1)
        query = rng.integers(0, 4, size=(8, 8)).astype(float)
        target = rng.integers(0, 4, size=(32, 32)).astype(float)
        result = ssd_match(query, target)
        for r in range(25):
            for c in range(25):
                window = target[r : r + 8, c : c + 8]
                want = float(((window - query) ** 2).sum())
                assert result.score_map[r, c] == pytest.approx(want, abs=1e-9)

    def test_score_map_nonnegative_zero_iff_identical(self):
        rng = np.random.default_rng(2)
        target = rng.integers(0, 3, size=(12, 12))
        query = target[2:6, 3:9].copy()
        result = ssd_match(query, target)
        assert (result.score_map >= 0).all()
        zeros = np.argwhere(result.score_map == 0)
        for r, c in zeros:
            assert (target[r : r + 4, c : c + 6] == query).all()

    def test_accept_threshold_collects_positions(self):
        target = np.zeros((6, 6))
        query = np.zeros((2, 2))
        result = ssd_match(query, target, accept_threshold=0.0)
        assert len(result.accepted) == 25


class TestNccMatch:
    def test_verbatim_plant_scores_one(self):
        rng = np.random.default_rng(3)
        target = rng.integers(0, 5, size=(20, 20))
        query = target[4:12, 2:10].copy()
        assert query.std() > 0
        result = ncc_match(query, target)
        assert result.best.score == pytest.approx(1.0, abs=1e-12)
        assert (result.best.row, result.best.col) == (4, 2)

    def test_constant_query_rejected(self):
        with pytest.raises(AllWindowsDegenerate):
            ncc_match(np.ones((4, 4)), np.random.default_rng(0).normal(size=(8, 8)))

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(4)
        query = rng.normal(size=(6, 7))
        target = rng.normal(size=(20, 21))
        result = ncc_match(query, target)
        q = query - query.mean()
        for r in range(15):
            for c in range(15):
                window = target[r : r + 6, c : c + 7]
                w = window - window.mean()
                denom = np.sqrt((q * q).sum() * (w * w).sum())
                want = (q * w).sum() / denom
                assert result.score_map[r, c] == pytest.approx(want, abs=1e-9)

    def test_degenerate_windows_skipped(self):
        target = np.zeros((8, 8))
        target[0:2, 0:2] = [[1, 2], [3, 4]]
        query = np.array([[1.0, 2.0], [3.0, 4.0]])
        result = ncc_match(query, target, accept_threshold=0.9)
        assert (result.best.row, result.best.col) == (0, 0)
        # Constant all-zero windows are NaN, not matches.
        assert all(not np.isnan(m.score) for m in result.accepted)


class TestKindCodes:
    def test_stable_alphabetical(self, twin_corpus):
        codes = kind_codes_for(twin_corpus)
        assert codes == {"figure": 1, "list": 2, "table": 3, "text": 4, "title": 5}
