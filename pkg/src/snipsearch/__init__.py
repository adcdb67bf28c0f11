"""Layout-string snippet search over document layout annotations."""

__version__ = "0.1.0"

from .alphabet import FLAMINGO, PROFILES, PUBLAYNET, Alphabet, get_profile
from .errors import (
    AllWindowsDegenerate,
    CorruptIndex,
    EmptyQuery,
    EmptySnippet,
    InvalidRequest,
    IoFailure,
    MalformedAnnotation,
    MalformedPrediction,
    NoValidPosition,
    ShapeMismatch,
    SnipSearchError,
    TooLong,
    UnknownDocument,
    UnknownKind,
)
from .ingest import Corpus, load_index, parse_coco_layout, parse_form_layout, save_index
from .layout import (
    BBox,
    Element,
    ElementKind,
    LayoutString,
    Page,
    Snippet,
    bbox_union,
    encode_layout_string,
    intersection_area,
    iou,
    layout_string_of,
    reading_order_sort,
    snippet_clip,
)
from .mining import (
    DatasetStats,
    PairRecord,
    QueryRef,
    dataset_stats,
    extract_query_snippets,
    load_pairs,
    mine_pairs,
    save_pairs,
    split_seen_unseen,
)
from .search import SearchMatch, SearchRequest, SearchResponse, search_snippet
from .similarity import (
    MatchRegion,
    SubseqMatch,
    SubsequenceFinder,
    consolidate_matches,
    edit_distance,
    edit_distance_bounded,
    find_similar_subsequences,
    g_sim,
)

__all__ = [name for name in dir() if not name.startswith("_")]
