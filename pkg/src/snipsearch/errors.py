"""Exception hierarchy shared across the package.

Every error carries a stable machine-readable ``code`` so the CLI and the
HTTP service can report structured failures without string matching.
"""


class SnipSearchError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def to_dict(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.detail is not None:
            out["detail"] = self.detail
        return out


class UnknownKind(SnipSearchError):
    """An element kind has no entry in the active alphabet."""

    code = "unknown_kind"


class EmptyQuery(SnipSearchError):
    """A similarity query was issued with an empty layout string."""

    code = "empty_query"


class EmptySnippet(SnipSearchError):
    """A selection rectangle captured no page elements."""

    code = "empty_snippet"


class MalformedAnnotation(SnipSearchError):
    """An annotation file violates its documented schema."""

    code = "malformed_annotation"


class IoFailure(SnipSearchError):
    """A file could not be read or written."""

    code = "io_failure"


class CorruptIndex(SnipSearchError):
    """A corpus index file failed checksum or invariant validation."""

    code = "corrupt_index"


class UnknownDocument(SnipSearchError):
    """A (doc_id, page_no) reference does not exist in the corpus."""

    code = "unknown_document"


class InvalidRequest(SnipSearchError):
    """A search request violates its schema (e.g. two query forms)."""

    code = "invalid_request"


class ShapeMismatch(SnipSearchError):
    """Tensor shapes are inconsistent with the fusion configuration."""

    code = "shape_mismatch"


class TooLong(SnipSearchError):
    """A token sequence exceeds the configured maximum length."""

    code = "too_long"


class NoValidPosition(SnipSearchError):
    """The template is larger than the target mask."""

    code = "no_valid_position"


class AllWindowsDegenerate(SnipSearchError):
    """Every correlation window has zero variance (constant query)."""

    code = "all_windows_degenerate"


class MalformedPrediction(SnipSearchError):
    """A predictions file refers to unknown pairs or violates the schema."""

    code = "malformed_prediction"
