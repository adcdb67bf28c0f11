"""Alphabets mapping element kinds to single-character layout symbols.

An alphabet is configuration data, not code: each corpus profile declares
which element kinds exist and which character encodes each kind. Kind names
are matched case-insensitively, with an optional alias layer so that minor
naming variants ("TextBlock" vs "text") resolve to one canonical kind.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import MalformedAnnotation, UnknownKind


def _normalize(kind: str) -> str:
    return "".join(ch for ch in kind.strip().lower() if ch not in " _-")


@dataclass(frozen=True)
class Alphabet:
    """Injective kind -> symbol map for one corpus profile."""

    profile_name: str
    mapping: dict[str, str]
    aliases: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        symbols = list(self.mapping.values())
        if len(set(symbols)) != len(symbols):
            raise MalformedAnnotation(
                f"alphabet {self.profile_name!r} maps two kinds to one symbol"
            )
        for sym in symbols:
            if not isinstance(sym, str) or len(sym) != 1:
                raise MalformedAnnotation(
                    f"alphabet {self.profile_name!r} symbol {sym!r} is not a single character"
                )

    def canonical_kind(self, kind: str) -> str:
        """Resolve a raw kind name to its canonical form, or raise UnknownKind."""
        norm = _normalize(kind)
        norm = self.aliases.get(norm, norm)
        if norm not in self.mapping:
            raise UnknownKind(
                f"kind {kind!r} has no entry in alphabet {self.profile_name!r}",
                detail={"kind": kind},
            )
        return norm

    def symbol_for(self, kind: str) -> str:
        return self.mapping[self.canonical_kind(kind)]

    def __contains__(self, kind: str) -> bool:
        try:
            self.canonical_kind(kind)
        except UnknownKind:
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "profile_name": self.profile_name,
            "map": dict(sorted(self.mapping.items())),
            "aliases": dict(sorted(self.aliases.items())),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Alphabet":
        try:
            return cls(obj["profile_name"], dict(obj["map"]), dict(obj.get("aliases", {})))
        except (KeyError, TypeError) as exc:
            raise MalformedAnnotation(f"bad alphabet record: {exc}") from exc

    @classmethod
    def from_file(cls, path: str) -> "Alphabet":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# Built-in profiles. Forms corpora use fillable widgets and text blocks;
# article corpora use text/title/list/table/figure. The characters are a
# configuration choice and can be overridden with a profile file.
FLAMINGO = Alphabet(
    "flamingo",
    {"text": "T", "widget": "W"},
    aliases={"textblock": "text", "fillablearea": "widget", "fillable": "widget"},
)

PUBLAYNET = Alphabet(
    "publaynet",
    {"text": "T", "title": "H", "list": "L", "table": "A", "figure": "F"},
)

PROFILES: dict[str, Alphabet] = {
    "flamingo": FLAMINGO,
    "publaynet": PUBLAYNET,
}


def get_profile(name: str) -> Alphabet:
    try:
        return PROFILES[name]
    except KeyError:
        raise MalformedAnnotation(
            f"unknown alphabet profile {name!r}; available: {sorted(PROFILES)}"
        ) from None
