"""Query and result shapes shared by the index engine, cluster, and API."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..records import MetadataRecord, RecordType, UnknownRecordType, iso_to_ms

# Hard bound on offset+limit; keeps scatter-gather fan-out per shard sane.
MAX_RESULT_WINDOW = 1_000_000

# Tokenization is part of the wire contract: every replica and every client
# must agree on it. Lowercase, then split on whitespace and / . , : ; =
_TOKEN_SPLIT_RE = re.compile(r"[\s/.,:;=]+")


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT_RE.split(text.lower()) if t]


def record_tokens(r: MetadataRecord) -> set[str]:
    """All tokens of a record, across every field value."""
    tokens: set[str] = set()
    for values in r.fields.values():
        for v in values:
            tokens.update(tokenize(v))
    return tokens


def doc_order_key(r: MetadataRecord) -> tuple[int, str]:
    """Result ordering: timestamp descending, id ascending."""
    return (-r.timestamp_ms, r.id)


class QueryError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class QuerySpec:
    """A parsed search request.

    query_text terms are ANDed; filters are exact-match (field, value)
    pairs, also ANDed; the timestamp window is [from_ms, to_ms).
    """

    query_text: str = ""
    filters: tuple[tuple[str, str], ...] = ()
    record_type: RecordType = RecordType.DATASET
    facet_fields: tuple[str, ...] = ()
    from_ms: int | None = None
    to_ms: int | None = None
    offset: int = 0
    limit: int = 10

    def validated(self) -> "QuerySpec":
        if self.offset < 0:
            raise QueryError("bad_offset", f"offset must be >= 0, got {self.offset}")
        if self.limit < 0:
            raise QueryError("bad_limit", f"limit must be >= 0, got {self.limit}")
        if self.offset + self.limit > MAX_RESULT_WINDOW:
            raise QueryError(
                "window_too_large",
                f"offset+limit must be <= {MAX_RESULT_WINDOW}",
            )
        return self

    def to_json(self) -> dict[str, Any]:
        return {
            "q": self.query_text,
            "type": self.record_type.value,
            "filters": [list(p) for p in self.filters],
            "facets": list(self.facet_fields),
            "from_ms": self.from_ms,
            "to_ms": self.to_ms,
            "offset": self.offset,
            "limit": self.limit,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "QuerySpec":
        return cls(
            query_text=obj.get("q", ""),
            filters=tuple((f, v) for f, v in obj.get("filters", [])),
            record_type=RecordType.parse(obj.get("type", "Dataset")),
            facet_fields=tuple(obj.get("facets", [])),
            from_ms=obj.get("from_ms"),
            to_ms=obj.get("to_ms"),
            offset=obj.get("offset", 0),
            limit=obj.get("limit", 10),
        ).validated()


@dataclass
class SearchResult:
    num_found: int
    docs: list[MetadataRecord] = field(default_factory=list)
    facet_counts: dict[str, dict[str, int]] = field(default_factory=dict)


# Reserved search parameter names; anything else is a field filter, so new
# facet fields never require a parser change.
RESERVED_PARAMS = frozenset(
    {"q", "type", "facets", "fields", "offset", "limit", "from", "to", "format"}
)


def _int_param(params: Any, name: str, default: int) -> int:
    raw = params.get(name)
    if not raw:
        return default
    try:
        return int(raw[0])
    except ValueError:
        raise QueryError(f"bad_{name}", f"{name} must be an integer, got {raw[0]!r}")


def query_from_params(params: Mapping[str, list[str]]) -> QuerySpec:
    """Build a QuerySpec from HTTP query parameters.

    Raises QueryError with a machine-readable code on any bad input; the
    HTTP layer turns that into a 400 response.
    """
    fmt = params.get("format", ["json"])[0]
    if fmt != "json":
        raise QueryError("bad_format", f"unsupported format: {fmt!r}")

    try:
        record_type = RecordType.parse(params.get("type", ["Dataset"])[0])
    except UnknownRecordType as e:
        raise QueryError("bad_type", str(e))

    facets: tuple[str, ...] = ()
    if params.get("facets"):
        facets = tuple(f for f in params["facets"][0].split(",") if f)

    def window_edge(name: str) -> int | None:
        raw = params.get(name)
        if not raw:
            return None
        try:
            return iso_to_ms(raw[0])
        except ValueError:
            raise QueryError("bad_timestamp", f"unparseable {name}: {raw[0]!r}")

    filters = tuple(
        (name, value)
        for name, values in params.items()
        if name not in RESERVED_PARAMS
        for value in values
    )

    return QuerySpec(
        query_text=params.get("q", [""])[0],
        filters=filters,
        record_type=record_type,
        facet_fields=facets,
        from_ms=window_edge("from"),
        to_ms=window_edge("to"),
        offset=_int_param(params, "offset", 0),
        limit=_int_param(params, "limit", 10),
    ).validated()
