"""Independent reference implementations used as test oracles.

Everything here is written from the documented contracts alone and must
stay independent of the package's own code paths: searches are linear
scans, hashes are re-implemented, scripts replay onto a plain dict. Tests
compare package output against these, exactly.
"""

from __future__ import annotations

from typing import Any, Optional

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
_MASK = (1 << 64) - 1

_SEPARATORS = set("/.,:;=")


def fnv1a64_ref(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK
    return h


def route_ref(type_name: str, id: str, num_shards: int) -> int:
    return fnv1a64_ref(f"{type_name}/{id}".encode("utf-8")) % num_shards


def tokenize_ref(text: str) -> list[str]:
    out: list[str] = []
    cur: list[str] = []
    for ch in text.lower():
        if ch.isspace() or ch in _SEPARATORS:
            if cur:
                out.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if cur:
        out.append("".join(cur))
    return out


def canonical_bytes_ref(doc: dict[str, Any]) -> bytes:
    """Canonical byte form recomputed from the nested document shape."""
    out = bytearray()
    header = (
        doc["type"],
        doc["id"],
        str(doc["version"]),
        doc["source_node"],
        str(doc["timestamp_ms"]),
    )
    out += b"\x1f".join(p.encode("utf-8") for p in header)
    out += b"\x1e"
    for name in sorted(doc["fields"]):
        parts = [name, *doc["fields"][name]]
        out += b"\x1f".join(p.encode("utf-8") for p in parts)
        out += b"\x1e"
    return bytes(out)


def record_as_plain(r: Any) -> dict[str, Any]:
    """Flatten a MetadataRecord-like object to the nested plain-dict shape."""
    return {
        "type": r.record_type.value,
        "id": r.id,
        "version": r.version,
        "source_node": r.source_node,
        "timestamp_ms": r.timestamp_ms,
        "fields": {k: list(v) for k, v in r.fields.items()},
    }


def search_oracle(
    records: list[Any],
    *,
    record_type: str = "Dataset",
    query_text: str = "",
    filters: tuple[tuple[str, str], ...] = (),
    facet_fields: tuple[str, ...] = (),
    from_ms: Optional[int] = None,
    to_ms: Optional[int] = None,
    offset: int = 0,
    limit: int = 10,
) -> tuple[int, list[str], dict[str, dict[str, int]]]:
    """Linear-scan search over the current record set.

    Returns (num_found, page doc ids in order, facet counts over all
    matches).
    """
    tokens = tokenize_ref(query_text)
    matches = []
    for r in records:
        if r.record_type.value != record_type:
            continue
        doc_tokens: set[str] = set()
        for values in r.fields.values():
            for v in values:
                doc_tokens.update(tokenize_ref(v))
        if any(t not in doc_tokens for t in tokens):
            continue
        if any(v not in r.fields.get(f, ()) for f, v in filters):
            continue
        if from_ms is not None and r.timestamp_ms < from_ms:
            continue
        if to_ms is not None and r.timestamp_ms >= to_ms:
            continue
        matches.append(r)
    matches.sort(key=lambda r: (-r.timestamp_ms, r.id))
    facets: dict[str, dict[str, int]] = {}
    for fname in facet_fields:
        counts: dict[str, int] = {}
        for r in matches:
            for v in set(r.fields.get(fname, ())):
                counts[v] = counts.get(v, 0) + 1
        facets[fname] = counts
    page_ids = [r.id for r in matches[offset : offset + limit]]
    return len(matches), page_ids, facets


def search_oracle_q(records: list[Any], q: Any) -> tuple[int, list[str], dict]:
    return search_oracle(
        records,
        record_type=q.record_type.value,
        query_text=q.query_text,
        filters=tuple(q.filters),
        facet_fields=tuple(q.facet_fields),
        from_ms=q.from_ms,
        to_ms=q.to_ms,
        offset=q.offset,
        limit=q.limit,
    )


def replay_ops_oracle(ops: list[tuple[str, Any]]) -> dict[tuple[str, str], Any]:
    """Replay ('upsert', record) / ('delete', (type, id)) onto a plain map."""
    state: dict[tuple[str, str], Any] = {}
    for kind, payload in ops:
        if kind == "upsert":
            state[(payload.record_type.value, payload.id)] = payload
        elif kind == "delete":
            state.pop(payload, None)
        else:
            raise ValueError(kind)
    return state
