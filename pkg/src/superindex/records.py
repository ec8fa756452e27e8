"""Record schema shared by source nodes, the harvester, and the index.

A record is one catalog entry (Dataset, File or Aggregation) carrying
multi-valued string fields plus header metadata (version, source node,
last-modified timestamp). This module owns validation, the canonical byte
form, and the content digest used for reconciliation; everything here is
pure functions over immutable values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Any, Mapping

FIELD_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")

# Top-level keys of the JSON document form; none of these may be used as a
# field name or the flat form would be ambiguous.
RESERVED_KEYS = frozenset({"type", "id", "version", "source_node", "_timestamp"})

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_ISO_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?Z$"
)

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


class RecordType(Enum):
    DATASET = "Dataset"
    FILE = "File"
    AGGREGATION = "Aggregation"

    @classmethod
    def parse(cls, label: str) -> "RecordType":
        for rt in cls:
            if rt.value == label:
                return rt
        raise UnknownRecordType(label)


class ValidationError(ValueError):
    """A document failed record validation; `code` is machine-readable."""

    code = "invalid"

    def __init__(self, message: str):
        super().__init__(message)


class MissingField(ValidationError):
    code = "missing_field"

    def __init__(self, name: str):
        super().__init__(f"missing required field: {name}")
        self.field_name = name


class UnknownRecordType(ValidationError):
    code = "unknown_record_type"

    def __init__(self, label: Any):
        super().__init__(f"unknown record type: {label!r}")


class BadFieldName(ValidationError):
    code = "bad_field_name"

    def __init__(self, name: Any):
        super().__init__(f"bad field name: {name!r}")


class EmptyValueList(ValidationError):
    code = "empty_value_list"

    def __init__(self, name: str):
        super().__init__(f"field {name!r} has an empty value list")


class BadId(ValidationError):
    code = "bad_id"


class BadVersion(ValidationError):
    code = "bad_version"


class BadTimestamp(ValidationError):
    code = "bad_timestamp"


@dataclass(frozen=True)
class MetadataRecord:
    """One harvested catalog entry.

    `fields` maps field names to value tuples; value order is preserved from
    the source (the first URL may be the preferred one) and is significant
    for the digest.
    """

    record_type: RecordType
    id: str
    version: int
    source_node: str
    timestamp_ms: int
    fields: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.record_type.value, self.id)


def ms_to_iso(ms: int) -> str:
    """Render UTC milliseconds as ISO-8601 with millisecond precision."""
    if ms < 0:
        raise ValueError(f"negative timestamp: {ms}")
    dt = _EPOCH + timedelta(milliseconds=ms)
    return f"{dt:%Y-%m-%dT%H:%M:%S}.{ms % 1000:03d}Z"


def iso_to_ms(text: str) -> int:
    """Parse an ISO-8601 UTC timestamp ("...Z", optional fraction) to ms."""
    m = _ISO_RE.match(text)
    if m is None:
        raise BadTimestamp(f"unparseable timestamp: {text!r}")
    y, mo, d, h, mi, s = (int(g) for g in m.groups()[:6])
    frac = (m.group(7) or "").ljust(3, "0")[:3]
    try:
        dt = datetime(y, mo, d, h, mi, s, tzinfo=timezone.utc)
    except ValueError as e:
        raise BadTimestamp(f"unparseable timestamp: {text!r}") from e
    return int((dt - _EPOCH) / timedelta(milliseconds=1)) + int(frac)


def validate(raw: Mapping[str, Any]) -> MetadataRecord:
    """Validate a parsed key/value document into a MetadataRecord.

    Accepts both the nested shape ({"fields": {...}, "timestamp_ms": ...})
    and the flat external JSON form (field names at top level, "_timestamp"
    as ISO-8601). Raises a ValidationError subclass on any violation.
    """
    if "type" not in raw:
        raise MissingField("type")
    record_type = RecordType.parse(raw["type"])

    if "id" not in raw:
        raise MissingField("id")
    rid = raw["id"]
    if not isinstance(rid, str) or not rid:
        raise BadId(f"id must be a non-empty string, got {rid!r}")
    if any(ord(c) < 0x20 or ord(c) == 0x7F for c in rid):
        raise BadId(f"id contains control characters: {rid!r}")

    if "version" not in raw:
        raise MissingField("version")
    version = raw["version"]
    if not isinstance(version, int) or isinstance(version, bool) or version < 0:
        raise BadVersion(f"version must be an integer >= 0, got {version!r}")

    if "source_node" not in raw:
        raise MissingField("source_node")
    source_node = raw["source_node"]
    if not isinstance(source_node, str):
        raise BadId(f"source_node must be a string, got {source_node!r}")

    if "timestamp_ms" in raw:
        timestamp_ms = raw["timestamp_ms"]
    elif "_timestamp" in raw:
        ts_raw = raw["_timestamp"]
        if not isinstance(ts_raw, str):
            raise BadTimestamp(f"_timestamp must be a string, got {ts_raw!r}")
        timestamp_ms = iso_to_ms(ts_raw)
    else:
        raise MissingField("timestamp")
    if not isinstance(timestamp_ms, int) or isinstance(timestamp_ms, bool):
        raise BadTimestamp(f"timestamp_ms must be an integer, got {timestamp_ms!r}")
    if timestamp_ms <= 0:
        raise BadTimestamp(f"timestamp_ms must be > 0, got {timestamp_ms}")

    if "fields" in raw:
        raw_fields = raw["fields"]
    else:
        raw_fields = {k: v for k, v in raw.items() if k not in RESERVED_KEYS}

    fields: dict[str, tuple[str, ...]] = {}
    for name, values in raw_fields.items():
        if not isinstance(name, str) or not FIELD_NAME_RE.match(name):
            raise BadFieldName(name)
        if name in RESERVED_KEYS:
            raise BadFieldName(name)
        if not isinstance(values, (list, tuple)):
            raise _bad_values(name, values)
        if len(values) == 0:
            raise EmptyValueList(name)
        if not all(isinstance(v, str) for v in values):
            raise _bad_values(name, values)
        fields[name] = tuple(values)

    return MetadataRecord(
        record_type=record_type,
        id=rid,
        version=version,
        source_node=source_node,
        timestamp_ms=timestamp_ms,
        fields=fields,
    )


def _bad_values(name: str, values: Any) -> ValidationError:
    return BadFieldName(f"{name}: values must be a list of strings, got {values!r}")


def to_document(r: MetadataRecord) -> dict[str, Any]:
    """External JSON document form (flat, ISO "_timestamp")."""
    doc: dict[str, Any] = {
        "type": r.record_type.value,
        "id": r.id,
        "version": r.version,
        "source_node": r.source_node,
        "_timestamp": ms_to_iso(r.timestamp_ms),
    }
    for name in sorted(r.fields):
        doc[name] = list(r.fields[name])
    return doc


def canonicalize(r: MetadataRecord) -> bytes:
    """Deterministic byte form: the digest input.

    Header values in fixed order, then field names ascending with their
    values in stored order. 0x1F separates items within an entry, 0x1E
    terminates each entry; integers are ASCII decimal. Injective on record
    content, so any change (including value reordering) changes the bytes.
    """
    out = bytearray()
    header = (
        r.record_type.value,
        r.id,
        str(r.version),
        r.source_node,
        str(r.timestamp_ms),
    )
    out += b"\x1f".join(part.encode("utf-8") for part in header)
    out += b"\x1e"
    for name in sorted(r.fields):
        out += b"\x1f".join(
            part.encode("utf-8") for part in (name, *r.fields[name])
        )
        out += b"\x1e"
    return bytes(out)


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash; bit-exact across implementations."""
    h = FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def digest(r: MetadataRecord) -> int:
    """64-bit content digest over the canonical byte form."""
    return fnv1a64(canonicalize(r))


def digest_hex(d: int) -> str:
    """Wire form of a digest: 16 lowercase hex chars, zero-padded."""
    return f"{d:016x}"
