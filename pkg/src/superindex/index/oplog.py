"""Durable append-only operation log and snapshot files.

Log frames are `[u32 length][payload][u64 FNV-1a of payload]`, integers
big-endian. The payload is compact JSON: {"seq":..., "op":"upsert",
"doc":...} or {"seq":..., "op":"delete", "key":{"type":..., "id":...}}.
A torn frame at the tail (crash mid-append) is truncated on replay; a
digest mismatch anywhere else is corruption and raises.

Snapshot files hold one {"seq": N} header line followed by a JSON array of
document forms sorted by (type, id), so equal doc sets serialize to equal
bytes.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import Any, Iterable

from ..records import MetadataRecord, RecordType, fnv1a64, to_document, validate

_LEN = struct.Struct(">I")
_SUM = struct.Struct(">Q")


class CorruptFrame(Exception):
    """A log frame failed its digest check."""


def op_upsert(seq: int, record: MetadataRecord) -> dict[str, Any]:
    return {"seq": seq, "op": "upsert", "doc": to_document(record)}


def op_delete(seq: int, record_type: RecordType, id: str) -> dict[str, Any]:
    return {"seq": seq, "op": "delete", "key": {"type": record_type.value, "id": id}}


def op_key(op: dict[str, Any]) -> tuple[str, str]:
    if op["op"] == "upsert":
        return (op["doc"]["type"], op["doc"]["id"])
    return (op["key"]["type"], op["key"]["id"])


def encode_frame(payload: bytes) -> bytes:
    return _LEN.pack(len(payload)) + payload + _SUM.pack(fnv1a64(payload))


def encode_op_frame(op: dict[str, Any]) -> bytes:
    payload = json.dumps(op, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return encode_frame(payload)


def read_frames(data: bytes) -> tuple[list[bytes], int]:
    """Decode frames from a byte buffer.

    Returns (payloads, clean_length). clean_length < len(data) means the
    tail was torn; callers may truncate the file to that length. Digest
    mismatches on complete frames raise CorruptFrame.
    """
    payloads: list[bytes] = []
    pos = 0
    n = len(data)
    while pos < n:
        if pos + _LEN.size > n:
            break
        (length,) = _LEN.unpack_from(data, pos)
        end = pos + _LEN.size + length + _SUM.size
        if end > n:
            break
        payload = data[pos + _LEN.size : pos + _LEN.size + length]
        (want,) = _SUM.unpack_from(data, pos + _LEN.size + length)
        if fnv1a64(payload) != want:
            raise CorruptFrame(f"frame at byte {pos}: digest mismatch")
        payloads.append(payload)
        pos = end
    return payloads, pos


class OpLogFile:
    """Append-only op log bound to one file path."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "ab")

    def append(self, op: dict[str, Any]) -> None:
        self._fh.write(encode_op_frame(op))
        self._fh.flush()

    def replay(self) -> list[dict[str, Any]]:
        """Read back all ops, truncating a torn tail frame if present."""
        self._fh.flush()
        data = self.path.read_bytes()
        payloads, clean = read_frames(data)
        if clean < len(data):
            self._fh.close()
            with open(self.path, "r+b") as fh:
                fh.truncate(clean)
            self._fh = open(self.path, "ab")
        return [json.loads(p) for p in payloads]

    def rewrite(self, ops: Iterable[dict[str, Any]]) -> None:
        """Replace the log contents atomically (compaction)."""
        self._fh.close()
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "wb") as fh:
            for op in ops:
                fh.write(encode_op_frame(op))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)
        self._fh = open(self.path, "ab")

    def close(self) -> None:
        self._fh.close()


def write_snapshot_file(
    path: str | Path, seq: int, records: Iterable[MetadataRecord]
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: r.key)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"seq": seq}, separators=(",", ":")))
        fh.write("\n")
        docs = [to_document(r) for r in ordered]
        fh.write(json.dumps(docs, sort_keys=True, separators=(",", ":")))
        fh.write("\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def read_snapshot_file(path: str | Path) -> tuple[int, list[MetadataRecord]]:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        docs = json.loads(fh.read())
    return header["seq"], [validate(d) for d in docs]
