"""Key-to-shard routing.

The shard of a record is FNV-1a/64 of "<type-name>/<id>" modulo the shard
count. This is part of the wire contract: it must stay stable across
calls, processes, and implementations, or resharding-by-accident corrupts
the placement of existing documents.
"""

from __future__ import annotations

from ..records import RecordType, fnv1a64


def route(record_type: RecordType, id: str, num_shards: int) -> int:
    if num_shards < 1:
        raise ValueError(f"num_shards must be >= 1, got {num_shards}")
    return fnv1a64(f"{record_type.value}/{id}".encode("utf-8")) % num_shards
