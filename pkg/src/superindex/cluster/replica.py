"""One physical replica of a shard's index.

Wraps the embedded index with the replication surface: idempotent apply
keyed by shard sequence number, watermark tracking, snapshot install for
bootstrap, and the inventory/key-lookup reads the harvester needs. The
kill switch makes in-process fault injection behave like a dead process.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Any, Optional

from ..index.engine import CommitPoint, FacetedIndex
from ..index.query import QuerySpec, SearchResult
from ..records import MetadataRecord, RecordType, digest, digest_hex
from .errors import ReplicaUnreachable


class ReplicaState(Enum):
    LIVE = "Live"
    DOWN = "Down"
    CATCHING_UP = "CatchingUp"


class Replica:
    def __init__(self, shard: int, slot: int, storage_dir: str | Path | None = None):
        self.shard = shard
        self.slot = slot
        self.index = FacetedIndex(storage_dir)
        self.state = ReplicaState.LIVE
        self.watermark = self.index.last_op_seq
        self._applied: list[dict[str, Any]] = []
        self._killed = False

    # -- fault injection ----------------------------------------------------

    def kill(self) -> None:
        self._killed = True

    def revive(self) -> None:
        self._killed = False

    def _check_alive(self) -> None:
        if self._killed:
            raise ReplicaUnreachable(f"replica s{self.shard}r{self.slot} is down")

    # -- replication surface ------------------------------------------------

    def apply(self, op: dict[str, Any]) -> int:
        """Apply one shard-log op; ops at or below the watermark are skipped."""
        self._check_alive()
        if op["seq"] > self.watermark:
            self.index.apply_op(op)
            self.watermark = op["seq"]
            self._applied.append(op)
        return self.watermark

    def commit(self) -> CommitPoint:
        self._check_alive()
        return self.index.commit()

    def install_snapshot(self, seq: int, records: list[MetadataRecord]) -> None:
        """Replace all state from a peer's snapshot (bootstrap after log loss)."""
        self._check_alive()
        self.index.install_records(records, seq=seq)
        self.watermark = seq
        self._applied = []
        self.index.write_snapshot(compact=True)

    def log_entries(self, from_seq: int, limit: int) -> list[dict[str, Any]]:
        """Ops applied by this process with seq > from_seq (diagnostic)."""
        self._check_alive()
        out = [op for op in self._applied if op["seq"] > from_seq]
        return out[:limit]

    # -- reads ---------------------------------------------------------------

    def search(self, q: QuerySpec) -> SearchResult:
        self._check_alive()
        return self.index.search(q)

    def get_doc(self, record_type: RecordType, id: str) -> Optional[MetadataRecord]:
        self._check_alive()
        return self.index.get_latest(record_type, id)

    def inventory(self, source_id: str) -> list[dict[str, Any]]:
        """Committed records attributed to a source, ordered (type, id)."""
        self._check_alive()
        items = [
            {
                "type": r.record_type.value,
                "id": r.id,
                "version": r.version,
                "timestamp_ms": r.timestamp_ms,
                "digest": digest_hex(digest(r)),
            }
            for r in self.index.snapshot().iter_records()
            if r.source_node == source_id
        ]
        items.sort(key=lambda it: (it["type"], it["id"]))
        return items

    def snapshot_records(self) -> tuple[int, list[MetadataRecord]]:
        """The snapshot transfer unit: (covered op seq, records sorted by key)."""
        self._check_alive()
        return self.index.committed_op_seq, self.index.snapshot().records_sorted()

    def health(self) -> dict[str, Any]:
        self._check_alive()
        return {"state": self.state.value, "watermark": self.watermark}

    def persist(self) -> None:
        self._check_alive()
        self.index.write_snapshot(compact=True)

    def close(self) -> None:
        self.index.close()
