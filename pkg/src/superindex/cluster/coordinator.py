"""Shard coordinator: the single writer path and scatter-gather reads.

Writes are routed to a shard, stamped with the shard's next sequence
number, appended to the shard op log, and applied to every live replica
before acknowledgement. Replicas that miss writes replay the shard log
(or bootstrap from a peer snapshot when the log was compacted past their
watermark). Reads fan out to one live replica per shard and merge; if any
shard has no live replica the whole query fails rather than returning a
silently partial answer.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional

from ..index.oplog import OpLogFile, op_delete, op_upsert
from ..index.query import QuerySpec, SearchResult, doc_order_key
from ..records import MetadataRecord, RecordType
from .errors import IncompleteCoverage, LogTruncated, ReplicaUnreachable, ShardUnavailable
from .handles import ReplicaHandle
from .replica import ReplicaState
from .routing import route

logger = logging.getLogger(__name__)


@dataclass
class ClusterState:
    num_shards: int
    replication_factor: int
    assignments: dict[int, list[str]]
    health: dict[str, str]
    watermarks: dict[int, dict[str, int]]
    head_seqs: dict[int, int]

    def to_json(self) -> dict[str, Any]:
        return {
            "num_shards": self.num_shards,
            "replication_factor": self.replication_factor,
            "assignments": {str(s): eps for s, eps in self.assignments.items()},
            "health": dict(self.health),
            "watermarks": {
                str(s): dict(per) for s, per in self.watermarks.items()
            },
            "head_seqs": {str(s): h for s, h in self.head_seqs.items()},
        }


class ShardLog:
    """Authoritative op log for one shard; seqs are dense and ascending.

    Compaction keeps at least the newest entry so the head sequence
    survives restarts without a separate metadata file.
    """

    def __init__(self, shard: int, storage_path: str | Path | None = None):
        self.shard = shard
        self._entries: list[dict[str, Any]] = []
        self._file: OpLogFile | None = None
        if storage_path is not None:
            self._file = OpLogFile(storage_path)
            self._entries = self._file.replay()
        self.head_seq = self._entries[-1]["seq"] if self._entries else 0

    @property
    def first_seq(self) -> int:
        return self._entries[0]["seq"] if self._entries else self.head_seq + 1

    def append(self, op: dict[str, Any]) -> None:
        assert op["seq"] == self.head_seq + 1, "shard log seqs must be dense"
        self._entries.append(op)
        self.head_seq = op["seq"]
        if self._file:
            self._file.append(op)

    def entries_after(self, watermark: int) -> list[dict[str, Any]]:
        if watermark >= self.head_seq:
            return []
        if watermark + 1 < self.first_seq:
            raise LogTruncated(self.shard, watermark, self.first_seq)
        return self._entries[watermark + 1 - self.first_seq :]

    def compact(self, before_seq: int) -> int:
        """Drop entries with seq <= before_seq (always retaining the head)."""
        cutoff = min(before_seq, self.head_seq - 1)
        if cutoff < self.first_seq:
            return 0
        dropped = cutoff - self.first_seq + 1
        self._entries = self._entries[dropped:]
        if self._file:
            self._file.rewrite(self._entries)
        return dropped

    def close(self) -> None:
        if self._file:
            self._file.close()


class ShardCoordinator:
    def __init__(
        self,
        num_shards: int,
        replication_factor: int,
        handles: dict[tuple[int, int], ReplicaHandle],
        storage_dir: str | Path | None = None,
    ):
        if num_shards < 1 or replication_factor < 1:
            raise ValueError("num_shards and replication_factor must be >= 1")
        expected = {
            (s, r) for s in range(num_shards) for r in range(replication_factor)
        }
        if set(handles) != expected:
            raise ValueError(
                f"need exactly one handle per (shard, slot); missing/extra: "
                f"{expected ^ set(handles)}"
            )
        self.num_shards = num_shards
        self.replication_factor = replication_factor
        self._handles = dict(handles)
        self._locks = [threading.Lock() for _ in range(num_shards)]
        self._logs: list[ShardLog] = []
        for s in range(num_shards):
            path = None
            if storage_dir is not None:
                path = Path(storage_dir) / "shardlog" / f"s{s}.bin"
            self._logs.append(ShardLog(s, path))
        self._health: dict[tuple[int, int], ReplicaState] = {
            key: ReplicaState.LIVE for key in handles
        }
        self._watermarks: dict[tuple[int, int], int] = {key: 0 for key in handles}
        for (s, r), h in self._handles.items():
            try:
                self._watermarks[(s, r)] = h.health()["watermark"]
            except ReplicaUnreachable:
                self._health[(s, r)] = ReplicaState.DOWN
        self._executor = ThreadPoolExecutor(max_workers=max(4, num_shards * 2))

    # -- topology helpers ----------------------------------------------------

    def handle(self, shard: int, slot: int) -> ReplicaHandle:
        return self._handles[(shard, slot)]

    def replica_state(self, shard: int, slot: int) -> ReplicaState:
        return self._health[(shard, slot)]

    def _live_slots(self, shard: int) -> list[int]:
        return [
            r
            for r in range(self.replication_factor)
            if self._health[(shard, r)] == ReplicaState.LIVE
        ]

    def _set_state(self, shard: int, slot: int, state: ReplicaState) -> None:
        if self._health[(shard, slot)] == state:
            return
        self._health[(shard, slot)] = state
        logger.info("replica s%dr%d -> %s", shard, slot, state.value)
        try:
            self._handles[(shard, slot)].set_state(state)
        except ReplicaUnreachable:
            pass

    def state(self) -> ClusterState:
        assignments = {
            s: [self._handles[(s, r)].endpoint_id for r in range(self.replication_factor)]
            for s in range(self.num_shards)
        }
        health = {
            self._handles[key].endpoint_id: st.value for key, st in self._health.items()
        }
        watermarks: dict[int, dict[str, int]] = {s: {} for s in range(self.num_shards)}
        for (s, r), w in self._watermarks.items():
            watermarks[s][self._handles[(s, r)].endpoint_id] = w
        return ClusterState(
            num_shards=self.num_shards,
            replication_factor=self.replication_factor,
            assignments=assignments,
            health=health,
            watermarks=watermarks,
            head_seqs={s: self._logs[s].head_seq for s in range(self.num_shards)},
        )

    # -- write path ------------------------------------------------------

    def upsert(self, record: MetadataRecord) -> tuple[int, int]:
        shard = route(record.record_type, record.id, self.num_shards)
        return self._apply_write(shard, lambda seq: op_upsert(seq, record))

    def delete(self, record_type: RecordType, id: str) -> tuple[int, int]:
        shard = route(record_type, id, self.num_shards)
        return self._apply_write(shard, lambda seq: op_delete(seq, record_type, id))

    def _apply_write(self, shard: int, make_op) -> tuple[int, int]:
        """Returns (shard, seq) once every currently-live replica applied."""
        with self._locks[shard]:
            live = self._live_slots(shard)
            if not live:
                raise ShardUnavailable(shard)
            log = self._logs[shard]
            op = make_op(log.head_seq + 1)
            log.append(op)
            applied = 0
            for slot in live:
                try:
                    self._watermarks[(shard, slot)] = self._handles[(shard, slot)].apply(op)
                    applied += 1
                except ReplicaUnreachable:
                    self._set_state(shard, slot, ReplicaState.DOWN)
            # Replicas that missed this write must replay the log before
            # they can serve again.
            for slot in range(self.replication_factor):
                if self._health[(shard, slot)] == ReplicaState.DOWN:
                    self._set_state(shard, slot, ReplicaState.CATCHING_UP)
            if applied == 0:
                raise ShardUnavailable(shard)
            return shard, op["seq"]

    def commit_all(self) -> None:
        """Publish pending writes on every live replica."""
        for shard in range(self.num_shards):
            with self._locks[shard]:
                for slot in self._live_slots(shard):
                    try:
                        self._handles[(shard, slot)].commit()
                    except ReplicaUnreachable:
                        self._set_state(shard, slot, ReplicaState.DOWN)

    # -- recovery ----------------------------------------------------------

    def catch_up(self, shard: int, slot: int) -> int:
        """Bring a catching-up replica to the shard head; returns its watermark."""
        with self._locks[shard]:
            state = self._health[(shard, slot)]
            if state == ReplicaState.LIVE:
                return self._watermarks[(shard, slot)]
            handle = self._handles[(shard, slot)]
            log = self._logs[shard]
            try:
                watermark = handle.health()["watermark"]
                try:
                    ops = log.entries_after(watermark)
                except LogTruncated:
                    donor_slot = next(
                        (r for r in self._live_slots(shard) if r != slot), None
                    )
                    if donor_slot is None:
                        raise ShardUnavailable(shard)
                    seq, records = self._handles[(shard, donor_slot)].snapshot()
                    handle.install_snapshot(seq, records)
                    logger.info(
                        "replica s%dr%d bootstrapped from s%dr%d at seq %d",
                        shard, slot, shard, donor_slot, seq,
                    )
                    ops = log.entries_after(seq)
                for op in ops:
                    handle.apply(op)
                handle.commit()
            except ReplicaUnreachable:
                self._set_state(shard, slot, ReplicaState.DOWN)
                raise
            self._watermarks[(shard, slot)] = log.head_seq
            self._set_state(shard, slot, ReplicaState.LIVE)
            return log.head_seq

    def health_check(self) -> None:
        """Probe replicas; revived ones become CatchingUp, dead ones Down."""
        for (shard, slot), handle in self._handles.items():
            try:
                info = handle.health()
                self._watermarks[(shard, slot)] = info["watermark"]
                if self._health[(shard, slot)] == ReplicaState.DOWN:
                    self._set_state(shard, slot, ReplicaState.CATCHING_UP)
            except ReplicaUnreachable:
                self._set_state(shard, slot, ReplicaState.DOWN)

    def recover_all(self) -> None:
        """Run catch-up for every replica currently marked CatchingUp."""
        for (shard, slot), state in list(self._health.items()):
            if state == ReplicaState.CATCHING_UP:
                try:
                    self.catch_up(shard, slot)
                except (ReplicaUnreachable, ShardUnavailable):
                    logger.warning("catch-up failed for s%dr%d", shard, slot)

    def compact_logs(self) -> dict[int, int]:
        """Commit live replicas, then drop log entries every live replica holds."""
        dropped: dict[int, int] = {}
        for shard in range(self.num_shards):
            with self._locks[shard]:
                watermarks = []
                for slot in self._live_slots(shard):
                    try:
                        self._handles[(shard, slot)].commit()
                        watermarks.append(self._watermarks[(shard, slot)])
                    except ReplicaUnreachable:
                        self._set_state(shard, slot, ReplicaState.DOWN)
                if watermarks:
                    dropped[shard] = self._logs[shard].compact(min(watermarks))
        return dropped

    # -- read path -----------------------------------------------------------

    def _shard_read(self, shard: int, fn) -> Any:
        """Run a read against one live replica of a shard, failing over."""
        for slot in self._live_slots(shard):
            try:
                return fn(self._handles[(shard, slot)])
            except ReplicaUnreachable:
                self._set_state(shard, slot, ReplicaState.DOWN)
        raise IncompleteCoverage(shard)

    def scatter_gather(self, q: QuerySpec) -> SearchResult:
        q.validated()
        sub = replace(q, offset=0, limit=q.offset + q.limit)
        futures = [
            self._executor.submit(self._shard_read, shard, lambda h: h.search(sub))
            for shard in range(self.num_shards)
        ]
        parts: list[SearchResult] = [f.result() for f in futures]

        num_found = sum(p.num_found for p in parts)
        merged_docs = list(
            itertools.islice(
                heapq.merge(*(p.docs for p in parts), key=doc_order_key),
                q.offset,
                q.offset + q.limit,
            )
        )
        facet_counts: dict[str, dict[str, int]] = {f: {} for f in q.facet_fields}
        for p in parts:
            for fname, counts in p.facet_counts.items():
                merged = facet_counts.setdefault(fname, {})
                for value, count in counts.items():
                    merged[value] = merged.get(value, 0) + count
        return SearchResult(
            num_found=num_found, docs=merged_docs, facet_counts=facet_counts
        )

    def lookup(self, record_type: RecordType, id: str) -> Optional[MetadataRecord]:
        """Writer-visible record for a key (pending ops included)."""
        shard = route(record_type, id, self.num_shards)
        try:
            return self._shard_read(shard, lambda h: h.get_doc(record_type, id))
        except IncompleteCoverage:
            raise ShardUnavailable(shard)

    def inventory(self, source_id: str) -> list[dict[str, Any]]:
        """All committed records attributed to a source, across all shards."""
        items: list[dict[str, Any]] = []
        for shard in range(self.num_shards):
            items.extend(self._shard_read(shard, lambda h: h.inventory(source_id)))
        items.sort(key=lambda it: (it["type"], it["id"]))
        return items

    def count(self, record_type: RecordType) -> int:
        return self.scatter_gather(
            QuerySpec(record_type=record_type, limit=0)
        ).num_found

    def persist_all(self) -> None:
        """Ask every reachable replica to write its snapshot to disk."""
        for (shard, slot), handle in self._handles.items():
            try:
                handle.persist()
            except ReplicaUnreachable:
                pass

    def close(self) -> None:
        self._executor.shutdown(wait=False)
        for log in self._logs:
            log.close()
