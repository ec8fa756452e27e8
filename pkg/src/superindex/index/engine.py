"""Embedded single-shard faceted index with snapshot reads.

One writer thread appends upserts/deletes; commit() publishes a new
immutable snapshot built copy-on-write from the previous one, so readers
never block and never see uncommitted operations. Optional on-disk
persistence is an append-only op log plus periodic full snapshots; restart
loads the snapshot and replays the log tail (replayed operations become
visible immediately).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional

from ..records import MetadataRecord, RecordType, validate
from .oplog import (
    OpLogFile,
    op_delete,
    op_upsert,
    read_snapshot_file,
    write_snapshot_file,
)
from .query import QuerySpec, SearchResult, doc_order_key, record_tokens, tokenize

OPLOG_FILE = "oplog.bin"
SNAPSHOT_FILE = "snapshot.json"


@dataclass(frozen=True)
class CommitPoint:
    seq: int
    doc_count: int


class _TypeIndex:
    """Immutable per-record-type index: docs, token and value postings."""

    __slots__ = ("docs", "token_postings", "value_postings")

    def __init__(
        self,
        docs: dict[str, MetadataRecord],
        token_postings: dict[str, frozenset[str]],
        value_postings: dict[str, dict[str, frozenset[str]]],
    ):
        self.docs = docs
        self.token_postings = token_postings
        self.value_postings = value_postings


_EMPTY_TYPE_INDEX = _TypeIndex({}, {}, {})


class IndexSnapshot:
    """A frozen committed state; search results never change under it."""

    def __init__(self, types: dict[RecordType, _TypeIndex], seq: int):
        self._types = types
        self.seq = seq
        self.doc_count = sum(len(ti.docs) for ti in types.values())

    def get(self, record_type: RecordType, id: str) -> Optional[MetadataRecord]:
        ti = self._types.get(record_type)
        return ti.docs.get(id) if ti else None

    def iter_records(self) -> Iterator[MetadataRecord]:
        for ti in self._types.values():
            yield from ti.docs.values()

    def records_sorted(self) -> list[MetadataRecord]:
        return sorted(self.iter_records(), key=lambda r: r.key)

    def search(self, q: QuerySpec) -> SearchResult:
        q.validated()
        ti = self._types.get(q.record_type, _EMPTY_TYPE_INDEX)

        posting_sets: list[frozenset[str]] = []
        dead = False
        for token in tokenize(q.query_text):
            s = ti.token_postings.get(token)
            if s is None:
                dead = True
                break
            posting_sets.append(s)
        if not dead:
            for fname, value in q.filters:
                s = ti.value_postings.get(fname, {}).get(value)
                if s is None:
                    dead = True
                    break
                posting_sets.append(s)

        if dead:
            ids: Any = ()
        elif posting_sets:
            posting_sets.sort(key=len)
            ids = frozenset.intersection(*posting_sets)
        else:
            ids = ti.docs.keys()

        if q.from_ms is not None or q.to_ms is not None:
            lo = q.from_ms if q.from_ms is not None else 0
            hi = q.to_ms
            matching = [
                ti.docs[i]
                for i in ids
                if ti.docs[i].timestamp_ms >= lo
                and (hi is None or ti.docs[i].timestamp_ms < hi)
            ]
        else:
            matching = [ti.docs[i] for i in ids]

        matching.sort(key=doc_order_key)

        facet_counts: dict[str, dict[str, int]] = {}
        for fname in q.facet_fields:
            counts: dict[str, int] = {}
            for r in matching:
                for value in set(r.fields.get(fname, ())):
                    counts[value] = counts.get(value, 0) + 1
            facet_counts[fname] = counts

        return SearchResult(
            num_found=len(matching),
            docs=matching[q.offset : q.offset + q.limit],
            facet_counts=facet_counts,
        )


def _record_values(r: MetadataRecord) -> set[tuple[str, str]]:
    pairs: set[tuple[str, str]] = set()
    for fname, values in r.fields.items():
        for v in values:
            pairs.add((fname, v))
    return pairs


def _build_type_index(
    old: _TypeIndex, changes: dict[str, Optional[MetadataRecord]]
) -> _TypeIndex:
    """Copy-on-write rebuild of one type's index for a batch of changes.

    Only postings touched by the batch are copied; everything else is
    shared with the previous snapshot.
    """
    docs = dict(old.docs)
    token_adds: dict[str, set[str]] = {}
    token_dels: dict[str, set[str]] = {}
    value_adds: dict[str, dict[str, set[str]]] = {}
    value_dels: dict[str, dict[str, set[str]]] = {}

    for id_, new in changes.items():
        prev = old.docs.get(id_)
        if prev is not None:
            for t in record_tokens(prev):
                token_dels.setdefault(t, set()).add(id_)
            for fname, v in _record_values(prev):
                value_dels.setdefault(fname, {}).setdefault(v, set()).add(id_)
        if new is None:
            docs.pop(id_, None)
        else:
            docs[id_] = new
            for t in record_tokens(new):
                token_adds.setdefault(t, set()).add(id_)
            for fname, v in _record_values(new):
                value_adds.setdefault(fname, {}).setdefault(v, set()).add(id_)

    token_postings = dict(old.token_postings)
    for t in set(token_adds) | set(token_dels):
        s = set(old.token_postings.get(t, ()))
        s -= token_dels.get(t, set())
        s |= token_adds.get(t, set())
        if s:
            token_postings[t] = frozenset(s)
        else:
            token_postings.pop(t, None)

    value_postings = dict(old.value_postings)
    for fname in set(value_adds) | set(value_dels):
        per_value = dict(old.value_postings.get(fname, {}))
        touched = set(value_adds.get(fname, ())) | set(value_dels.get(fname, ()))
        for v in touched:
            s = set(per_value.get(v, ()))
            s -= value_dels.get(fname, {}).get(v, set())
            s |= value_adds.get(fname, {}).get(v, set())
            if s:
                per_value[v] = frozenset(s)
            else:
                per_value.pop(v, None)
        if per_value:
            value_postings[fname] = per_value
        else:
            value_postings.pop(fname, None)

    return _TypeIndex(docs, token_postings, value_postings)


class FacetedIndex:
    """The engine one shard replica runs.

    Thread model: one writer (upsert/delete/commit), any number of readers
    via snapshot(). Sequence numbers may be supplied by a replication
    applier; standalone use lets the index assign them.
    """

    def __init__(self, storage_dir: str | Path | None = None):
        self._lock = threading.Lock()
        self._pending: list[dict[str, Any]] = []
        self._seq = 0
        self._last_op_seq = 0
        self._committed_op_seq = 0
        self._committed = IndexSnapshot({}, seq=0)
        self._oplog: OpLogFile | None = None
        self._storage_dir: Path | None = None
        if storage_dir is not None:
            self._storage_dir = Path(storage_dir)
            self._storage_dir.mkdir(parents=True, exist_ok=True)
            self._recover()
            self._oplog = OpLogFile(self._storage_dir / OPLOG_FILE)

    def _recover(self) -> None:
        assert self._storage_dir is not None
        snap_path = self._storage_dir / SNAPSHOT_FILE
        base_seq = 0
        if snap_path.exists():
            base_seq, records = read_snapshot_file(snap_path)
            self.install_records(records, seq=base_seq)
        log = OpLogFile(self._storage_dir / OPLOG_FILE)
        try:
            for op in log.replay():
                if op["seq"] <= base_seq:
                    continue
                self._pending.append(op)
                self._seq = max(self._seq, op["seq"])
                self._last_op_seq = max(self._last_op_seq, op["seq"])
        finally:
            log.close()
        if self._pending:
            self.commit()

    def install_records(self, records: Iterable[MetadataRecord], seq: int) -> None:
        """Replace committed state wholesale (snapshot load/bootstrap)."""
        by_type: dict[RecordType, dict[str, Optional[MetadataRecord]]] = {}
        for r in records:
            by_type.setdefault(r.record_type, {})[r.id] = r
        types = {
            rt: _build_type_index(_EMPTY_TYPE_INDEX, changes)
            for rt, changes in by_type.items()
        }
        self._committed = IndexSnapshot(types, seq=seq)
        self._seq = max(self._seq, seq)
        self._last_op_seq = max(self._last_op_seq, seq)
        self._committed_op_seq = seq
        self._pending = []

    @property
    def last_op_seq(self) -> int:
        """Sequence number of the most recent upsert/delete (0 if none)."""
        return self._last_op_seq

    @property
    def committed_op_seq(self) -> int:
        """Highest op sequence covered by the committed snapshot."""
        return self._committed_op_seq

    def _next_seq(self, seq: Optional[int]) -> int:
        if seq is None:
            self._seq += 1
            return self._seq
        self._seq = max(self._seq, seq)
        return seq

    def upsert(self, r: MetadataRecord, seq: Optional[int] = None) -> int:
        with self._lock:
            s = self._next_seq(seq)
            op = op_upsert(s, r)
            if self._oplog:
                self._oplog.append(op)
            self._pending.append(op)
            self._last_op_seq = max(self._last_op_seq, s)
            return s

    def delete(self, record_type: RecordType, id: str, seq: Optional[int] = None) -> int:
        # Deleting an absent key is a no-op that still consumes a sequence
        # number, keeping op logs aligned across replicas.
        with self._lock:
            s = self._next_seq(seq)
            op = op_delete(s, record_type, id)
            if self._oplog:
                self._oplog.append(op)
            self._pending.append(op)
            self._last_op_seq = max(self._last_op_seq, s)
            return s

    def apply_op(self, op: dict[str, Any]) -> int:
        """Apply a wire-form op (replication path)."""
        if op["op"] == "upsert":
            return self.upsert(validate(op["doc"]), seq=op["seq"])
        return self.delete(
            RecordType.parse(op["key"]["type"]), op["key"]["id"], seq=op["seq"]
        )

    def commit(self) -> CommitPoint:
        with self._lock:
            if self._pending:
                by_type: dict[RecordType, dict[str, Optional[MetadataRecord]]] = {}
                for op in self._pending:
                    if op["op"] == "upsert":
                        r = validate(op["doc"])
                        by_type.setdefault(r.record_type, {})[r.id] = r
                    else:
                        rt = RecordType.parse(op["key"]["type"])
                        by_type.setdefault(rt, {})[op["key"]["id"]] = None
                types = dict(self._committed._types)
                for rt, changes in by_type.items():
                    rebuilt = _build_type_index(
                        types.get(rt, _EMPTY_TYPE_INDEX), changes
                    )
                    if rebuilt.docs:
                        types[rt] = rebuilt
                    else:
                        types.pop(rt, None)
                self._pending = []
                self._committed_op_seq = self._last_op_seq
            else:
                types = self._committed._types
            self._seq += 1
            self._committed = IndexSnapshot(types, seq=self._seq)
            return CommitPoint(seq=self._seq, doc_count=self._committed.doc_count)

    def snapshot(self) -> IndexSnapshot:
        return self._committed

    def search(self, q: QuerySpec) -> SearchResult:
        return self._committed.search(q)

    def get_latest(self, record_type: RecordType, id: str) -> Optional[MetadataRecord]:
        """Writer-visible view of a key: pending ops win over committed."""
        with self._lock:
            for op in reversed(self._pending):
                if op["op"] == "upsert":
                    if op["doc"]["type"] == record_type.value and op["doc"]["id"] == id:
                        return validate(op["doc"])
                elif op["key"]["type"] == record_type.value and op["key"]["id"] == id:
                    return None
        return self._committed.get(record_type, id)

    def doc_count(self) -> int:
        return self._committed.doc_count

    def write_snapshot(self, compact: bool = True) -> None:
        """Persist the committed state; optionally drop the covered log prefix."""
        if self._storage_dir is None:
            return
        with self._lock:
            write_snapshot_file(
                self._storage_dir / SNAPSHOT_FILE,
                self._committed_op_seq,
                self._committed.iter_records(),
            )
            if compact and self._oplog:
                self._oplog.rewrite(list(self._pending))

    def close(self) -> None:
        if self._oplog:
            self._oplog.close()
            self._oplog = None
