"""Simulated source index node serving the harvest protocol.

The store and simulated clock are explicit state; serve_* methods are pure
functions of (store, request), so a (seed, script) pair fully determines
every response. Fault toggles (unreachable / slow / page disorder) sit in
the response wrappers, one layer above the pure core, and drive the
harvester's error paths in tests.
"""

from __future__ import annotations

import time
from typing import Any, Optional

from ..records import (
    MetadataRecord,
    RecordType,
    digest,
    digest_hex,
    to_document,
    validate,
)
from .corpus import SIM_YEAR_START_MS

FAULT_NONE = "none"
FAULT_UNREACHABLE = "unreachable"
FAULT_SLOW = "slow"
FAULT_PAGE_DISORDER = "page_disorder"

FAULT_MODES = (FAULT_NONE, FAULT_UNREACHABLE, FAULT_SLOW, FAULT_PAGE_DISORDER)


class SimUnavailable(Exception):
    """The node is simulating an outage."""


class ScriptTargetMissing(Exception):
    def __init__(self, op: str, key: tuple[str, str]):
        super().__init__(f"{op} target does not exist: {key}")


class SimNode:
    def __init__(self, source_id: str, sim_clock_ms: int = SIM_YEAR_START_MS):
        self.source_id = source_id
        self.store: dict[tuple[str, str], MetadataRecord] = {}
        self.sim_clock_ms = sim_clock_ms
        self.script: list[dict[str, Any]] = []
        self._next_step = 0
        self.fault_mode = FAULT_NONE
        self.fault_latency_ms = 0

    # -- state construction ---------------------------------------------------

    def load_corpus(self, records: list[MetadataRecord]) -> None:
        for r in records:
            self.store[r.key] = r
            self.sim_clock_ms = max(self.sim_clock_ms, r.timestamp_ms)

    def set_script(self, steps: list[dict[str, Any]]) -> None:
        for prev, cur in zip(steps, steps[1:]):
            if cur["at_ms"] < prev["at_ms"]:
                raise ValueError("script step times must be non-decreasing")
        self.script = steps
        self._next_step = 0

    def advance(self, to_ms: int) -> int:
        """Apply script steps with at_ms <= to_ms that have not run yet."""
        applied = 0
        while self._next_step < len(self.script):
            step = self.script[self._next_step]
            if step["at_ms"] > to_ms:
                break
            self._apply_step(step)
            self._next_step += 1
            applied += 1
        self.sim_clock_ms = max(self.sim_clock_ms, to_ms)
        return applied

    def script_end_ms(self) -> int:
        return self.script[-1]["at_ms"] if self.script else self.sim_clock_ms

    def _apply_step(self, step: dict[str, Any]) -> None:
        op = step["op"]
        if op == "delete":
            key = (step["key"]["type"], step["key"]["id"])
            if key not in self.store:
                raise ScriptTargetMissing(op, key)
            del self.store[key]
            return
        raw = dict(step["record"])
        raw["source_node"] = self.source_id
        rec = validate(raw)
        prior = self.store.get(rec.key)
        if op == "update" and prior is None:
            raise ScriptTargetMissing(op, rec.key)
        if op == "add" and prior is not None:
            raise ValueError(f"add target already exists: {rec.key}")
        stamp = step.get("stamp_ms", step["at_ms"])
        self.store[rec.key] = MetadataRecord(
            record_type=rec.record_type,
            id=rec.id,
            version=0 if prior is None else prior.version + 1,
            source_node=self.source_id,
            timestamp_ms=stamp,
            fields=rec.fields,
        )

    # -- pure serving core ----------------------------------------------------

    def serve_search_page(
        self,
        from_ms: int,
        to_ms: Optional[int],
        offset: int,
        limit: int,
    ) -> tuple[int, list[MetadataRecord]]:
        """Records with from_ms <= ts < to_ms, ordered (timestamp, id)."""
        matching = [
            r
            for r in self.store.values()
            if r.timestamp_ms >= from_ms
            and (to_ms is None or r.timestamp_ms < to_ms)
        ]
        matching.sort(key=lambda r: (r.timestamp_ms, r.id, r.record_type.value))
        return len(matching), matching[offset : offset + limit]

    def serve_inventory(
        self, offset: int, limit: int
    ) -> tuple[int, list[dict[str, Any]]]:
        """(type, id, digest) for every stored record, ordered (type, id)."""
        items = [
            {
                "type": r.record_type.value,
                "id": r.id,
                "digest": digest_hex(digest(r)),
            }
            for r in self.store.values()
        ]
        items.sort(key=lambda it: (it["type"], it["id"]))
        return len(items), items[offset : offset + limit]

    # -- wire responses (fault-aware) ------------------------------------------

    def set_fault(self, mode: str, latency_ms: int = 0) -> None:
        if mode not in FAULT_MODES:
            raise ValueError(f"unknown fault mode: {mode!r}")
        self.fault_mode = mode
        self.fault_latency_ms = latency_ms

    def _fault_gate(self) -> None:
        if self.fault_mode == FAULT_UNREACHABLE:
            raise SimUnavailable(f"{self.source_id} is unreachable")
        if self.fault_mode == FAULT_SLOW and self.fault_latency_ms > 0:
            time.sleep(self.fault_latency_ms / 1000.0)

    def search_page_response(
        self,
        from_ms: int,
        to_ms: Optional[int],
        offset: int,
        limit: int,
    ) -> dict[str, Any]:
        self._fault_gate()
        num_found, page = self.serve_search_page(from_ms, to_ms, offset, limit)
        docs = [to_document(r) for r in page]
        if self.fault_mode == FAULT_PAGE_DISORDER and len(docs) >= 2:
            docs[0], docs[1] = docs[1], docs[0]
        return {"numFound": num_found, "offset": offset, "docs": docs}

    def inventory_response(self, offset: int, limit: int) -> dict[str, Any]:
        self._fault_gate()
        num_found, items = self.serve_inventory(offset, limit)
        return {"numFound": num_found, "offset": offset, "items": items}
