"""Harvest, incremental sync, and digest reconciliation for one super-index.

The flow is pull-based and at-least-once: pages are fetched through a
timestamp cursor with an overlap window, and every record goes through a
version compare before being upserted, so re-fetching is always safe and
repeating a completed pass changes nothing. Deletions and silent rewrites
at a source (which exposes no change feed) are caught by periodically
diffing the source's full (type, id, digest) inventory against ours.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Optional

from ..cluster.coordinator import ShardCoordinator
from ..records import MetadataRecord, RecordType, validate
from .client import SourceClient
from .cursor import CursorStore, HarvestCursor
from .errors import MissingCursor, PageOrderViolation, SourceUnreachable

logger = logging.getLogger(__name__)


@dataclass
class SourceNodeConfig:
    source_id: str
    base_url: str
    page_size: int = 100
    poll_interval_ms: int = 60_000
    skew_epsilon_ms: int = 60_000

    def __post_init__(self) -> None:
        if not self.source_id:
            raise ValueError("source_id must be non-empty")
        if self.page_size < 1:
            raise ValueError(f"page_size must be >= 1, got {self.page_size}")
        if self.poll_interval_ms < 1:
            raise ValueError(f"poll_interval_ms must be >= 1, got {self.poll_interval_ms}")
        if self.skew_epsilon_ms < 0:
            raise ValueError(f"skew_epsilon_ms must be >= 0, got {self.skew_epsilon_ms}")


@dataclass
class HarvestStats:
    fetched: int = 0
    upserted: int = 0


@dataclass
class SyncStats:
    fetched: int = 0
    upserted: int = 0
    skipped: int = 0


@dataclass
class ReconcileStats:
    deleted: int = 0
    repaired: int = 0


class Harvester:
    def __init__(
        self,
        cluster: ShardCoordinator,
        cursors: CursorStore,
        retries: int = 3,
        backoff_ms: int = 250,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.cluster = cluster
        self.cursors = cursors
        self.retries = retries
        self.backoff_ms = backoff_ms
        self._sleep = sleep

    # -- fetch helpers ---------------------------------------------------------

    def _with_retry(self, what: str, fn: Callable[[], dict[str, Any]]) -> dict[str, Any]:
        attempt = 0
        while True:
            try:
                return fn()
            except SourceUnreachable:
                attempt += 1
                if attempt > self.retries:
                    raise
                wait_ms = self.backoff_ms * (2 ** (attempt - 1))
                logger.warning("%s unreachable (attempt %d), backing off %dms",
                               what, attempt, wait_ms)
                self._sleep(wait_ms / 1000.0)

    def _scan(
        self,
        cfg: SourceNodeConfig,
        client: SourceClient,
        from_ms: int,
        on_page: Callable[[list[MetadataRecord], int], None],
    ) -> int:
        """Page through a source's records from from_ms, oldest first.

        Enforces (timestamp, id) ordering across the whole scan and invokes
        on_page(records, page_max_ts) after each page. Returns records seen.
        """
        offset = 0
        fetched = 0
        prev_key: Optional[tuple[int, str]] = None
        while True:
            page = self._with_retry(
                cfg.source_id,
                lambda: client.fetch_page(from_ms, None, offset, cfg.page_size),
            )
            docs = [validate(d) for d in page["docs"]]
            for r in docs:
                key = (r.timestamp_ms, r.id)
                if prev_key is not None and key < prev_key:
                    raise PageOrderViolation(
                        cfg.source_id,
                        f"record {r.id} at {r.timestamp_ms} after {prev_key}",
                    )
                prev_key = key
            fetched += len(docs)
            if docs:
                on_page(docs, max(r.timestamp_ms for r in docs))
            offset += len(docs)
            if not docs or offset >= page["numFound"]:
                return fetched

    # -- write-side helpers -----------------------------------------------------

    def _upsert_if_newer(self, record: MetadataRecord, force: bool = False) -> bool:
        """Apply the version-compare (and cross-source conflict) rule."""
        current = self.cluster.lookup(record.record_type, record.id)
        if current is None:
            self.cluster.upsert(record)
            return True
        incoming = (record.version, record.timestamp_ms)
        stored = (current.version, current.timestamp_ms)
        if current.source_node != record.source_node:
            # Two sources claim the same key; higher (version, timestamp)
            # wins and the anomaly is logged either way.
            if incoming > stored:
                logger.warning(
                    "federation anomaly: %s/%s moves %s -> %s",
                    record.record_type.value, record.id,
                    current.source_node, record.source_node,
                )
                self.cluster.upsert(record)
                return True
            logger.warning(
                "federation anomaly: %s/%s also published by %s (kept %s)",
                record.record_type.value, record.id,
                record.source_node, current.source_node,
            )
            return False
        if force:
            if record != current:
                self.cluster.upsert(record)
                return True
            return False
        if incoming > stored:
            self.cluster.upsert(record)
            return True
        return False

    # -- the three passes -------------------------------------------------------

    def full_harvest(self, cfg: SourceNodeConfig, client: SourceClient) -> HarvestStats:
        """Initial scan of everything the source holds, from time zero."""
        stats = HarvestStats()
        existing = self.cursors.load(cfg.source_id)
        watermark = existing.last_sync_ms if existing else 0

        def on_page(records: list[MetadataRecord], page_max_ts: int) -> None:
            nonlocal watermark
            for r in records:
                if self._upsert_if_newer(r):
                    stats.upserted += 1
            watermark = max(watermark, page_max_ts)
            self.cursors.save(HarvestCursor(cfg.source_id, watermark))

        stats.fetched = self._scan(cfg, client, 0, on_page)
        self.cluster.commit_all()
        self.cursors.save(HarvestCursor(cfg.source_id, watermark))
        logger.info("full harvest of %s: fetched=%d upserted=%d",
                    cfg.source_id, stats.fetched, stats.upserted)
        return stats

    def incremental_sync(self, cfg: SourceNodeConfig, client: SourceClient) -> SyncStats:
        """Fetch records changed since the cursor, minus the skew window."""
        cursor = self.cursors.load(cfg.source_id)
        if cursor is None:
            raise MissingCursor(cfg.source_id)
        stats = SyncStats()
        watermark = cursor.last_sync_ms
        from_ms = max(0, cursor.last_sync_ms - cfg.skew_epsilon_ms)

        def on_page(records: list[MetadataRecord], page_max_ts: int) -> None:
            nonlocal watermark
            for r in records:
                if self._upsert_if_newer(r):
                    stats.upserted += 1
                else:
                    stats.skipped += 1
            watermark = max(watermark, page_max_ts)
            self.cursors.save(HarvestCursor(cfg.source_id, watermark))

        stats.fetched = self._scan(cfg, client, from_ms, on_page)
        self.cluster.commit_all()
        self.cursors.save(HarvestCursor(cfg.source_id, watermark))
        logger.info("sync of %s: fetched=%d upserted=%d skipped=%d",
                    cfg.source_id, stats.fetched, stats.upserted, stats.skipped)
        return stats

    def reconcile(self, cfg: SourceNodeConfig, client: SourceClient) -> ReconcileStats:
        """Inventory diff: catch deletions and silent drift at the source.

        All fetching happens before any local mutation, so an unreachable
        source aborts the pass with the super-index untouched.
        """
        if self.cursors.load(cfg.source_id) is None:
            raise MissingCursor(cfg.source_id)

        remote: dict[tuple[str, str], str] = {}
        offset = 0
        while True:
            page = self._with_retry(
                cfg.source_id,
                lambda: client.fetch_inventory_page(offset, cfg.page_size),
            )
            for item in page["items"]:
                remote[(item["type"], item["id"])] = item["digest"]
            offset += len(page["items"])
            if not page["items"] or offset >= page["numFound"]:
                break

        local = {
            (item["type"], item["id"]): item["digest"]
            for item in self.cluster.inventory(cfg.source_id)
        }
        to_delete = sorted(set(local) - set(remote))
        to_repair = {
            key for key, d in remote.items() if local.get(key) != d
        }

        repair_records: list[MetadataRecord] = []
        if to_repair:
            def collect(records: list[MetadataRecord], page_max_ts: int) -> None:
                repair_records.extend(r for r in records if r.key in to_repair)

            self._scan(cfg, client, 0, collect)
            missing = to_repair - {r.key for r in repair_records}
            if missing:
                logger.warning(
                    "%s: %d inventory entries not found in scan", cfg.source_id,
                    len(missing),
                )

        stats = ReconcileStats()
        for tname, id_ in to_delete:
            self.cluster.delete(RecordType.parse(tname), id_)
            stats.deleted += 1
        for r in repair_records:
            if self._upsert_if_newer(r, force=True):
                stats.repaired += 1
        self.cluster.commit_all()
        logger.info("reconcile of %s: deleted=%d repaired=%d",
                    cfg.source_id, stats.deleted, stats.repaired)
        return stats
