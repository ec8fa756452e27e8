"""Wires a ServiceConfig into a running coordinator process.

The serve process hosts: the public HTTP API, the shard coordinator, any
replicas configured as "local", a maintenance loop (health checks, replica
recovery, periodic snapshots), and the harvest scheduler when sources are
configured.
"""

from __future__ import annotations

import logging
import threading
from typing import Any

from ..cluster.coordinator import ShardCoordinator
from ..cluster.handles import HttpReplicaHandle, LocalReplicaHandle, ReplicaHandle
from ..cluster.replica import Replica
from ..harvest.client import HttpSourceClient
from ..harvest.cursor import CursorStore
from ..harvest.harvester import Harvester
from ..harvest.scheduler import SourceTask, SystemClock, run_scheduler
from ..httpd import JsonHttpServer
from .api import build_api_server
from .config import ServiceConfig

logger = logging.getLogger(__name__)

SNAPSHOT_EVERY_N_MAINTENANCE_TICKS = 60


def build_handles(config: ServiceConfig) -> dict[tuple[int, int], ReplicaHandle]:
    """One handle per (shard, slot); 'local' endpoints get in-process replicas."""
    handles: dict[tuple[int, int], ReplicaHandle] = {}
    for shard in range(config.num_shards):
        for slot in range(config.replication_factor):
            endpoint = config.endpoint_for(shard, slot)
            if endpoint == "local":
                storage = config.data_dir / "shards" / f"s{shard}" / f"r{slot}"
                replica = Replica(shard, slot, storage_dir=storage)
                handles[(shard, slot)] = LocalReplicaHandle(
                    replica, f"local/s{shard}r{slot}"
                )
            else:
                handles[(shard, slot)] = HttpReplicaHandle(endpoint)
    return handles


class ServiceRuntime:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.coordinator = ShardCoordinator(
            config.num_shards,
            config.replication_factor,
            build_handles(config),
            storage_dir=config.data_dir,
        )
        self.cursors = CursorStore(config.data_dir / "cursors")
        self.harvester = Harvester(self.coordinator, self.cursors)
        self.tasks = [
            SourceTask(
                src,
                HttpSourceClient(src.base_url),
                self.harvester,
                reconcile_every=config.reconcile_every_n_cycles,
            )
            for src in config.sources
        ]
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self.api: JsonHttpServer = build_api_server(
            config.http_host,
            config.http_port,
            self.coordinator,
            cursors=self.cursors,
            config=config,
            harvest_trigger=self._trigger_harvest,
        )

    def _trigger_harvest(self, source_id: str, full: bool) -> dict[str, Any]:
        task = next((t for t in self.tasks if t.cfg.source_id == source_id), None)
        if task is None:
            raise KeyError(source_id)
        with task.lock:
            has_cursor = self.cursors.load(source_id) is not None
            if full or not has_cursor:
                stats = self.harvester.full_harvest(task.cfg, task.client)
                return {"action": "full_harvest", "fetched": stats.fetched,
                        "upserted": stats.upserted}
            stats = self.harvester.incremental_sync(task.cfg, task.client)
            return {"action": "sync", "fetched": stats.fetched,
                    "upserted": stats.upserted, "skipped": stats.skipped}

    def _maintenance_loop(self) -> None:
        tick = 0
        while not self._stop.wait(self.config.health_check_interval_ms / 1000.0):
            tick += 1
            try:
                self.coordinator.health_check()
                self.coordinator.recover_all()
                if tick % SNAPSHOT_EVERY_N_MAINTENANCE_TICKS == 0:
                    self.coordinator.persist_all()
                    self.coordinator.compact_logs()
            except Exception:
                logger.exception("maintenance sweep failed")

    def start(self) -> None:
        self.api.start()
        maint = threading.Thread(
            target=self._maintenance_loop, daemon=True, name="maintenance"
        )
        maint.start()
        self._threads.append(maint)
        if self.tasks:
            sched = threading.Thread(
                target=run_scheduler,
                args=(self.tasks, SystemClock(), self._stop),
                daemon=True,
                name="scheduler",
            )
            sched.start()
            self._threads.append(sched)
        logger.info(
            "serving on http://%s:%d (%d shards x %d replicas, %d sources)",
            self.config.http_host, self.api.port, self.config.num_shards,
            self.config.replication_factor, len(self.config.sources),
        )

    def wait(self) -> None:
        self._stop.wait()

    def stop(self) -> None:
        self._stop.set()
        self.api.shutdown()
        for t in self._threads:
            t.join(timeout=5)
        self.coordinator.persist_all()
        self.coordinator.close()
