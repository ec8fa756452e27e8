"""The periodic sync loop: one logical task per source.

Tasks never share cursors and every index mutation funnels through the
cluster's single writer path, so cross-source writes serialize there. The
clock is injectable; tests drive tick() directly against a fake clock and
get fully deterministic schedules.
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Optional, Protocol

from ..cluster.errors import ShardUnavailable
from .client import SourceClient
from .errors import MissingCursor, PageOrderViolation, SourceUnreachable
from .harvester import Harvester, SourceNodeConfig

logger = logging.getLogger(__name__)


class Clock(Protocol):
    def now_ms(self) -> int: ...

    def sleep_ms(self, ms: float) -> None: ...


class SystemClock:
    def now_ms(self) -> int:
        return int(time.time() * 1000)

    def sleep_ms(self, ms: float) -> None:
        time.sleep(ms / 1000.0)


class SourceTask:
    """Schedules one source: full harvest once, then periodic sync, with a
    reconcile pass every N-th cycle."""

    def __init__(
        self,
        cfg: SourceNodeConfig,
        client: SourceClient,
        harvester: Harvester,
        reconcile_every: int = 10,
    ):
        self.cfg = cfg
        self.client = client
        self.harvester = harvester
        self.reconcile_every = max(1, reconcile_every)
        self.cycle = 0
        self.next_due_ms: Optional[int] = None
        self.flagged = False
        self.last_error: Optional[str] = None
        self.last_action: Optional[str] = None
        # Serializes this source's operations between the scheduler loop and
        # on-demand (admin-triggered) harvests.
        self.lock = threading.Lock()

    def due(self, now_ms: int) -> bool:
        if self.flagged:
            return False
        return self.next_due_ms is None or now_ms >= self.next_due_ms

    def tick(self, now_ms: int) -> Optional[str]:
        """Run at most one scheduled action; returns what happened."""
        if not self.due(now_ms):
            return None
        action: str
        try:
            with self.lock:
                if self.harvester.cursors.load(self.cfg.source_id) is None:
                    self.harvester.full_harvest(self.cfg, self.client)
                    action = "full_harvest"
                else:
                    self.cycle += 1
                    self.harvester.incremental_sync(self.cfg, self.client)
                    action = "sync"
                    if self.cycle % self.reconcile_every == 0:
                        self.harvester.reconcile(self.cfg, self.client)
                        action = "sync+reconcile"
            self.last_error = None
        except SourceUnreachable as e:
            self.last_error = str(e)
            action = "unreachable"
            logger.warning("%s unreachable; retrying next cycle", self.cfg.source_id)
        except PageOrderViolation as e:
            self.last_error = str(e)
            self.flagged = True
            action = "flagged"
            logger.error("%s returned disordered pages; source flagged: %s",
                         self.cfg.source_id, e)
        except (MissingCursor, ShardUnavailable) as e:
            self.last_error = str(e)
            action = "error"
            logger.error("%s: %s", self.cfg.source_id, e)
        self.next_due_ms = now_ms + self.cfg.poll_interval_ms
        self.last_action = action
        return action


def run_scheduler(
    tasks: list[SourceTask],
    clock: Clock | None = None,
    stop_event: threading.Event | None = None,
) -> None:
    """Service loop. Runs until stop_event is set (forever without one).

    Each source gets its own thread; failures are contained per source and
    never abort the loop.
    """
    clock = clock or SystemClock()
    stop = stop_event or threading.Event()

    def loop(task: SourceTask) -> None:
        granularity = min(1000, max(20, task.cfg.poll_interval_ms // 20))
        while not stop.is_set():
            try:
                task.tick(clock.now_ms())
            except Exception:
                logger.exception("unexpected error in task %s", task.cfg.source_id)
                task.next_due_ms = clock.now_ms() + task.cfg.poll_interval_ms
            clock.sleep_ms(granularity)

    threads = [
        threading.Thread(target=loop, args=(t,), daemon=True, name=f"harvest-{t.cfg.source_id}")
        for t in tasks
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
