from .client import HttpSourceClient, LocalSimClient, SourceClient
from .cursor import CursorStore, HarvestCursor
from .errors import MissingCursor, PageOrderViolation, SourceUnreachable
from .harvester import (
    Harvester,
    HarvestStats,
    ReconcileStats,
    SourceNodeConfig,
    SyncStats,
)
from .scheduler import Clock, SourceTask, SystemClock, run_scheduler

__all__ = [
    "Clock",
    "CursorStore",
    "Harvester",
    "HarvestCursor",
    "HarvestStats",
    "HttpSourceClient",
    "LocalSimClient",
    "MissingCursor",
    "PageOrderViolation",
    "ReconcileStats",
    "SourceClient",
    "SourceNodeConfig",
    "SourceTask",
    "SourceUnreachable",
    "SyncStats",
    "SystemClock",
    "run_scheduler",
]
