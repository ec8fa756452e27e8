"""Public HTTP face of the coordinator: search, status, admin, health."""

from __future__ import annotations

import logging
from typing import Any, Callable, Optional

from ..cluster.coordinator import ShardCoordinator
from ..cluster.errors import IncompleteCoverage, ShardUnavailable
from ..harvest.cursor import CursorStore
from ..harvest.errors import MissingCursor, PageOrderViolation, SourceUnreachable
from ..httpd import ApiError, JsonHttpServer, Params
from ..index.query import QueryError, query_from_params
from ..records import RecordType, to_document
from .config import ServiceConfig

logger = logging.getLogger(__name__)

# Callable(source_id, full) -> stats dict; wired in by the serve runtime.
HarvestTrigger = Callable[[str, bool], dict[str, Any]]


def search_response(coordinator: ShardCoordinator, params: Params) -> dict[str, Any]:
    q = query_from_params(params)
    res = coordinator.scatter_gather(q)
    return {
        "numFound": res.num_found,
        "offset": q.offset,
        "docs": [to_document(r) for r in res.docs],
        "facet_counts": res.facet_counts,
    }


def status_response(
    coordinator: ShardCoordinator,
    cursors: Optional[CursorStore],
    config: Optional[ServiceConfig],
) -> dict[str, Any]:
    cursor_map: dict[str, Any] = {}
    if cursors is not None and config is not None:
        for src in config.sources:
            cur = cursors.load(src.source_id)
            cursor_map[src.source_id] = None if cur is None else cur.last_sync_ms
    doc_counts: dict[str, Any] = {}
    for rt in RecordType:
        try:
            doc_counts[rt.value] = coordinator.count(rt)
        except IncompleteCoverage:
            doc_counts[rt.value] = None
    return {
        "cluster": coordinator.state().to_json(),
        "cursors": cursor_map,
        "doc_counts": doc_counts,
    }


def build_api_server(
    host: str,
    port: int,
    coordinator: ShardCoordinator,
    cursors: Optional[CursorStore] = None,
    config: Optional[ServiceConfig] = None,
    harvest_trigger: Optional[HarvestTrigger] = None,
) -> JsonHttpServer:
    def search(params: Params, body: Any) -> tuple[int, Any]:
        if isinstance(body, dict):
            # POST alternative: same parameter names, scalar or list values.
            params = {
                k: [str(x) for x in (v if isinstance(v, list) else [v])]
                for k, v in body.items()
            }
        try:
            return 200, search_response(coordinator, params)
        except QueryError as e:
            raise ApiError(400, e.code, str(e))
        except IncompleteCoverage as e:
            raise ApiError(503, "incomplete_coverage", str(e))

    def status(params: Params, body: Any) -> tuple[int, Any]:
        return 200, status_response(coordinator, cursors, config)

    def admin_harvest(params: Params, body: Any) -> tuple[int, Any]:
        if harvest_trigger is None:
            raise ApiError(503, "no_harvester", "this process runs no harvester")
        if not body or "source_id" not in body:
            raise ApiError(400, "missing_source_id", "body needs source_id")
        try:
            stats = harvest_trigger(body["source_id"], bool(body.get("full", False)))
        except KeyError:
            raise ApiError(404, "unknown_source", f"no source {body['source_id']!r}")
        except SourceUnreachable as e:
            raise ApiError(502, "source_unreachable", str(e))
        except PageOrderViolation as e:
            raise ApiError(502, "page_order_violation", str(e))
        except (MissingCursor, ShardUnavailable) as e:
            raise ApiError(409, "not_ready", str(e))
        return 200, stats

    def healthz(params: Params, body: Any) -> tuple[int, Any]:
        return 200, "ok"

    routes = {
        ("GET", "/search"): search,
        ("POST", "/search"): search,
        ("GET", "/status"): status,
        ("POST", "/admin/harvest"): admin_harvest,
        ("GET", "/healthz"): healthz,
    }
    return JsonHttpServer(host, port, routes)
