"""HTTP server exposing one replica over the replica RPC."""

from __future__ import annotations

import logging
from typing import Any

from ..httpd import ApiError, JsonHttpServer, Params
from ..index.query import QueryError, QuerySpec, query_from_params
from ..records import RecordType, to_document, validate
from .errors import ReplicaUnreachable
from .handles import result_to_json
from .replica import Replica, ReplicaState

logger = logging.getLogger(__name__)


def build_replica_server(replica: Replica, host: str, port: int) -> JsonHttpServer:
    def guard(fn):
        def wrapped(params: Params, body: Any) -> tuple[int, Any]:
            try:
                return fn(params, body)
            except ReplicaUnreachable as e:
                raise ApiError(503, "unavailable", str(e))
            except QueryError as e:
                raise ApiError(400, e.code, str(e))

        return wrapped

    @guard
    def apply(params: Params, body: Any) -> tuple[int, Any]:
        return 200, {"watermark": replica.apply(body)}

    @guard
    def commit(params: Params, body: Any) -> tuple[int, Any]:
        cp = replica.commit()
        return 200, {"seq": cp.seq, "doc_count": cp.doc_count}

    @guard
    def search(params: Params, body: Any) -> tuple[int, Any]:
        if body is not None:
            q = QuerySpec.from_json(body)
        else:
            q = query_from_params(params)
        return 200, result_to_json(replica.search(q))

    @guard
    def get_doc(params: Params, body: Any) -> tuple[int, Any]:
        rt = RecordType.parse(params["type"][0])
        r = replica.get_doc(rt, params["id"][0])
        return 200, {"doc": to_document(r) if r else None}

    @guard
    def inventory(params: Params, body: Any) -> tuple[int, Any]:
        items = replica.inventory(params["source"][0])
        return 200, {"numFound": len(items), "items": items}

    @guard
    def snapshot(params: Params, body: Any) -> tuple[int, Any]:
        seq, records = replica.snapshot_records()
        return 200, {"seq": seq, "docs": [to_document(r) for r in records]}

    @guard
    def install_snapshot(params: Params, body: Any) -> tuple[int, Any]:
        records = [validate(d) for d in body["docs"]]
        replica.install_snapshot(body["seq"], records)
        return 200, {"seq": body["seq"]}

    @guard
    def log(params: Params, body: Any) -> tuple[int, Any]:
        from_seq = int(params.get("from_seq", ["0"])[0])
        limit = int(params.get("limit", ["1000"])[0])
        return 200, {"entries": replica.log_entries(from_seq, limit)}

    @guard
    def health(params: Params, body: Any) -> tuple[int, Any]:
        return 200, replica.health()

    @guard
    def set_state(params: Params, body: Any) -> tuple[int, Any]:
        replica.state = ReplicaState(body["state"])
        return 200, {"state": replica.state.value}

    @guard
    def persist(params: Params, body: Any) -> tuple[int, Any]:
        replica.persist()
        return 200, {}

    routes = {
        ("POST", "/replica/apply"): apply,
        ("POST", "/replica/commit"): commit,
        ("GET", "/replica/search"): search,
        ("POST", "/replica/search"): search,
        ("GET", "/replica/doc"): get_doc,
        ("GET", "/replica/inventory"): inventory,
        ("GET", "/replica/snapshot"): snapshot,
        ("POST", "/replica/install_snapshot"): install_snapshot,
        ("GET", "/replica/log"): log,
        ("GET", "/replica/health"): health,
        ("POST", "/replica/state"): set_state,
        ("POST", "/replica/persist"): persist,
    }
    return JsonHttpServer(host, port, routes)
