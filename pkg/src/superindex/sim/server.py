"""HTTP face of a sim node: the harvest protocol plus control endpoints."""

from __future__ import annotations

from typing import Any

from ..httpd import ApiError, JsonHttpServer, Params
from ..records import iso_to_ms
from .node import SimNode, SimUnavailable


def build_sim_server(node: SimNode, host: str, port: int) -> JsonHttpServer:
    def guard(fn):
        def wrapped(params: Params, body: Any) -> tuple[int, Any]:
            try:
                return fn(params, body)
            except SimUnavailable as e:
                raise ApiError(503, "unavailable", str(e))

        return wrapped

    @guard
    def search(params: Params, body: Any) -> tuple[int, Any]:
        fmt = params.get("format", ["json"])[0]
        if fmt != "json":
            raise ApiError(400, "bad_format")
        from_ms = iso_to_ms(params["from"][0]) if params.get("from") else 0
        to_ms = iso_to_ms(params["to"][0]) if params.get("to") else None
        offset = int(params.get("offset", ["0"])[0])
        limit = int(params.get("limit", ["100"])[0])
        return 200, node.search_page_response(from_ms, to_ms, offset, limit)

    @guard
    def inventory(params: Params, body: Any) -> tuple[int, Any]:
        offset = int(params.get("offset", ["0"])[0])
        limit = int(params.get("limit", ["100"])[0])
        return 200, node.inventory_response(offset, limit)

    def advance(params: Params, body: Any) -> tuple[int, Any]:
        applied = node.advance(body["to_ms"])
        return 200, {"applied": applied, "sim_clock_ms": node.sim_clock_ms}

    def fault(params: Params, body: Any) -> tuple[int, Any]:
        node.set_fault(body["mode"], body.get("latency_ms", 0))
        return 200, {"mode": node.fault_mode}

    routes = {
        ("GET", "/search"): search,
        ("GET", "/inventory"): inventory,
        ("POST", "/sim/advance"): advance,
        ("POST", "/sim/fault"): fault,
    }
    return JsonHttpServer(host, port, routes)
