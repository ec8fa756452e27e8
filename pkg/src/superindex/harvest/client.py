"""Clients speaking the source harvest protocol.

A source must expose two paged GET endpoints:

  {base}/search?format=json&from={ISO}&to={ISO}&offset={n}&limit={n}
      -> {"numFound": N, "offset": n, "docs": [document form, ...]}
      ordered (timestamp asc, id asc); `to` may be omitted for unbounded.

  {base}/inventory?offset={n}&limit={n}
      -> {"numFound": N, "items": [{"type":..., "id":..., "digest": 16 hex}]}
      ordered (type, id asc).

The in-process client drives a SimNode directly through the same response
shapes, so unit tests and socket tests exercise identical wire semantics.
"""

from __future__ import annotations

from typing import Any, Optional, Protocol

import requests

from ..records import ms_to_iso
from ..sim.node import SimNode, SimUnavailable
from .errors import SourceUnreachable


class SourceClient(Protocol):
    def fetch_page(
        self, from_ms: int, to_ms: Optional[int], offset: int, limit: int
    ) -> dict[str, Any]: ...

    def fetch_inventory_page(self, offset: int, limit: int) -> dict[str, Any]: ...


class HttpSourceClient:
    def __init__(self, base_url: str, timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._session = requests.Session()

    def _get(self, path: str, params: dict[str, Any]) -> dict[str, Any]:
        url = f"{self.base_url}{path}"
        try:
            resp = self._session.get(url, params=params, timeout=self.timeout_s)
        except requests.RequestException as e:
            raise SourceUnreachable(f"{url}: {e}") from e
        if resp.status_code >= 500:
            raise SourceUnreachable(f"{url}: HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise RuntimeError(f"{url}: HTTP {resp.status_code}: {resp.text}")
        return resp.json()

    def fetch_page(
        self, from_ms: int, to_ms: Optional[int], offset: int, limit: int
    ) -> dict[str, Any]:
        params: dict[str, Any] = {
            "format": "json",
            "from": ms_to_iso(from_ms),
            "offset": offset,
            "limit": limit,
        }
        if to_ms is not None:
            params["to"] = ms_to_iso(to_ms)
        return self._get("/search", params)

    def fetch_inventory_page(self, offset: int, limit: int) -> dict[str, Any]:
        return self._get("/inventory", {"offset": offset, "limit": limit})


class LocalSimClient:
    """Direct client to an in-process SimNode."""

    def __init__(self, node: SimNode):
        self.node = node

    def fetch_page(
        self, from_ms: int, to_ms: Optional[int], offset: int, limit: int
    ) -> dict[str, Any]:
        try:
            return self.node.search_page_response(from_ms, to_ms, offset, limit)
        except SimUnavailable as e:
            raise SourceUnreachable(str(e)) from e

    def fetch_inventory_page(self, offset: int, limit: int) -> dict[str, Any]:
        try:
            return self.node.inventory_response(offset, limit)
        except SimUnavailable as e:
            raise SourceUnreachable(str(e)) from e
