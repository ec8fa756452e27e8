"""Transport handles the coordinator uses to talk to replicas.

A handle exposes the same methods whether the replica lives in this
process or behind HTTP; any transport failure surfaces as
ReplicaUnreachable so the coordinator's health handling is uniform.
"""

from __future__ import annotations

from typing import Any, Optional, Protocol

import requests

from ..index.query import QuerySpec, SearchResult
from ..records import MetadataRecord, RecordType, to_document, validate
from .errors import ReplicaUnreachable
from .replica import Replica, ReplicaState


class ReplicaHandle(Protocol):
    endpoint_id: str

    def apply(self, op: dict[str, Any]) -> int: ...

    def commit(self) -> dict[str, Any]: ...

    def search(self, q: QuerySpec) -> SearchResult: ...

    def get_doc(self, record_type: RecordType, id: str) -> Optional[MetadataRecord]: ...

    def inventory(self, source_id: str) -> list[dict[str, Any]]: ...

    def snapshot(self) -> tuple[int, list[MetadataRecord]]: ...

    def install_snapshot(self, seq: int, records: list[MetadataRecord]) -> None: ...

    def health(self) -> dict[str, Any]: ...

    def set_state(self, state: ReplicaState) -> None: ...

    def persist(self) -> None: ...


def _result_from_json(obj: dict[str, Any]) -> SearchResult:
    return SearchResult(
        num_found=obj["numFound"],
        docs=[validate(d) for d in obj["docs"]],
        facet_counts=obj["facet_counts"],
    )


def result_to_json(res: SearchResult) -> dict[str, Any]:
    return {
        "numFound": res.num_found,
        "docs": [to_document(r) for r in res.docs],
        "facet_counts": res.facet_counts,
    }


class LocalReplicaHandle:
    """Direct handle to a replica object in this process."""

    def __init__(self, replica: Replica, endpoint_id: str):
        self.replica = replica
        self.endpoint_id = endpoint_id

    def apply(self, op: dict[str, Any]) -> int:
        return self.replica.apply(op)

    def commit(self) -> dict[str, Any]:
        cp = self.replica.commit()
        return {"seq": cp.seq, "doc_count": cp.doc_count}

    def search(self, q: QuerySpec) -> SearchResult:
        return self.replica.search(q)

    def get_doc(self, record_type: RecordType, id: str) -> Optional[MetadataRecord]:
        return self.replica.get_doc(record_type, id)

    def inventory(self, source_id: str) -> list[dict[str, Any]]:
        return self.replica.inventory(source_id)

    def snapshot(self) -> tuple[int, list[MetadataRecord]]:
        return self.replica.snapshot_records()

    def install_snapshot(self, seq: int, records: list[MetadataRecord]) -> None:
        self.replica.install_snapshot(seq, records)

    def health(self) -> dict[str, Any]:
        return self.replica.health()

    def set_state(self, state: ReplicaState) -> None:
        self.replica.state = state

    def persist(self) -> None:
        self.replica.persist()


class HttpReplicaHandle:
    """Handle to a replica process behind the documented HTTP RPC."""

    def __init__(self, base_url: str, timeout_s: float = 10.0):
        self.endpoint_id = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._session = requests.Session()

    def _call(
        self,
        method: str,
        path: str,
        body: Any = None,
        params: dict[str, Any] | None = None,
    ) -> Any:
        url = f"{self.endpoint_id}{path}"
        try:
            resp = self._session.request(
                method, url, json=body, params=params, timeout=self.timeout_s
            )
        except requests.RequestException as e:
            raise ReplicaUnreachable(f"{url}: {e}") from e
        if resp.status_code >= 500:
            raise ReplicaUnreachable(f"{url}: HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise RuntimeError(f"{url}: HTTP {resp.status_code}: {resp.text}")
        return resp.json()

    def apply(self, op: dict[str, Any]) -> int:
        return self._call("POST", "/replica/apply", body=op)["watermark"]

    def commit(self) -> dict[str, Any]:
        return self._call("POST", "/replica/commit")

    def search(self, q: QuerySpec) -> SearchResult:
        return _result_from_json(self._call("POST", "/replica/search", body=q.to_json()))

    def get_doc(self, record_type: RecordType, id: str) -> Optional[MetadataRecord]:
        obj = self._call(
            "GET", "/replica/doc", params={"type": record_type.value, "id": id}
        )
        return validate(obj["doc"]) if obj.get("doc") else None

    def inventory(self, source_id: str) -> list[dict[str, Any]]:
        return self._call("GET", "/replica/inventory", params={"source": source_id})[
            "items"
        ]

    def snapshot(self) -> tuple[int, list[MetadataRecord]]:
        obj = self._call("GET", "/replica/snapshot")
        return obj["seq"], [validate(d) for d in obj["docs"]]

    def install_snapshot(self, seq: int, records: list[MetadataRecord]) -> None:
        self._call(
            "POST",
            "/replica/install_snapshot",
            body={"seq": seq, "docs": [to_document(r) for r in records]},
        )

    def health(self) -> dict[str, Any]:
        return self._call("GET", "/replica/health")

    def set_state(self, state: ReplicaState) -> None:
        self._call("POST", "/replica/state", body={"state": state.value})

    def persist(self) -> None:
        self._call("POST", "/replica/persist")
