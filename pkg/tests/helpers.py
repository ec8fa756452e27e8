"""Shared test builders: records, clusters, and randomized queries."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from superindex.cluster import (
    LocalReplicaHandle,
    Replica,
    ShardCoordinator,
)
from superindex.index import QuerySpec
from superindex.records import MetadataRecord, RecordType, validate
from superindex.sim import EXPERIMENTS, INSTITUTES, PROJECTS, VARIABLES
from superindex.sim.corpus import SIM_YEAR_MS, SIM_YEAR_START_MS


def rec(
    type: str = "Dataset",
    id: str = "d1",
    version: int = 0,
    source: str = "n1",
    ts: int = 1000,
    **fields: Any,
) -> MetadataRecord:
    mapped = {
        k: (list(v) if isinstance(v, (list, tuple)) else [v]) for k, v in fields.items()
    }
    return validate(
        {
            "type": type,
            "id": id,
            "version": version,
            "source_node": source,
            "timestamp_ms": ts,
            "fields": mapped,
        }
    )


@dataclass
class LocalCluster:
    coordinator: ShardCoordinator
    replicas: dict[tuple[int, int], Replica]

    def kill(self, shard: int, slot: int) -> None:
        self.replicas[(shard, slot)].kill()

    def revive(self, shard: int, slot: int) -> None:
        self.replicas[(shard, slot)].revive()

    def replica_doc_maps(self, shard: int) -> list[dict]:
        """Per-slot maps of committed records for one shard."""
        out = []
        for slot in sorted(s for (sh, s) in self.replicas if sh == shard):
            replica = self.replicas[(shard, slot)]
            out.append(
                {r.key: r for r in replica.index.snapshot().iter_records()}
            )
        return out

    def close(self) -> None:
        self.coordinator.close()
        for r in self.replicas.values():
            r.close()


def build_local_cluster(
    num_shards: int = 3,
    replication_factor: int = 3,
    storage_dir: Optional[Path] = None,
) -> LocalCluster:
    replicas: dict[tuple[int, int], Replica] = {}
    handles = {}
    for s in range(num_shards):
        for r in range(replication_factor):
            storage = None
            if storage_dir is not None:
                storage = Path(storage_dir) / "shards" / f"s{s}" / f"r{r}"
            replica = Replica(s, r, storage_dir=storage)
            replicas[(s, r)] = replica
            handles[(s, r)] = LocalReplicaHandle(replica, f"local/s{s}r{r}")
    coordinator = ShardCoordinator(
        num_shards, replication_factor, handles, storage_dir=storage_dir
    )
    return LocalCluster(coordinator=coordinator, replicas=replicas)


_QUERY_TOKEN_POOL = [w for vocab in (VARIABLES, INSTITUTES, EXPERIMENTS) for w in vocab]

_FILTER_FIELDS = {
    "project": PROJECTS,
    "variable": VARIABLES,
    "institute": INSTITUTES,
    "experiment": EXPERIMENTS,
}

_FACETABLE = ("project", "variable", "institute", "experiment", "nosuchfield")


def random_query(rng: random.Random) -> QuerySpec:
    """A randomized QuerySpec covering text, filters, facets, windows and
    paging shapes (including empty pages and deep offsets)."""
    n_tokens = rng.choice((0, 0, 0, 1, 1, 2))
    query_text = " ".join(rng.sample(_QUERY_TOKEN_POOL, k=n_tokens))
    filters = []
    for _ in range(rng.choice((0, 0, 0, 1, 1, 2))):
        fname = rng.choice(sorted(_FILTER_FIELDS))
        filters.append((fname, rng.choice(_FILTER_FIELDS[fname])))
    facet_fields = tuple(rng.sample(_FACETABLE, k=rng.choice((0, 1, 1, 2))))
    from_ms = to_ms = None
    if rng.random() < 0.3:
        lo = SIM_YEAR_START_MS + rng.randrange(SIM_YEAR_MS)
        hi = lo + rng.randrange(SIM_YEAR_MS // 4)
        if rng.random() < 0.5:
            from_ms = lo
        to_ms = hi if rng.random() < 0.7 else None
    return QuerySpec(
        query_text=query_text,
        filters=tuple(filters),
        record_type=rng.choice(list(RecordType)),
        facet_fields=facet_fields,
        from_ms=from_ms,
        to_ms=to_ms,
        offset=rng.choice((0, 0, 0, 1, 7, 50, 1200)),
        limit=rng.choice((0, 1, 5, 10, 25)),
    )


def result_triple(res: Any) -> tuple[int, list[str], dict]:
    """(num_found, page ids, facet counts) from a SearchResult."""
    return res.num_found, [d.id for d in res.docs], res.facet_counts
