"""Real-socket coverage of every HTTP surface: replica RPC, sim node
protocol, and the public service API."""

from __future__ import annotations

import json

import pytest
import requests

from helpers import build_local_cluster, rec
from superindex.cluster import (
    HttpReplicaHandle,
    Replica,
    ReplicaState,
    ReplicaUnreachable,
    ShardCoordinator,
    build_replica_server,
)
from superindex.harvest import (
    CursorStore,
    Harvester,
    HttpSourceClient,
    LocalSimClient,
    SourceNodeConfig,
    SourceUnreachable,
)
from superindex.index import QuerySpec
from superindex.records import RecordType, digest, digest_hex
from superindex.service import build_api_server
from superindex.sim import (
    SIM_YEAR_END_MS,
    SimNode,
    build_sim_server,
    generate_corpus,
)


@pytest.fixture
def http_replica():
    replica = Replica(0, 0)
    server = build_replica_server(replica, "127.0.0.1", 0)
    server.start()
    handle = HttpReplicaHandle(f"http://127.0.0.1:{server.port}")
    yield replica, handle
    server.shutdown()


def test_replica_rpc_round_trip(http_replica):
    replica, handle = http_replica
    from superindex.index.oplog import op_upsert

    r1 = rec(id="h1", ts=100, project="CMIP6")
    r2 = rec(id="h2", ts=200, project="CMIP5")
    assert handle.apply(op_upsert(1, r1)) == 1
    assert handle.apply(op_upsert(2, r2)) == 2
    # replays of already-applied seqs are no-ops
    assert handle.apply(op_upsert(1, r1)) == 2

    info = handle.commit()
    assert info["doc_count"] == 2

    res = handle.search(QuerySpec(facet_fields=("project",)))
    assert res.num_found == 2
    assert [d.id for d in res.docs] == ["h2", "h1"]
    assert res.facet_counts == {"project": {"CMIP5": 1, "CMIP6": 1}}

    assert handle.get_doc(RecordType.DATASET, "h1").id == "h1"
    assert handle.get_doc(RecordType.DATASET, "ghost") is None

    items = handle.inventory("n1")
    assert [it["id"] for it in items] == ["h1", "h2"]
    assert items[0]["digest"] == digest_hex(digest(r1))

    seq, records = handle.snapshot()
    assert seq == 2 and len(records) == 2

    health = handle.health()
    assert health == {"state": "Live", "watermark": 2}

    handle.set_state(ReplicaState.CATCHING_UP)
    assert replica.state == ReplicaState.CATCHING_UP


def test_replica_rpc_install_snapshot_and_log(http_replica):
    replica, handle = http_replica
    records = generate_corpus(70, 25, "snap")
    handle.install_snapshot(40, records)
    assert handle.health()["watermark"] == 40
    seq, got = handle.snapshot()
    assert seq == 40 and sorted(r.id for r in got) == sorted(r.id for r in records)

    from superindex.index.oplog import op_upsert

    handle.apply(op_upsert(41, rec(id="tail", ts=999)))
    resp = requests.get(
        f"{handle.endpoint_id}/replica/log", params={"from_seq": 40}, timeout=5
    )
    entries = resp.json()["entries"]
    assert [e["seq"] for e in entries] == [41]


def test_replica_search_get_with_params(http_replica):
    replica, handle = http_replica
    from superindex.index.oplog import op_upsert

    handle.apply(op_upsert(1, rec(id="g", ts=10, project="CMIP6")))
    handle.commit()
    resp = requests.get(
        f"{handle.endpoint_id}/replica/search",
        params={"q": "", "type": "Dataset", "facets": "project", "project": "CMIP6"},
        timeout=5,
    )
    body = resp.json()
    assert body["numFound"] == 1
    assert body["facet_counts"] == {"project": {"CMIP6": 1}}


def test_killed_replica_returns_503_and_maps_to_unreachable(http_replica):
    replica, handle = http_replica
    replica.kill()
    with pytest.raises(ReplicaUnreachable):
        handle.health()
    replica.revive()
    assert handle.health()["state"] == "Live"


def test_http_cluster_matches_local_cluster():
    corpus = generate_corpus(71, 150, "mix")

    local = build_local_cluster(2, 2)
    servers = []
    http_handles = {}
    replicas = {}
    try:
        for s in range(2):
            for r in range(2):
                replica = Replica(s, r)
                server = build_replica_server(replica, "127.0.0.1", 0)
                server.start()
                servers.append(server)
                replicas[(s, r)] = replica
                http_handles[(s, r)] = HttpReplicaHandle(
                    f"http://127.0.0.1:{server.port}"
                )
        http_coord = ShardCoordinator(2, 2, http_handles)

        for r in corpus:
            local.coordinator.upsert(r)
            http_coord.upsert(r)
        local.coordinator.commit_all()
        http_coord.commit_all()

        q = QuerySpec(facet_fields=("project", "variable"), limit=30)
        a = local.coordinator.scatter_gather(q)
        b = http_coord.scatter_gather(q)
        assert a.num_found == b.num_found
        assert [d.id for d in a.docs] == [d.id for d in b.docs]
        assert a.facet_counts == b.facet_counts
        http_coord.close()
    finally:
        local.close()
        for server in servers:
            server.shutdown()


@pytest.fixture
def sim_over_http():
    node = SimNode("wire")
    node.load_corpus(generate_corpus(72, 120, "wire"))
    server = build_sim_server(node, "127.0.0.1", 0)
    server.start()
    client = HttpSourceClient(f"http://127.0.0.1:{server.port}")
    yield node, server, client
    server.shutdown()


def test_sim_http_pages_match_local(sim_over_http):
    node, server, client = sim_over_http
    local = LocalSimClient(node)
    assert client.fetch_page(0, None, 0, 50) == local.fetch_page(0, None, 0, 50)
    assert client.fetch_page(0, None, 100, 50) == local.fetch_page(0, None, 100, 50)
    assert client.fetch_inventory_page(0, 200) == local.fetch_inventory_page(0, 200)


def test_sim_http_control_endpoints(sim_over_http):
    node, server, client = sim_over_http
    base = client.base_url
    target = next(iter(node.store.values()))
    from superindex.records import to_document

    resp = requests.post(
        f"{base}/sim/advance", json={"to_ms": SIM_YEAR_END_MS}, timeout=5
    )
    assert resp.json()["applied"] == 0  # no script loaded

    resp = requests.post(f"{base}/sim/fault", json={"mode": "unreachable"}, timeout=5)
    assert resp.json() == {"mode": "unreachable"}
    with pytest.raises(SourceUnreachable):
        client.fetch_page(0, None, 0, 10)
    requests.post(f"{base}/sim/fault", json={"mode": "none"}, timeout=5)
    assert client.fetch_page(0, None, 0, 10)["numFound"] == 120


def test_harvest_over_real_sockets(tmp_path, sim_over_http):
    node, server, client = sim_over_http
    cluster = build_local_cluster(3, 3)
    try:
        harvester = Harvester(cluster.coordinator, CursorStore(tmp_path))
        cfg = SourceNodeConfig(source_id="wire", base_url=client.base_url, page_size=37)
        stats = harvester.full_harvest(cfg, client)
        assert stats.fetched == 120
        expected = {
            r.key: (r.version, digest_hex(digest(r))) for r in node.store.values()
        }
        actual = {}
        for shard in range(3):
            _, records = cluster.coordinator.handle(shard, 0).snapshot()
            for r in records:
                actual[r.key] = (r.version, digest_hex(digest(r)))
        assert actual == expected
        # reconcile across the wire too
        del node.store[sorted(node.store)[0]]
        rstats = harvester.reconcile(cfg, client)
        assert rstats.deleted == 1
    finally:
        cluster.close()


@pytest.fixture
def api_stack():
    cluster = build_local_cluster(3, 3)
    server = build_api_server("127.0.0.1", 0, cluster.coordinator)
    server.start()
    base = f"http://127.0.0.1:{server.port}"
    yield cluster, base
    server.shutdown()
    cluster.close()


def test_api_empty_cluster_search(api_stack):
    cluster, base = api_stack
    resp = requests.get(f"{base}/search", timeout=5)
    assert resp.status_code == 200
    body = resp.json()
    assert body["numFound"] == 0
    assert body["docs"] == []
    assert body["offset"] == 0


def test_api_search_filters_and_facets(api_stack):
    cluster, base = api_stack
    for r in generate_corpus(73, 200, "api"):
        cluster.coordinator.upsert(r)
    cluster.coordinator.commit_all()
    resp = requests.get(
        f"{base}/search",
        params={"type": "Dataset", "facets": "project", "project": "CMIP6", "limit": 3},
        timeout=5,
    )
    body = resp.json()
    assert body["numFound"] > 0
    assert len(body["docs"]) <= 3
    assert set(body["facet_counts"]["project"]) == {"CMIP6"}
    for doc in body["docs"]:
        assert doc["project"] == ["CMIP6"]
        assert doc["type"] == "Dataset"


def test_api_search_post_body(api_stack):
    cluster, base = api_stack
    for r in generate_corpus(74, 50, "post"):
        cluster.coordinator.upsert(r)
    cluster.coordinator.commit_all()
    resp = requests.post(
        f"{base}/search", json={"type": "Dataset", "limit": 5}, timeout=5
    )
    assert resp.status_code == 200
    assert len(resp.json()["docs"]) <= 5


@pytest.mark.parametrize(
    "params,code",
    [
        ({"offset": "-1"}, "bad_offset"),
        ({"limit": "-2"}, "bad_limit"),
        ({"offset": "abc"}, "bad_offset"),
        ({"limit": "abc"}, "bad_limit"),
        ({"type": "Granule"}, "bad_type"),
        ({"from": "yesterday"}, "bad_timestamp"),
        ({"to": "2018-13-01T00:00:00.000Z"}, "bad_timestamp"),
        ({"offset": "999999", "limit": "2"}, "window_too_large"),
        ({"format": "xml"}, "bad_format"),
    ],
)
def test_api_search_rejects_bad_params(api_stack, params, code):
    cluster, base = api_stack
    resp = requests.get(f"{base}/search", params=params, timeout=5)
    assert resp.status_code == 400
    assert resp.json() == {"error": code}


def test_api_healthz(api_stack):
    cluster, base = api_stack
    resp = requests.get(f"{base}/healthz", timeout=5)
    assert resp.status_code == 200
    assert resp.text == "ok"


def test_api_dead_shard_gives_503_never_partial(api_stack):
    cluster, base = api_stack
    for r in generate_corpus(75, 100, "cov"):
        cluster.coordinator.upsert(r)
    cluster.coordinator.commit_all()
    for slot in range(3):
        cluster.kill(2, slot)
    resp = requests.get(f"{base}/search", timeout=5)
    assert resp.status_code == 503
    assert resp.json() == {"error": "incomplete_coverage"}


def test_api_status_reports_states_and_counts(api_stack):
    cluster, base = api_stack
    for r in generate_corpus(76, 80, "stat"):
        cluster.coordinator.upsert(r)
    cluster.coordinator.commit_all()
    cluster.kill(0, 1)
    cluster.coordinator.health_check()
    body = requests.get(f"{base}/status", timeout=5).json()
    health = body["cluster"]["health"]
    assert health["local/s0r1"] == "Down"
    assert sum(1 for v in health.values() if v == "Live") == 8
    counts = body["doc_counts"]
    assert sum(counts[t] for t in ("Dataset", "File", "Aggregation")) == 80
    # fresh cluster carries no cursors in this wiring
    assert body["cursors"] == {}
