"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v`; the per-criterion lines go
to the real stdout so they are visible regardless of capture settings.
"""

from __future__ import annotations

import json
import random
import sys
import time
from contextlib import contextmanager

import pytest
import requests

from helpers import build_local_cluster, random_query, result_triple
from superindex.cluster import ReplicaState
from superindex.harvest import (
    CursorStore,
    Harvester,
    LocalSimClient,
    SourceNodeConfig,
    SourceUnreachable,
)
from superindex.index import FacetedIndex, QuerySpec
from superindex.records import RecordType, digest, digest_hex, to_document
from superindex.service import build_api_server
from superindex.service.check import expected_union, run_convergence_check
from superindex.sim import (
    build_nodes,
    generate_corpus,
    load_scenario,
    randomized_scenario,
)


def report(line: str) -> None:
    import conftest

    conftest.acceptance_lines.append(line)
    print(line, file=sys.__stdout__, flush=True)


@contextmanager
def criterion(num: int, title: str, budget_s: float):
    t0 = time.time()
    try:
        yield
        elapsed = time.time() - t0
        assert elapsed < budget_s, f"criterion {num} took {elapsed:.1f}s (budget {budget_s}s)"
    except BaseException:
        report(f"FAIL  criterion {num}: {title} ({time.time() - t0:.1f}s)")
        raise
    report(f"PASS  criterion {num}: {title} ({time.time() - t0:.1f}s)")


def ingest(cluster, records):
    for r in records:
        cluster.coordinator.upsert(r)
    cluster.coordinator.commit_all()


def fill_oracle(records) -> FacetedIndex:
    idx = FacetedIndex()
    for r in records:
        idx.upsert(r)
    idx.commit()
    return idx


def replica_fingerprint(replica) -> bytes:
    docs = [to_document(r) for r in replica.index.snapshot().records_sorted()]
    return json.dumps(docs, sort_keys=True).encode()


def source_fingerprints(nodes) -> dict:
    return {
        key: (rec.version, digest_hex(digest(rec)), rec.source_node)
        for key, rec in expected_union(nodes).items()
    }


def cluster_fingerprints(cluster) -> dict:
    out = {}
    for shard in range(cluster.coordinator.num_shards):
        _, records = cluster.coordinator.handle(shard, 0).snapshot()
        for r in records:
            out[r.key] = (r.version, digest_hex(digest(r)), r.source_node)
    return out


def test_criterion_1_sharded_search_oracle_equivalence():
    with criterion(1, "sharded search equals unsharded oracle on 5000 docs x 200 queries", 60):
        corpus = generate_corpus(1001, 5000, "c1")
        assert {r.record_type for r in corpus} == set(RecordType)

        cluster = build_local_cluster(3, 3)
        try:
            ingest(cluster, corpus)
            oracle_idx = fill_oracle(corpus)
            rng = random.Random(1001)
            for i in range(200):
                q = random_query(rng)
                got = result_triple(cluster.coordinator.scatter_gather(q))
                want = result_triple(oracle_idx.search(q))
                assert got == want, f"query {i}: {q}"
        finally:
            cluster.close()


def test_criterion_2_federation_convergence(tmp_path):
    with criterion(2, "3 sources x 2000 records + 500-step scripts converge exactly", 120):
        scenario = randomized_scenario(
            seed=1002, n_nodes=3, initial_n=2000, steps=500,
            delete_frac=0.15, backdate_frac=0.08,
        )
        for spec in scenario.nodes:
            deletes = sum(1 for s in spec.script if s["op"] == "delete")
            backdated = sum(1 for s in spec.script if "stamp_ms" in s)
            assert deletes >= 50, f"{spec.source_id}: only {deletes} deletes"
            assert backdated >= 25, f"{spec.source_id}: only {backdated} back-dated updates"

        nodes = build_nodes(scenario)
        cluster = build_local_cluster(3, 3)
        try:
            cursors = CursorStore(tmp_path / "cursors")
            harvester = Harvester(cluster.coordinator, cursors)
            configs = {
                n.source_id: SourceNodeConfig(
                    source_id=n.source_id, base_url="sim://", page_size=100
                )
                for n in nodes
            }
            for node in nodes:
                harvester.full_harvest(configs[node.source_id], LocalSimClient(node))
            # mutate halfway, sync (pushes cursors into script time so the
            # later back-dated stamps really land behind them), then finish
            for node in nodes:
                midpoint = node.script[len(node.script) // 2]["at_ms"]
                node.advance(midpoint)
            for node in nodes:
                harvester.incremental_sync(configs[node.source_id], LocalSimClient(node))
            for node in nodes:
                node.advance(node.script_end_ms())
            # quiesce: one final sync + one reconcile per source
            for node in nodes:
                harvester.incremental_sync(configs[node.source_id], LocalSimClient(node))
                harvester.reconcile(configs[node.source_id], LocalSimClient(node))

            assert cluster_fingerprints(cluster) == source_fingerprints(nodes)
        finally:
            cluster.close()


def test_criterion_3_fault_tolerance():
    with criterion(3, "replica loss keeps oracle equality; shard loss gives 503", 120):
        corpus = generate_corpus(1003, 5000, "c3")
        cluster = build_local_cluster(3, 3)
        server = build_api_server("127.0.0.1", 0, cluster.coordinator)
        server.start()
        try:
            ingest(cluster, corpus[:2500])
            for shard in range(3):
                cluster.kill(shard, (shard + 1) % 3)
            ingest(cluster, corpus[2500:])

            oracle_idx = fill_oracle(corpus)
            rng = random.Random(1003)
            for _ in range(100):
                q = random_query(rng)
                assert result_triple(
                    cluster.coordinator.scatter_gather(q)
                ) == result_triple(oracle_idx.search(q))

            # revival: catch-up restores byte-identical replicas
            for shard in range(3):
                cluster.revive(shard, (shard + 1) % 3)
            cluster.coordinator.health_check()
            cluster.coordinator.recover_all()
            for shard in range(3):
                assert cluster.coordinator.replica_state(shard, (shard + 1) % 3) == ReplicaState.LIVE
                prints = {
                    replica_fingerprint(cluster.replicas[(shard, slot)])
                    for slot in range(3)
                }
                assert len(prints) == 1, f"shard {shard} replicas not byte-identical"

            # an entire shard down: never a partial 200
            for slot in range(3):
                cluster.kill(1, slot)
            base = f"http://127.0.0.1:{server.port}"
            resp = requests.get(f"{base}/search", timeout=10)
            assert resp.status_code == 503
            assert resp.json() == {"error": "incomplete_coverage"}
        finally:
            server.shutdown()
            cluster.close()


def test_criterion_4_idempotence_and_crash_safety(tmp_path):
    with criterion(4, "re-runs change nothing; cursor restart loses no updates", 120):
        scenario = randomized_scenario(seed=1004, n_nodes=2, initial_n=800, steps=200)
        nodes = build_nodes(scenario)
        cluster = build_local_cluster(3, 3)
        try:
            cursors = CursorStore(tmp_path / "cs1")
            harvester = Harvester(cluster.coordinator, cursors)
            configs = {
                n.source_id: SourceNodeConfig(
                    source_id=n.source_id, base_url="sim://", page_size=100
                )
                for n in nodes
            }
            for node in nodes:
                harvester.full_harvest(configs[node.source_id], LocalSimClient(node))
                node.advance(node.script_end_ms())
                harvester.incremental_sync(configs[node.source_id], LocalSimClient(node))
                harvester.reconcile(configs[node.source_id], LocalSimClient(node))
            settled = cluster_fingerprints(cluster)
            assert settled == source_fingerprints(nodes)

            # idempotence: every pass repeated, nothing moves
            for node in nodes:
                cfg, client = configs[node.source_id], LocalSimClient(node)
                h = harvester.full_harvest(cfg, client)
                assert h.upserted == 0
                s = harvester.incremental_sync(cfg, client)
                assert s.upserted == 0
                r = harvester.reconcile(cfg, client)
                assert (r.deleted, r.repaired) == (0, 0)
            assert cluster_fingerprints(cluster) == settled
        finally:
            cluster.close()

        # crash mid-harvest: page checkpoints + restart-from-cursor
        node = build_nodes(randomized_scenario(seed=1004, n_nodes=1, initial_n=1200, steps=0))[0]
        cluster2 = build_local_cluster(3, 3)
        try:
            cursors2 = CursorStore(tmp_path / "cs2")
            harvester2 = Harvester(cluster2.coordinator, cursors2)
            cfg = SourceNodeConfig(source_id=node.source_id, base_url="sim://", page_size=100)
            inner = LocalSimClient(node)
            pages = {"n": 0}

            class DiesMidHarvest:
                def fetch_page(self, *args):
                    if pages["n"] == 4:
                        raise KeyboardInterrupt("killed between pages")
                    pages["n"] += 1
                    return inner.fetch_page(*args)

                fetch_inventory_page = inner.fetch_inventory_page

            with pytest.raises(KeyboardInterrupt):
                harvester2.full_harvest(cfg, DiesMidHarvest())
            cursor = cursors2.load(node.source_id)
            assert cursor is not None and cursor.last_sync_ms > 0

            # a fresh harvester process resumes from the persisted cursor
            harvester3 = Harvester(cluster2.coordinator, CursorStore(tmp_path / "cs2"))
            harvester3.incremental_sync(cfg, inner)
            harvester3.reconcile(cfg, inner)
            assert cluster_fingerprints(cluster2) == source_fingerprints([node])
        finally:
            cluster2.close()


def test_criterion_5_determinism_and_wire_stability(tmp_path):
    with criterion(5, "golden scenario reproduces byte-identical responses; frames verify", 120):
        from pathlib import Path

        scenario_path = Path(__file__).resolve().parent.parent / "scenarios" / "golden.json"
        queries = [
            {},
            {"q": "tas", "facets": "project", "limit": "20"},
            {"type": "File", "facets": "project,institute", "limit": "15"},
            {"type": "Aggregation", "facets": "variable", "limit": "0"},
            {"project": "CMIP6", "facets": "experiment", "limit": "8", "offset": "3"},
        ]

        def run(tag: str) -> list[bytes]:
            scenario = load_scenario(scenario_path)
            data_dir = tmp_path / tag
            result = run_convergence_check(scenario, data_dir)
            assert result.ok, result.problems
            cluster = build_local_cluster(3, 3, storage_dir=data_dir)
            server = build_api_server("127.0.0.1", 0, cluster.coordinator)
            server.start()
            try:
                base = f"http://127.0.0.1:{server.port}"
                out = []
                for params in queries:
                    resp = requests.get(f"{base}/search", params=params, timeout=10)
                    assert resp.status_code == 200
                    out.append(resp.content)
                return out
            finally:
                server.shutdown()
                cluster.close()

        first = run("run1")
        second = run("run2")
        assert first == second
        assert any(json.loads(b)["numFound"] > 0 for b in first)

        # op-log frames round-trip and catch corruption
        from superindex.index.oplog import CorruptFrame, encode_op_frame, read_frames
        from superindex.index.oplog import op_upsert

        frames = b"".join(
            encode_op_frame(op_upsert(seq, r))
            for seq, r in enumerate(generate_corpus(1005, 20, "frames"), start=1)
        )
        payloads, clean = read_frames(frames)
        assert len(payloads) == 20 and clean == len(frames)
        corrupted = bytearray(frames)
        corrupted[len(frames) // 2] ^= 0x01
        with pytest.raises(CorruptFrame):
            read_frames(bytes(corrupted))


def test_criterion_6_throughput_smoke():
    with criterion(6, "10k records through the 3x3 write path + 100 queries", 300):
        corpus = generate_corpus(1006, 10_000, "c6")
        cluster = build_local_cluster(3, 3)
        try:
            t0 = time.time()
            for i, r in enumerate(corpus):
                cluster.coordinator.upsert(r)
                if (i + 1) % 1000 == 0:
                    cluster.coordinator.commit_all()
            cluster.coordinator.commit_all()
            ingest_s = time.time() - t0

            total = sum(cluster.coordinator.count(rt) for rt in RecordType)
            assert total == 10_000

            t1 = time.time()
            rng = random.Random(1006)
            for _ in range(100):
                cluster.coordinator.scatter_gather(random_query(rng))
            query_s = time.time() - t1
            report(
                f"      criterion 6 detail: ingest {ingest_s:.1f}s "
                f"({10_000 / ingest_s:.0f} docs/s x3 replicas), "
                f"100 queries in {query_s:.2f}s"
            )
        finally:
            cluster.close()
