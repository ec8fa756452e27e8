"""Deterministic corpus and mutation-script generation.

Everything is a pure function of its seed: the same (seed, n, source_id)
always produces identical records, byte for byte, on any platform. Facet
values come from small fixed vocabularies so queries and facet counts in
tests hit predictable subsets.
"""

from __future__ import annotations

import random
from typing import Any

from ..records import MetadataRecord, RecordType, to_document, validate

PROJECTS = ("CMIP5", "CMIP6", "obs4MIPs")

VARIABLES = (
    "tas", "pr", "psl", "ua", "va", "ta", "zg", "hus", "huss", "tasmax",
    "tasmin", "sfcwind", "clt", "rsds", "rlds", "mrro", "mrso", "snw",
    "sic", "tos",
)

INSTITUTES = (
    "gfdl", "gsfc", "llnl", "ipsl", "mpi", "ncar", "mohc", "bcc", "miroc",
    "csiro",
)

EXPERIMENTS = ("historical", "piControl", "amip", "rcp45", "rcp85", "ssp585")

_TYPE_POOL = (
    RecordType.DATASET,
    RecordType.DATASET,
    RecordType.DATASET,
    RecordType.FILE,
    RecordType.FILE,
    RecordType.AGGREGATION,
)

# All generated timestamps fall inside one simulated year.
SIM_YEAR_START_MS = 1_514_764_800_000  # 2018-01-01T00:00:00.000Z
SIM_YEAR_MS = 365 * 24 * 3600 * 1000
SIM_YEAR_END_MS = SIM_YEAR_START_MS + SIM_YEAR_MS


def _make_record(rng: random.Random, source_id: str, id: str, ts: int) -> MetadataRecord:
    variables = rng.sample(VARIABLES, k=rng.choice((1, 1, 2)))
    institute = rng.choice(INSTITUTES)
    project = rng.choice(PROJECTS)
    experiment = rng.choice(EXPERIMENTS)
    fields = {
        "project": [project],
        "variable": list(variables),
        "institute": [institute],
        "experiment": [experiment],
        "title": [f"{variables[0]} {experiment} from {institute} ({project})"],
        "url": [f"https://{source_id}.example.org/catalog/{id}.nc"],
    }
    return validate(
        {
            "type": rng.choice(_TYPE_POOL).value,
            "id": id,
            "version": 0,
            "source_node": source_id,
            "timestamp_ms": ts,
            "fields": fields,
        }
    )


def generate_corpus(seed: int, n: int, source_id: str) -> list[MetadataRecord]:
    """n deterministic records for one source, ids `{source_id}-{k}`."""
    rng = random.Random(f"{seed}/{source_id}/corpus")
    return [
        _make_record(
            rng,
            source_id,
            f"{source_id}-{k}",
            SIM_YEAR_START_MS + rng.randrange(SIM_YEAR_MS),
        )
        for k in range(n)
    ]


def generate_script(
    seed: int,
    source_id: str,
    initial: list[MetadataRecord],
    steps: int,
    start_ms: int | None = None,
    delete_frac: float = 0.15,
    backdate_frac: float = 0.08,
    backdate_window_ms: int = 60_000,
) -> list[dict[str, Any]]:
    """A scripted add/update/delete timeline against an initial corpus.

    Step times are non-decreasing, starting after the corpus timestamps.
    A back-dated update carries a `stamp_ms` slightly behind its step time,
    modeling source-side clock skew within the dedup window.
    """
    rng = random.Random(f"{seed}/{source_id}/script")
    live: dict[tuple[str, str], MetadataRecord] = {r.key: r for r in initial}
    at_ms = start_ms if start_ms is not None else SIM_YEAR_END_MS
    out: list[dict[str, Any]] = []
    fresh = 0
    for _ in range(steps):
        at_ms += rng.randrange(500, 5000)
        roll = rng.random()
        if live and roll < delete_frac:
            key = rng.choice(sorted(live))
            del live[key]
            out.append(
                {"at_ms": at_ms, "op": "delete", "key": {"type": key[0], "id": key[1]}}
            )
        elif live and roll < 0.75:
            key = rng.choice(sorted(live))
            prev = live[key]
            new = _make_record(rng, source_id, prev.id, prev.timestamp_ms)
            new = MetadataRecord(
                record_type=prev.record_type,
                id=prev.id,
                version=prev.version,
                source_node=source_id,
                timestamp_ms=prev.timestamp_ms,
                fields=new.fields,
            )
            step: dict[str, Any] = {
                "at_ms": at_ms,
                "op": "update",
                "record": to_document(new),
            }
            if rng.random() < backdate_frac / max(0.75 - delete_frac, 0.01):
                step["stamp_ms"] = at_ms - rng.randrange(1, backdate_window_ms)
            out.append(step)
            live[key] = new
        else:
            rid = f"{source_id}-m{fresh}"
            fresh += 1
            rec = _make_record(rng, source_id, rid, at_ms)
            out.append({"at_ms": at_ms, "op": "add", "record": to_document(rec)})
            live[rec.key] = rec
    return out
