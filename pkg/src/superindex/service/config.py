"""Service configuration: one JSON file describes a whole deployment.

Shape:

    {
      "cluster": {
        "num_shards": 3,
        "replication_factor": 3,
        "replicas": ["local", ..., "http://host:9201"]   # S*R entries,
      },                                                  # shard-major order
      "sources": [
        {"source_id": "node0", "base_url": "http://host:8900",
         "page_size": 100, "poll_interval_ms": 60000,
         "skew_epsilon_ms": 60000}
      ],
      "http": {"host": "127.0.0.1", "port": 8080},
      "data_dir": "/var/lib/superindex",
      "reconcile_every_n_cycles": 10
    }

A "local" replica entry is hosted inside the serve process; an http(s) URL
points at a separately run replica process. Every invariant violation is
rejected at startup with a distinct machine-readable code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..harvest.harvester import SourceNodeConfig


class ConfigError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class ServiceConfig:
    num_shards: int
    replication_factor: int
    replica_endpoints: list[str]
    http_host: str
    http_port: int
    data_dir: Path
    sources: list[SourceNodeConfig] = field(default_factory=list)
    reconcile_every_n_cycles: int = 10
    health_check_interval_ms: int = 1000

    def endpoint_for(self, shard: int, slot: int) -> str:
        return self.replica_endpoints[shard * self.replication_factor + slot]


def _require_int(obj: dict[str, Any], key: str, code: str, minimum: int) -> int:
    value = obj.get(key)
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(code, f"{key} must be an integer >= {minimum}, got {value!r}")
    return value


def parse_config(obj: dict[str, Any]) -> ServiceConfig:
    cluster = obj.get("cluster")
    if not isinstance(cluster, dict):
        raise ConfigError("missing_cluster", "config needs a 'cluster' object")
    num_shards = _require_int(cluster, "num_shards", "bad_num_shards", 1)
    replication_factor = _require_int(
        cluster, "replication_factor", "bad_replication_factor", 1
    )
    replicas = cluster.get("replicas")
    if not isinstance(replicas, list) or not all(isinstance(e, str) for e in replicas):
        raise ConfigError("bad_replicas", "'cluster.replicas' must be a list of strings")
    if len(replicas) != num_shards * replication_factor:
        raise ConfigError(
            "endpoint_count_mismatch",
            f"need {num_shards * replication_factor} replica endpoints "
            f"(num_shards x replication_factor), got {len(replicas)}",
        )
    for e in replicas:
        if e != "local" and not (e.startswith("http://") or e.startswith("https://")):
            raise ConfigError(
                "bad_endpoint", f"replica endpoint must be 'local' or an http(s) URL: {e!r}"
            )

    http = obj.get("http")
    if not isinstance(http, dict):
        raise ConfigError("missing_http", "config needs an 'http' object")
    host = http.get("host", "127.0.0.1")
    if not isinstance(host, str) or not host:
        raise ConfigError("bad_host", f"http.host must be a non-empty string, got {host!r}")
    port = http.get("port")
    if not isinstance(port, int) or isinstance(port, bool) or not (0 <= port <= 65535):
        raise ConfigError("bad_port", f"http.port must be 0..65535, got {port!r}")

    data_dir = obj.get("data_dir")
    if not isinstance(data_dir, str) or not data_dir:
        raise ConfigError("missing_data_dir", "config needs a 'data_dir' path")

    raw_sources = obj.get("sources", [])
    if not isinstance(raw_sources, list):
        raise ConfigError("bad_sources", "'sources' must be a list")
    sources: list[SourceNodeConfig] = []
    seen: set[str] = set()
    for raw in raw_sources:
        if not isinstance(raw, dict) or "source_id" not in raw or "base_url" not in raw:
            raise ConfigError(
                "bad_source", f"each source needs source_id and base_url: {raw!r}"
            )
        try:
            cfg = SourceNodeConfig(
                source_id=raw["source_id"],
                base_url=raw["base_url"],
                page_size=raw.get("page_size", 100),
                poll_interval_ms=raw.get("poll_interval_ms", 60_000),
                skew_epsilon_ms=raw.get("skew_epsilon_ms", 60_000),
            )
        except (ValueError, TypeError) as e:
            raise ConfigError("bad_source", f"source {raw.get('source_id')!r}: {e}")
        if cfg.source_id in seen:
            raise ConfigError(
                "duplicate_source_id", f"duplicate source_id {cfg.source_id!r}"
            )
        seen.add(cfg.source_id)
        sources.append(cfg)

    reconcile_every = obj.get("reconcile_every_n_cycles", 10)
    if not isinstance(reconcile_every, int) or isinstance(reconcile_every, bool) or reconcile_every < 1:
        raise ConfigError(
            "bad_reconcile_cadence",
            f"reconcile_every_n_cycles must be an integer >= 1, got {reconcile_every!r}",
        )
    health_ms = obj.get("health_check_interval_ms", 1000)
    if not isinstance(health_ms, int) or isinstance(health_ms, bool) or health_ms < 1:
        raise ConfigError(
            "bad_health_interval",
            f"health_check_interval_ms must be an integer >= 1, got {health_ms!r}",
        )

    config = ServiceConfig(
        num_shards=num_shards,
        replication_factor=replication_factor,
        replica_endpoints=list(replicas),
        http_host=host,
        http_port=port,
        data_dir=Path(data_dir),
        sources=sources,
        reconcile_every_n_cycles=reconcile_every,
        health_check_interval_ms=health_ms,
    )
    _check_data_dir(config.data_dir)
    return config


def _check_data_dir(data_dir: Path) -> None:
    try:
        data_dir.mkdir(parents=True, exist_ok=True)
        probe = data_dir / ".write-probe"
        probe.write_text("ok")
        probe.unlink()
    except OSError as e:
        raise ConfigError("data_dir_unwritable", f"data_dir {data_dir}: {e}")


def load_config(path: str | Path) -> ServiceConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as e:
        raise ConfigError("bad_config_file", f"cannot read {path}: {e}")
    except ValueError as e:
        raise ConfigError("bad_json", f"{path} is not valid JSON: {e}")
    if not isinstance(obj, dict):
        raise ConfigError("bad_json", f"{path} must contain a JSON object")
    return parse_config(obj)
