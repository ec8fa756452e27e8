"""Operator CLI: one binary, multiple roles selected by subcommand."""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import tempfile
import threading
from pathlib import Path
from urllib.parse import urlsplit

import requests

from .cluster.replica import Replica
from .cluster.server import build_replica_server
from .service.check import run_convergence_check
from .service.config import ConfigError, ServiceConfig, load_config
from .service.runtime import ServiceRuntime
from .sim.scenario import load_scenario
from .sim.server import build_sim_server

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _resolve_config_path(args: argparse.Namespace) -> str:
    # The environment variable wins over --config when both are set.
    env = os.environ.get("SUPERINDEX_CONFIG")
    if env:
        return env
    if getattr(args, "config", None):
        return args.config
    raise ConfigError("missing_config", "no --config given and SUPERINDEX_CONFIG unset")


def _load(args: argparse.Namespace) -> ServiceConfig:
    return load_config(_resolve_config_path(args))


def _wait_for_interrupt(on_stop) -> None:
    stop = threading.Event()

    def handler(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, handler)
    signal.signal(signal.SIGTERM, handler)
    stop.wait()
    on_stop()


def cmd_serve(args: argparse.Namespace) -> int:
    config = _load(args)
    runtime = ServiceRuntime(config)
    runtime.start()
    print(f"listening on http://{config.http_host}:{runtime.api.port}", flush=True)
    _wait_for_interrupt(runtime.stop)
    return EXIT_OK


def cmd_replica(args: argparse.Namespace) -> int:
    config = _load(args)
    if not (0 <= args.shard < config.num_shards):
        print(f"shard must be 0..{config.num_shards - 1}", file=sys.stderr)
        return EXIT_USAGE
    if not (0 <= args.slot < config.replication_factor):
        print(f"slot must be 0..{config.replication_factor - 1}", file=sys.stderr)
        return EXIT_USAGE
    endpoint = config.endpoint_for(args.shard, args.slot)
    if endpoint == "local":
        print(
            f"replica s{args.shard}r{args.slot} is configured as 'local'; "
            "it runs inside `serve`",
            file=sys.stderr,
        )
        return EXIT_ERROR
    parts = urlsplit(endpoint)
    storage = config.data_dir / "shards" / f"s{args.shard}" / f"r{args.slot}"
    replica = Replica(args.shard, args.slot, storage_dir=storage)
    server = build_replica_server(
        replica, parts.hostname or "127.0.0.1", parts.port or 80
    )
    server.start()
    print(
        f"replica s{args.shard}r{args.slot} listening on {endpoint} "
        f"(watermark {replica.watermark})",
        flush=True,
    )

    def stop() -> None:
        server.shutdown()
        replica.persist()
        replica.close()

    _wait_for_interrupt(stop)
    return EXIT_OK


def _service_url(args: argparse.Namespace) -> str:
    if getattr(args, "url", None):
        return args.url.rstrip("/")
    config = _load(args)
    return f"http://{config.http_host}:{config.http_port}"


def cmd_harvest(args: argparse.Namespace) -> int:
    url = _service_url(args)
    resp = requests.post(
        f"{url}/admin/harvest",
        json={"source_id": args.source, "full": args.full},
        timeout=3600,
    )
    print(json.dumps(resp.json(), indent=2, sort_keys=True))
    return EXIT_OK if resp.status_code == 200 else EXIT_ERROR


def cmd_status(args: argparse.Namespace) -> int:
    url = _service_url(args)
    resp = requests.get(f"{url}/status", timeout=30)
    print(json.dumps(resp.json(), indent=2, sort_keys=True))
    return EXIT_OK if resp.status_code == 200 else EXIT_ERROR


def cmd_simulate(args: argparse.Namespace) -> int:
    from .sim.scenario import build_nodes

    scenario = load_scenario(args.scenario)
    nodes = build_nodes(scenario)
    servers = []
    for i, node in enumerate(nodes):
        server = build_sim_server(node, args.host, args.base_port + i)
        server.start()
        servers.append(server)
        print(f"{node.source_id} -> http://{args.host}:{server.port}", flush=True)

    def stop() -> None:
        for s in servers:
            s.shutdown()

    _wait_for_interrupt(stop)
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.data_dir:
        report = run_convergence_check(
            scenario, args.data_dir, args.shards, args.replicas
        )
    else:
        with tempfile.TemporaryDirectory(prefix="superindex-check-") as td:
            report = run_convergence_check(scenario, td, args.shards, args.replicas)
    for line in report.summary_lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superindex",
        description="Federated metadata super-index: serve, replicate, "
        "harvest, and verify.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the coordinator (plus local replicas)")
    p.add_argument("--config", help="path to the service config JSON")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replica", help="run one replica process")
    p.add_argument("--config", help="path to the service config JSON")
    p.add_argument("--shard", type=int, required=True)
    p.add_argument("--slot", type=int, required=True)
    p.set_defaults(fn=cmd_replica)

    p = sub.add_parser("harvest", help="trigger a harvest pass on the service")
    p.add_argument("--source", required=True, help="source_id to harvest")
    p.add_argument("--full", action="store_true", help="force a full harvest")
    p.add_argument("--config", help="path to the service config JSON")
    p.add_argument("--url", help="service base URL (overrides config)")
    p.set_defaults(fn=cmd_harvest)

    p = sub.add_parser("status", help="print cluster and harvest status")
    p.add_argument("--config", help="path to the service config JSON")
    p.add_argument("--url", help="service base URL (overrides config)")
    p.set_defaults(fn=cmd_status)

    p = sub.add_parser("simulate", help="serve a scenario's sim nodes over HTTP")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--base-port", type=int, default=8900)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser(
        "check", help="end-to-end convergence check against a scenario"
    )
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--data-dir", help="reuse/persist cluster state here")
    p.add_argument("--shards", type=int, default=3)
    p.add_argument("--replicas", type=int, default=3)
    p.set_defaults(fn=cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error [{e.code}]: {e}", file=sys.stderr)
        return EXIT_ERROR
    except requests.RequestException as e:
        print(f"request failed: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
