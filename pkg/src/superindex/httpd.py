"""Minimal threaded JSON-over-HTTP server used by every process role.

Routes are exact (method, path) pairs mapped to handlers taking the parsed
query parameters and optional JSON body. Handlers return (status, payload);
dict/list payloads are serialized as compact JSON with sorted keys so
responses are byte-stable, strings go out as text/plain.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Mapping
from urllib.parse import parse_qs, urlsplit

logger = logging.getLogger(__name__)

Params = Mapping[str, list[str]]
Handler = Callable[[Params, Any], tuple[int, Any]]


class ApiError(Exception):
    """Maps to an HTTP error response {"error": code}."""

    def __init__(self, status: int, code: str, message: str = ""):
        super().__init__(message or code)
        self.status = status
        self.code = code


def json_bytes(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


class JsonHttpServer:
    def __init__(self, host: str, port: int, routes: dict[tuple[str, str], Handler]):
        self.routes = routes
        outer = self

        class _RequestHandler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt: str, *args: Any) -> None:
                logger.debug("%s %s", self.address_string(), fmt % args)

            def _handle(self, method: str) -> None:
                parts = urlsplit(self.path)
                params = parse_qs(parts.query, keep_blank_values=True)
                body = None
                length = int(self.headers.get("Content-Length") or 0)
                if length:
                    raw = self.rfile.read(length)
                    try:
                        body = json.loads(raw)
                    except ValueError:
                        self._send(400, {"error": "bad_json"})
                        return
                handler = outer.routes.get((method, parts.path))
                if handler is None:
                    self._send(404, {"error": "not_found"})
                    return
                try:
                    status, payload = handler(params, body)
                except ApiError as e:
                    self._send(e.status, {"error": e.code})
                    return
                except Exception:
                    logger.exception("handler failed: %s %s", method, parts.path)
                    self._send(500, {"error": "internal"})
                    return
                self._send(status, payload)

            def _send(self, status: int, payload: Any) -> None:
                if isinstance(payload, (bytes, bytearray)):
                    data, ctype = bytes(payload), "application/json"
                elif isinstance(payload, str):
                    data, ctype = payload.encode("utf-8"), "text/plain; charset=utf-8"
                else:
                    data, ctype = json_bytes(payload), "application/json"
                self.send_response(status)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_GET(self) -> None:
                self._handle("GET")

            def do_POST(self) -> None:
                self._handle("POST")

        self._httpd = ThreadingHTTPServer((host, port), _RequestHandler)
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)
