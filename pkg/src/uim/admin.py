"""HTTP admin API: session monitoring, screen mirroring, disconnect, reload.

Plain JSON over loopback by default (trusted fixed network, no auth in v1).
Mirrors are server-sent event streams carrying one event per frame the
session handler presented.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

log = logging.getLogger("uim.admin")

MIRROR_HEARTBEAT_SECS = 15.0

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
}


class AdminServer:
    def __init__(self, uim_server) -> None:
        self.uim = uim_server
        config = uim_server.config
        handler = _make_handler(uim_server)
        self._httpd = ThreadingHTTPServer((config.admin_host, config.admin_port), handler)
        self._httpd.daemon_threads = True
        self.port = self._httpd.server_address[1]
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        name="admin-http", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=3)


def _make_handler(uim_server):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        uim = uim_server

        def log_message(self, fmt: str, *args) -> None:
            log.debug("%s " + fmt, self.address_string(), *args)

        # -- plumbing -----------------------------------------------------

        def _send_json(self, status: int, payload) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_error_json(self, status: int, code: str, message: str) -> None:
            self._send_json(status, {"code": code, "message": message})

        def _path_parts(self) -> list[str]:
            return [p for p in self.path.split("?")[0].split("/") if p]

        # -- routes ---------------------------------------------------------

        def do_GET(self) -> None:  # noqa: N802 (http.server naming)
            parts = self._path_parts()
            try:
                if parts == ["api", "sessions"]:
                    self._send_json(200, self.uim.registry.list_infos())
                elif parts == ["api", "repository"]:
                    snap = self.uim.holder.snapshot()
                    self._send_json(200, {
                        "version": snap.version,
                        "screens": sorted(snap.doc.screens),
                        "flows": sorted(snap.doc.flows),
                    })
                elif len(parts) == 4 and parts[:2] == ["api", "sessions"] and parts[3] == "mirror":
                    self._mirror(parts[2])
                elif not parts or parts[0] != "api":
                    self._static(parts)
                else:
                    self._send_error_json(404, "not_found", "unknown endpoint")
            except BrokenPipeError:
                pass
            except Exception:
                log.exception("admin GET %s failed", self.path)
                self._send_error_json(500, "internal", "internal error")

        def do_POST(self) -> None:  # noqa: N802
            parts = self._path_parts()
            try:
                if parts == ["api", "reload"]:
                    snap, error = self.uim.holder.reload()
                    if error is not None:
                        self._send_json(409, error.to_payload())
                    else:
                        self._send_json(200, {"version": snap.version})
                elif len(parts) == 4 and parts[:2] == ["api", "sessions"] and parts[3] == "disconnect":
                    rt = self.uim.registry.get(parts[2])
                    if rt is None:
                        self._send_error_json(404, "not_found", "no such session")
                    else:
                        rt.request_disconnect("Disconnected by administrator.")
                        self._send_json(200, {"session_id": parts[2], "disconnected": True})
                else:
                    self._send_error_json(404, "not_found", "unknown endpoint")
            except BrokenPipeError:
                pass
            except Exception:
                log.exception("admin POST %s failed", self.path)
                self._send_error_json(500, "internal", "internal error")

        # -- mirror stream --------------------------------------------------

        def _mirror(self, session_id: str) -> None:
            rt = self.uim.registry.get(session_id)
            if rt is None:
                self._send_error_json(404, "not_found", "no such session")
                return
            q = rt.subscribe_mirror()
            try:
                self.send_response(200)
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Connection", "close")
                self.end_headers()
                displayed = rt.displayed
                if displayed is not None:
                    self._sse("snapshot", {"rows": list(displayed.rows),
                                           "cursor": list(displayed.cursor)})
                while True:
                    try:
                        item = q.get(timeout=MIRROR_HEARTBEAT_SECS)
                    except queue.Empty:
                        self.wfile.write(b": ping\n\n")
                        self.wfile.flush()
                        continue
                    if item is None:
                        self._sse("end", {})
                        return
                    self._sse("frame", item)
            except (BrokenPipeError, ConnectionResetError):
                pass
            finally:
                rt.unsubscribe_mirror(q)
                self.close_connection = True

        def _sse(self, event: str, payload: dict) -> None:
            chunk = "event: %s\ndata: %s\n\n" % (event, json.dumps(payload))
            self.wfile.write(chunk.encode("utf-8"))
            self.wfile.flush()

        # -- console assets ---------------------------------------------------

        def _static(self, parts: list[str]) -> None:
            static_dir = self.uim.config.static_dir
            if not static_dir:
                body = b"admin API only; no console assets configured\n"
                self.send_response(200)
                self.send_header("Content-Type", "text/plain")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
                return
            name = "/".join(parts) or "index.html"
            base = Path(static_dir).resolve()
            target = (base / name).resolve()
            if not str(target).startswith(str(base)) or not target.is_file():
                self._send_error_json(404, "not_found", "no such file")
                return
            body = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type",
                             _CONTENT_TYPES.get(target.suffix, "application/octet-stream"))
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler
