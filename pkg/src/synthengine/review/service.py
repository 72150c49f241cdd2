"""HTTP surface for the human review loop.

Endpoints:
    GET  /api/queue/next       next pending item (204 when the queue is done)
    POST /api/verdict          {"id", "decision", "reviewer"}; decided_at is server-assigned
    GET  /api/stats            counts by status
    GET  /api/item/{id}/image  image bytes for a queued item

The bundled single-page review UI is served from the package's static/
directory at /. All mutations are serialized through the queue's writer lock;
a verdict is on disk before the 200 goes out.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from synthengine.errors import ReviewConflict, ReviewNotFound, ReviewError
from synthengine.review.log import ReviewQueue

STATIC_DIR = Path(__file__).parent / "static"


class ReviewServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, addr: tuple[str, int], queue: ReviewQueue, images_root: Path | None):
        super().__init__(addr, _Handler)
        self.queue = queue
        self.images_root = images_root

    def serve_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


class _Handler(BaseHTTPRequestHandler):
    server: ReviewServer

    # Quiet by default; the CLI decides what to print.
    def log_message(self, fmt: str, *args) -> None:
        pass

    def _send_json(self, status: int, obj) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, message: str) -> None:
        self._send_json(status, {"error": message})

    def do_GET(self) -> None:  # noqa: N802
        path = self.path.split("?", 1)[0]
        if path == "/api/queue/next":
            item = self.server.queue.next_item()
            if item is None:
                self.send_response(204)
                self.send_header("Content-Length", "0")
                self.end_headers()
                return
            self._send_json(200, item.to_json_obj())
        elif path == "/api/stats":
            self._send_json(200, self.server.queue.stats())
        elif path.startswith("/api/item/") and path.endswith("/image"):
            rid = path[len("/api/item/") : -len("/image")]
            self._serve_image(rid)
        elif path.startswith("/api/"):
            self._send_error_json(404, f"no such endpoint: {path}")
        else:
            self._serve_static(path)

    def do_POST(self) -> None:  # noqa: N802
        path = self.path.split("?", 1)[0]
        if path != "/api/verdict":
            self._send_error_json(404, f"no such endpoint: {path}")
            return
        length = int(self.headers.get("Content-Length", "0"))
        try:
            body = json.loads(self.rfile.read(length) or b"{}")
            rid = body["id"]
            decision = body["decision"]
            reviewer = body.get("reviewer", "anonymous")
        except (json.JSONDecodeError, KeyError) as exc:
            self._send_error_json(400, f"bad verdict body: {exc}")
            return
        try:
            verdict = self.server.queue.submit_verdict(rid, decision, reviewer)
        except ReviewNotFound as exc:
            self._send_error_json(404, str(exc))
            return
        except ReviewConflict as exc:
            self._send_error_json(409, str(exc))
            return
        except ReviewError as exc:
            self._send_error_json(400, str(exc))
            return
        self._send_json(200, verdict.to_json_obj())

    def _serve_image(self, rid: str) -> None:
        item = self.server.queue.get_item(rid)
        if item is None:
            self._send_error_json(404, f"unknown item {rid}")
            return
        candidates = []
        if item.image_path:
            p = Path(item.image_path)
            if p.is_absolute():
                candidates.append(p)
            else:
                if self.server.images_root is not None:
                    candidates.append(self.server.images_root / p)
                    candidates.append(self.server.images_root / p.name)
                candidates.append(p)
        if self.server.images_root is not None:
            candidates.extend(sorted(self.server.images_root.glob(rid + ".*")))
        target = next((c for c in candidates if c.is_file()), None)
        if target is None:
            self._send_error_json(404, f"image for {rid} not found")
            return
        data = target.read_bytes()
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _serve_static(self, path: str) -> None:
        name = "index.html" if path in ("", "/") else path.lstrip("/")
        target = (STATIC_DIR / name).resolve()
        if STATIC_DIR.resolve() not in target.parents and target != STATIC_DIR.resolve():
            self._send_error_json(404, "not found")
            return
        if not target.is_file():
            self._send_error_json(404, f"not found: {path}")
            return
        data = target.read_bytes()
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def make_server(addr: str, queue: ReviewQueue, images_root: str | Path | None) -> ReviewServer:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ReviewError(f"addr must be HOST:PORT, got {addr!r}")
    root = Path(images_root) if images_root is not None else None
    return ReviewServer((host, int(port)), queue, root)
