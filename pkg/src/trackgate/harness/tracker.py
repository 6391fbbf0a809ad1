"""Mock third-party tracker: the harness's adversary.

Serves the usual embedded content (script, image, stylesheet + font,
embeddable page) and tries every stateful mechanism on every response:
a uid cookie, an ETag, a Last-Modified date, and a cache lifetime.  Each
request is recorded as a TrackerObservation - the evidence the verdicts
are computed from.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from http.cookies import SimpleCookie
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qsl, urlsplit

LAST_MODIFIED = "Mon, 06 Jan 2020 08:00:00 GMT"


@dataclass
class TrackerObservation:
    """What the tracker saw in one request."""

    id: int
    session_label: str
    path: str
    headers: list[tuple[str, str]]
    cookies: dict[str, str]
    if_none_match: str | None
    if_modified_since: str | None
    referer: str | None
    user_agent: str | None
    query: dict[str, str]
    timestamp: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "session_label": self.session_label,
            "path": self.path,
            "headers": [list(pair) for pair in self.headers],
            "cookies": self.cookies,
            "if_none_match": self.if_none_match,
            "if_modified_since": self.if_modified_since,
            "referer": self.referer,
            "user_agent": self.user_agent,
            "query": self.query,
            "timestamp": self.timestamp,
        }


_CONTENT: dict[str, tuple[str, bytes]] = {
    "/script.js": ("text/javascript", b"window.__spy = true;\n"),
    "/pixel.png": (
        "image/png",
        bytes.fromhex(
            "89504e470d0a1a0a0000000d49484452000000010000000108060000001f15c489"
            "0000000d49444154789c626001000000ffff03000006000557bfabd40000000049454e44ae426082"
        ),
    ),
    "/style.css": ("text/css", b"body { font-family: Spy; }\n@font-face { font-family: Spy; src: url(font.woff); }\n"),
    "/font.woff": ("font/woff", b"wOFFfakefontbytes"),
    "/page.html": ("text/html", b"<html><head><title>embedded</title></head><body>tracker page</body></html>"),
    "/landing": ("text/html", b"<html><body>landed</body></html>"),
}


class _TrackerHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "MockTracker"

    def log_message(self, format, *args):
        pass

    def do_GET(self):
        tracker = self.server
        observation = tracker.record(self)
        path = self.path.split("?")[0]

        if path == "/redirect" and tracker.partner_url:
            uid, etag = tracker.issue_identifiers()
            self.send_response_only(301)
            self.send_header("Location", tracker.partner_url)
            self.send_header("Set-Cookie", f"uid={uid}; Path=/")
            self.send_header("ETag", f'"{etag}"')
            self.send_header("Content-Length", "0")
            self.end_headers()
            return

        content_type, body = _CONTENT.get(path, ("text/plain", b"tracker"))
        uid, etag = tracker.issue_identifiers()
        self.send_response_only(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Set-Cookie", f"uid={uid}; Path=/")
        self.send_header("ETag", f'"{etag}"')
        self.send_header("Last-Modified", LAST_MODIFIED)
        self.send_header("Cache-Control", "max-age=3600")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    do_POST = do_HEAD = do_GET


class MockTracker(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, rng: random.Random, partner_url: str | None = None):
        super().__init__(("127.0.0.1", 0), _TrackerHandler)
        self.rng = rng
        self.partner_url = partner_url
        self.session_label = ""
        self.observations: list[TrackerObservation] = []
        self.issued_uids: set[str] = set()
        self.issued_etags: set[str] = set()
        self.lock = threading.Lock()
        self._thread: threading.Thread | None = None

    @property
    def origin(self) -> str:
        return f"http://127.0.0.1:{self.server_address[1]}"

    def start(self) -> "MockTracker":
        self._thread = threading.Thread(
            target=lambda: self.serve_forever(poll_interval=0.05), daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()

    def issue_identifiers(self) -> tuple[str, str]:
        with self.lock:
            uid = f"{self.rng.getrandbits(64):016x}"
            etag = f"{self.rng.getrandbits(64):016x}"
            self.issued_uids.add(uid)
            self.issued_etags.add(etag)
        return uid, etag

    def record(self, handler: BaseHTTPRequestHandler) -> TrackerObservation:
        cookies: dict[str, str] = {}
        if handler.headers.get("Cookie"):
            jar = SimpleCookie()
            jar.load(handler.headers["Cookie"])
            cookies = {name: morsel.value for name, morsel in jar.items()}
        parts = urlsplit(handler.path)
        with self.lock:
            observation = TrackerObservation(
                id=len(self.observations),
                session_label=self.session_label,
                path=parts.path,
                headers=list(handler.headers.items()),
                cookies=cookies,
                if_none_match=handler.headers.get("If-None-Match"),
                if_modified_since=handler.headers.get("If-Modified-Since"),
                referer=handler.headers.get("Referer"),
                user_agent=handler.headers.get("User-Agent"),
                query=dict(parse_qsl(parts.query)),
            )
            self.observations.append(observation)
        return observation

    def returned_identifier(self, observation: TrackerObservation) -> bool:
        """Did this request carry an identifier this tracker issued earlier?"""
        if observation.cookies.get("uid") in self.issued_uids:
            return True
        if observation.if_none_match and observation.if_none_match.strip('"') in self.issued_etags:
            return True
        return observation.if_modified_since == LAST_MODIFIED
