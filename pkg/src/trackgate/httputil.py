"""Small HTTP plumbing shared by both servers.

Headers travel as ordered (name, value) pair lists end to end; the
upstream client is a thin wrapper over http.client so the servers control
exactly which header names go on the wire (no library-injected defaults).
"""

from __future__ import annotations

import ssl
from dataclasses import dataclass
from http.client import HTTPConnection, HTTPResponse, HTTPSConnection
from urllib.parse import urlsplit

HeaderList = list[tuple[str, str]]

HOP_BY_HOP = frozenset(
    {
        "connection",
        "keep-alive",
        "proxy-authenticate",
        "proxy-authorization",
        "proxy-connection",
        "te",
        "trailers",
        "transfer-encoding",
        "upgrade",
    }
)

CHUNK_SIZE = 64 * 1024


def strip_hop_by_hop(headers: HeaderList) -> HeaderList:
    """Drop hop-by-hop headers, including those nominated by Connection."""
    nominated = set()
    for name, value in headers:
        if name.lower() == "connection":
            nominated.update(part.strip().lower() for part in value.split(","))
    return [
        (name, value)
        for name, value in headers
        if name.lower() not in HOP_BY_HOP and name.lower() not in nominated
    ]


def get_header(headers: HeaderList, name: str) -> str | None:
    wanted = name.lower()
    for header, value in headers:
        if header.lower() == wanted:
            return value
    return None


def replace_header(headers: HeaderList, name: str, value: str) -> HeaderList:
    wanted = name.lower()
    kept = [(n, v) for n, v in headers if n.lower() != wanted]
    kept.append((name, value))
    return kept


def remove_header(headers: HeaderList, name: str) -> HeaderList:
    wanted = name.lower()
    return [(n, v) for n, v in headers if n.lower() != wanted]


def content_type_of(headers: HeaderList) -> tuple[str, str | None]:
    """Return (media-type, charset) from a Content-Type header, lowercased."""
    raw = get_header(headers, "Content-Type") or ""
    parts = [part.strip() for part in raw.split(";")]
    media_type = parts[0].lower()
    charset = None
    for part in parts[1:]:
        if part.lower().startswith("charset="):
            charset = part.split("=", 1)[1].strip("\"' ").lower()
    return media_type, charset


@dataclass
class Upstream:
    """An open upstream exchange; the body is read from ``response``."""

    status: int
    reason: str
    headers: HeaderList
    response: HTTPResponse
    connection: HTTPConnection

    def read_all(self, limit: int | None = None) -> bytes:
        if limit is None:
            return self.response.read()
        return self.response.read(limit)

    def close(self) -> None:
        try:
            self.connection.close()
        except OSError:
            pass


def request_upstream(
    method: str,
    url: str,
    headers: HeaderList,
    body: bytes | None,
    timeout: float,
    insecure_tls: bool = False,
) -> Upstream:
    """Send one request with exactly the given headers (plus Host/Content-Length).

    Redirects are not followed and the response body is left unread for the
    caller to stream or buffer.  A fresh connection is used per call so no
    state leaks between users.
    """
    parts = urlsplit(url)
    if parts.scheme == "https":
        context = ssl.create_default_context()
        if insecure_tls:
            context.check_hostname = False
            context.verify_mode = ssl.CERT_NONE
        connection: HTTPConnection = HTTPSConnection(
            parts.hostname, parts.port, timeout=timeout, context=context
        )
    else:
        connection = HTTPConnection(parts.hostname, parts.port, timeout=timeout)

    path = parts.path or "/"
    if parts.query:
        path += "?" + parts.query
    try:
        connection.putrequest(method, path, skip_host=True, skip_accept_encoding=True)
        connection.putheader("Host", parts.netloc)
        for name, value in headers:
            if name.lower() in ("host", "content-length"):
                continue
            connection.putheader(name, value)
        if body is not None:
            connection.putheader("Content-Length", str(len(body)))
        connection.endheaders(body)
        response = connection.getresponse()
    except Exception:
        connection.close()
        raise
    return Upstream(
        status=response.status,
        reason=response.reason,
        headers=list(response.getheaders()),
        response=response,
        connection=connection,
    )


def read_request_body(handler) -> bytes | None:
    """Read the request body from a BaseHTTPRequestHandler, if any."""
    transfer = handler.headers.get("Transfer-Encoding", "")
    if "chunked" in transfer.lower():
        chunks = []
        while True:
            size_line = handler.rfile.readline(65536).strip()
            size = int(size_line.split(b";")[0], 16)
            if size == 0:
                handler.rfile.readline(65536)  # trailing CRLF
                break
            chunks.append(handler.rfile.read(size))
            handler.rfile.read(2)
        return b"".join(chunks)
    length = handler.headers.get("Content-Length")
    if length is None:
        return None
    return handler.rfile.read(int(length))


def send_response(
    handler,
    status: int,
    headers: HeaderList,
    body: bytes | None,
    reason: str | None = None,
) -> None:
    """Emit a response with exactly the given headers plus Content-Length."""
    if reason is None:
        handler.send_response_only(status)
    else:
        handler.send_response_only(status, reason)
    for name, value in remove_header(headers, "Content-Length"):
        handler.send_header(name, value)
    handler.send_header("Content-Length", str(len(body or b"")))
    handler.end_headers()
    if body and handler.command != "HEAD":
        handler.wfile.write(body)


def stream_response(handler, upstream: Upstream, headers: HeaderList) -> None:
    """Pass an upstream body through unmodified."""
    handler.send_response_only(upstream.status, upstream.reason)
    length = get_header(upstream.headers, "Content-Length")
    for name, value in remove_header(headers, "Content-Length"):
        handler.send_header(name, value)
    if length is not None:
        handler.send_header("Content-Length", length)
    else:
        handler.send_header("Connection", "close")
        handler.close_connection = True
    handler.end_headers()
    if handler.command == "HEAD":
        return
    while chunk := upstream.response.read(CHUNK_SIZE):
        handler.wfile.write(chunk)
