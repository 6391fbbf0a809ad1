"""Rewriting reverse proxy in front of the original web server.

Every response that is HTML gets its third-party references rewritten to
middle-party URLs, the client shim reference injected, and exactly one
Content-Security-Policy header attached; CSS responses are rewritten the
same way; everything else streams through byte-identical.  The shim asset
itself is served from a same-origin path so the CSP permits it.
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import ssl
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from trackgate import httputil
from trackgate.config import GatewayConfig, listen_address, load_config
from trackgate.css_rewriter import css_text_from_bytes, rewrite_css
from trackgate.html_rewriter import rewrite_html
from trackgate.policy import build_csp
from trackgate.report import RewriteReport
from trackgate.shim import render_shim

log = logging.getLogger("trackgate.rewrite")

HTML_TYPES = ("text/html", "application/xhtml+xml")
CSS_TYPES = ("text/css",)


class RewriteServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: GatewayConfig):
        super().__init__(listen_address(config), RewriteHandler)
        self.config = config
        self.shim_source = render_shim(config.origins).encode("utf-8")
        self.counters: dict[str, int] = {}
        self._counter_lock = threading.Lock()
        if config.tls_certfile:
            context = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
            context.load_cert_chain(config.tls_certfile, config.tls_keyfile)
            self.socket = context.wrap_socket(self.socket, server_side=True)

    def count(self, decision: str) -> None:
        with self._counter_lock:
            self.counters[decision] = self.counters.get(decision, 0) + 1

    @property
    def bound_origin(self) -> str:
        scheme = "https" if self.config.tls_certfile else "http"
        host, port = self.server_address[:2]
        return f"{scheme}://{host}:{port}"


class RewriteHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: RewriteServer

    def handle_one_request(self) -> None:  # noqa: D102 - base class plumbing
        try:
            super().handle_one_request()
        except (ConnectionError, ssl.SSLError):
            self.close_connection = True

    def log_message(self, format: str, *args) -> None:
        pass  # replaced by the structured log below

    def _log(self, decision: str, status: int, report: RewriteReport | None = None) -> None:
        self.server.count(decision)
        entry = {
            "server": "rewrite",
            "decision": decision,
            "method": self.command,
            "path": self.path,
            "status": status,
        }
        if report is not None:
            entry["report"] = report.summary()
        log.info(json.dumps(entry, sort_keys=True))

    def _dispatch(self) -> None:
        config = self.server.config
        if self.path == config.shim_path:
            self._serve_shim()
            return
        if self.headers.get("Upgrade"):
            self._tunnel_upgrade()
            return
        self._forward()

    do_GET = do_POST = do_HEAD = do_PUT = do_DELETE = do_OPTIONS = do_PATCH = _dispatch

    def _serve_shim(self) -> None:
        headers = [
            ("Content-Type", "text/javascript; charset=utf-8"),
            ("Cache-Control", "no-store"),
        ]
        httputil.send_response(self, 200, headers, self.server.shim_source)
        self._log("shim", 200)

    def _forward(self) -> None:
        config = self.server.config
        request_headers = httputil.strip_hop_by_hop(list(self.headers.items()))
        # Identity encoding upstream means rewriting never needs to
        # decompress; a fronting cache may re-compress if it wants.
        request_headers = httputil.replace_header(request_headers, "Accept-Encoding", "identity")
        body = httputil.read_request_body(self)
        try:
            upstream = httputil.request_upstream(
                self.command,
                f"http://{config.upstream}{self.path}",
                request_headers,
                body,
                timeout=config.upstream_timeout,
            )
        except (OSError, socket.timeout):
            httputil.send_response(
                self, 502, [("Content-Type", "text/plain; charset=utf-8")], b"bad gateway\n"
            )
            self._log("error", 502)
            return
        try:
            self._relay(upstream)
        finally:
            upstream.close()

    def _relay(self, upstream: httputil.Upstream) -> None:
        config = self.server.config
        media_type, charset = httputil.content_type_of(upstream.headers)
        out_headers = httputil.strip_hop_by_hop(upstream.headers)

        if media_type in HTML_TYPES:
            self._relay_html(upstream, out_headers, charset)
        elif media_type in CSS_TYPES:
            self._relay_css(upstream, out_headers, charset)
        else:
            httputil.stream_response(self, upstream, httputil.remove_header(out_headers, "Content-Length"))
            self._log("forwarded", upstream.status)

    def _read_rewritable(self, upstream: httputil.Upstream) -> bytes | None:
        """Buffer the body unless it exceeds the rewrite cap (then None)."""
        limit = self.server.config.max_rewrite_size
        declared = httputil.get_header(upstream.headers, "Content-Length")
        if declared is not None and int(declared) > limit:
            return None
        body = upstream.read_all(limit + 1)
        if len(body) > limit:
            return None
        return body

    def _relay_html(self, upstream: httputil.Upstream, out_headers, charset) -> None:
        config = self.server.config
        body = None if self.command == "HEAD" else self._read_rewritable(upstream)
        # Ours must be the only CSP on the page for the source set to hold.
        out_headers = httputil.remove_header(out_headers, "Content-Security-Policy")
        out_headers = httputil.remove_header(out_headers, "Content-Length")
        csp = build_csp(config.origins, config.csp)

        if body is None and self.command != "HEAD":
            # Too large to rewrite: fail open locally, the CSP still protects.
            log.warning("response for %s exceeds max_rewrite_size; passing through", self.path)
            out_headers.append(("Content-Security-Policy", csp))
            httputil.stream_response(self, upstream, out_headers)
            self._log("oversize-passthrough", upstream.status)
            return

        report = RewriteReport()
        if body:
            base = f"{config.origins.first_party}{self.path}"
            body, report = rewrite_html(
                body,
                base,
                config.origins,
                rules=config.rules,
                shim_url=config.shim_path,
                declared_charset=charset,
            )
            out_headers = httputil.replace_header(
                out_headers, "Content-Type", "text/html; charset=utf-8"
            )
        out_headers.append(("Content-Security-Policy", csp))
        httputil.send_response(self, upstream.status, out_headers, body, upstream.reason)
        self._log("rewritten", upstream.status, report)

    def _relay_css(self, upstream: httputil.Upstream, out_headers, charset) -> None:
        config = self.server.config
        body = None if self.command == "HEAD" else self._read_rewritable(upstream)
        if body is None and self.command != "HEAD":
            log.warning("stylesheet %s exceeds max_rewrite_size; passing through", self.path)
            httputil.stream_response(self, upstream, httputil.remove_header(out_headers, "Content-Length"))
            self._log("oversize-passthrough", upstream.status)
            return
        report = RewriteReport()
        if body:
            base = f"{config.origins.first_party}{self.path}"
            text, report = rewrite_css(css_text_from_bytes(body, charset), base, config.origins)
            body = text.encode("utf-8")
            out_headers = httputil.replace_header(
                out_headers, "Content-Type", "text/css; charset=utf-8"
            )
        out_headers = httputil.remove_header(out_headers, "Content-Length")
        httputil.send_response(self, upstream.status, out_headers, body, upstream.reason)
        self._log("rewritten", upstream.status, report)

    def _tunnel_upgrade(self) -> None:
        """Tunnel Upgrade requests (WebSocket and friends) opaquely upstream."""
        config = self.server.config
        host, _, port = config.upstream.rpartition(":")
        try:
            upstream_sock = socket.create_connection((host, int(port)), timeout=config.upstream_timeout)
        except OSError:
            httputil.send_response(
                self, 502, [("Content-Type", "text/plain; charset=utf-8")], b"bad gateway\n"
            )
            self._log("error", 502)
            return
        request_line = f"{self.command} {self.path} {self.request_version}\r\n"
        raw_headers = "".join(f"{name}: {value}\r\n" for name, value in self.headers.items())
        upstream_sock.sendall((request_line + raw_headers + "\r\n").encode("latin-1"))
        self._log("tunnel", 101)

        def pump(src: socket.socket, dst: socket.socket) -> None:
            try:
                while data := src.recv(httputil.CHUNK_SIZE):
                    dst.sendall(data)
            except OSError:
                pass
            finally:
                for sock in (src, dst):
                    try:
                        sock.shutdown(socket.SHUT_RDWR)
                    except OSError:
                        pass

        client_sock = self.connection
        upstream_thread = threading.Thread(
            target=pump, args=(upstream_sock, client_sock), daemon=True
        )
        upstream_thread.start()
        pump(client_sock, upstream_sock)
        upstream_thread.join()
        self.close_connection = True


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="rewrite-server",
        description="Rewriting reverse proxy for the first-party origin.",
    )
    parser.add_argument("--config", required=True, help="path to the gateway config JSON")
    parser.add_argument("--listen", help="override listen address (host:port)")
    parser.add_argument("--upstream", help="override upstream address (host:port)")
    parser.add_argument("--middle-origin", dest="middle_party_origin", help="override middle-party origin")
    parser.add_argument("--first-party-origin", dest="first_party_origin", help="override first-party origin")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(message)s")
    config = load_config(
        args.config,
        overrides={
            "listen": args.listen,
            "upstream": args.upstream,
            "middle_party_origin": args.middle_party_origin,
            "first_party_origin": args.first_party_origin,
        },
    )
    if config.upstream is None:
        parser.error("config must set an upstream address for the rewrite server")
    server = RewriteServer(config)
    log.info(json.dumps({"server": "rewrite", "event": "listening", "address": config.listen}))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()


if __name__ == "__main__":
    main()
