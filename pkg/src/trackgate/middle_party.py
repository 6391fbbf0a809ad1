"""The trusted forwarding server on its own origin.

In-context requests (``?src=``) are decapsulated, stripped of tracking
headers in both directions, and forwarded; CSS replies are rewritten so
nested third-party references chain back through this server; redirects
are returned to the browser with their Location folded onto this origin.

Cross-context requests (``?emb=``) are never forwarded.  They get a small
trampoline page whose ``noreferrer noopener`` anchor is auto-clicked into
an iframe owned by this origin, so the third-party document loads directly
from its own server but sees no Referer, an empty ``document.referrer``,
and no route to the embedding page's scripts.

The server is stateless across requests by design: statelessness is
itself a privacy property (nothing here can correlate two visits).
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import ssl
import threading
from html import escape
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit

from trackgate import httputil
from trackgate.config import GatewayConfig, listen_address, load_config
from trackgate.css_rewriter import css_text_from_bytes, rewrite_css
from trackgate.policy import TrackingPolicy
from trackgate.urlcodec import (
    BadEncapsulation,
    LoopDetected,
    ProxiedUrl,
    UrlKind,
    decode,
)

log = logging.getLogger("trackgate.middle")

CSS_TYPES = ("text/css",)

TRAMPOLINE_SCRIPT = """var third_party = document.getElementsByTagName("a")[0];
if(window.top == window.self){
  third_party.target = "_blank";
  third_party.click();
  window.close();
}else{
  var iframe = document.createElement("iframe");
  iframe.name = "iframetarget";
  document.body.appendChild(iframe);
  third_party.target = "iframetarget";
  third_party.click();
}"""

TRAMPOLINE_TEMPLATE = """<html>
  <body>
    <a href="{href}" rel="noreferrer noopener" target=""></a>
    <script>
{script}
    </script>
  </body>
</html>
"""


def build_trampoline(
    proxied: ProxiedUrl, policy: TrackingPolicy = TrackingPolicy()
) -> tuple[int, httputil.HeaderList, bytes]:
    """Build the cross-context response: status, headers, HTML body."""
    body = TRAMPOLINE_TEMPLATE.format(
        href=escape(proxied.target, quote=True), script=TRAMPOLINE_SCRIPT
    ).encode("utf-8")
    sandbox = "sandbox allow-scripts" if policy.strict_sandbox else "sandbox allow-scripts allow-same-origin"
    headers = [
        ("Content-Type", "text/html; charset=utf-8"),
        ("Content-Security-Policy", sandbox),
        ("Referrer-Policy", "no-referrer"),
    ]
    return 200, headers, body


class MiddlePartyServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: GatewayConfig):
        super().__init__(listen_address(config), MiddlePartyHandler)
        self.config = config
        self.counters: dict[str, int] = {}
        self._counter_lock = threading.Lock()
        if config.tls_certfile:
            context = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
            context.load_cert_chain(config.tls_certfile, config.tls_keyfile)
            self.socket = context.wrap_socket(self.socket, server_side=True)

    def count(self, decision: str) -> None:
        with self._counter_lock:
            self.counters[decision] = self.counters.get(decision, 0) + 1


class MiddlePartyHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: MiddlePartyServer

    def handle_one_request(self) -> None:  # noqa: D102 - base class plumbing
        try:
            super().handle_one_request()
        except (ConnectionError, ssl.SSLError):
            self.close_connection = True

    def log_message(self, format: str, *args) -> None:
        pass

    def _log(self, decision: str, status: int, target_host: str | None = None,
             kind: str | None = None, removed: int | None = None) -> None:
        self.server.count(decision)
        entry: dict = {
            "server": "middle",
            "decision": decision,
            "method": self.command,
            "status": status,
        }
        if target_host is not None:
            entry["target_host"] = target_host
            entry["kind"] = kind
            entry["headers_removed"] = removed
        log.info(json.dumps(entry, sort_keys=True))

    def _reject(self, message: str) -> None:
        httputil.send_response(
            self, 400, [("Content-Type", "text/plain; charset=utf-8")], message.encode() + b"\n"
        )
        self._log("error", 400)

    def _dispatch(self) -> None:
        config = self.server.config
        try:
            proxied = decode(f"{config.origins.middle_party}{self.path}", config.origins)
        except LoopDetected:
            self._reject("refusing self-proxying loop")
            return
        except BadEncapsulation:
            self._reject("bad encapsulation")
            return
        if proxied.kind is UrlKind.CROSS_CONTEXT:
            self._serve_trampoline(proxied)
        else:
            self._handle_in_context(proxied)

    do_GET = do_POST = do_HEAD = do_PUT = do_DELETE = do_OPTIONS = do_PATCH = _dispatch

    def _serve_trampoline(self, proxied: ProxiedUrl) -> None:
        status, headers, body = build_trampoline(proxied, self.server.config.policy)
        httputil.send_response(self, status, headers, body)
        self._log("trampoline", status, urlsplit(proxied.target).netloc, proxied.kind.value, 0)

    def _handle_in_context(self, proxied: ProxiedUrl) -> None:
        config = self.server.config
        policy = config.policy
        body = httputil.read_request_body(self)

        outbound, removed_request = policy.strip_request_headers(list(self.headers.items()))
        outbound = httputil.strip_hop_by_hop(outbound)
        outbound = httputil.replace_header(outbound, "Accept-Encoding", "identity")
        if policy.user_agent_replacement is not None:
            outbound = httputil.replace_header(outbound, "User-Agent", policy.user_agent_replacement)

        try:
            upstream = httputil.request_upstream(
                self.command, proxied.target, outbound, body, timeout=config.upstream_timeout
            )
        except (OSError, socket.timeout, ssl.SSLError):
            httputil.send_response(
                self, 502, [("Content-Type", "text/plain; charset=utf-8")], b"bad gateway\n"
            )
            self._log("error", 502, urlsplit(proxied.target).netloc, proxied.kind.value)
            return

        try:
            sanitized, removed_response = policy.strip_response_headers(
                upstream.headers, config.origins, base=proxied.target, kind=proxied.kind
            )
            sanitized = httputil.strip_hop_by_hop(sanitized)
            media_type, charset = httputil.content_type_of(sanitized)
            if media_type in CSS_TYPES and self.command != "HEAD":
                self._relay_css(upstream, sanitized, charset, proxied)
            else:
                httputil.stream_response(
                    self, upstream, httputil.remove_header(sanitized, "Content-Length")
                )
            self._log(
                "forwarded",
                upstream.status,
                urlsplit(proxied.target).netloc,
                proxied.kind.value,
                len(removed_request) + len(removed_response),
            )
        finally:
            upstream.close()

    def _relay_css(self, upstream, sanitized, charset, proxied: ProxiedUrl) -> None:
        raw = upstream.read_all(self.server.config.max_rewrite_size + 1)
        if len(raw) > self.server.config.max_rewrite_size:
            rest = upstream.read_all()
            httputil.send_response(
                self, upstream.status,
                httputil.remove_header(sanitized, "Content-Length"),
                raw + rest, upstream.reason,
            )
            return
        text, _ = rewrite_css(
            css_text_from_bytes(raw, charset), proxied.target, self.server.config.origins
        )
        sanitized = httputil.replace_header(sanitized, "Content-Type", "text/css; charset=utf-8")
        sanitized = httputil.remove_header(sanitized, "Content-Length")
        httputil.send_response(self, upstream.status, sanitized, text.encode("utf-8"), upstream.reason)


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="middle-party",
        description="Sanitizing forwarder for encapsulated third-party requests.",
    )
    parser.add_argument("--config", required=True, help="path to the gateway config JSON")
    parser.add_argument("--listen", help="override listen address (host:port)")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(message)s")
    config = load_config(args.config, overrides={"listen": args.listen})
    server = MiddlePartyServer(config)
    log.info(json.dumps({"server": "middle", "event": "listening", "address": config.listen}))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()


if __name__ == "__main__":
    main()
