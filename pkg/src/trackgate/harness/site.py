"""Demo first-party site: identical content in baseline and gated runs.

Pages embed the mock tracker the way a real site embeds a real third
party; which tracker origin gets baked in is fixed at startup, so the
same bytes are served whether the browser arrives directly (baseline) or
through the rewrite server (gated).
"""

from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


def _pages(tracker: str) -> dict[str, tuple[str, bytes]]:
    in_context = f"""<!DOCTYPE html>
<html>
<head>
<title>Demo shop</title>
<link rel="stylesheet" href="/site.css">
<link rel="stylesheet" href="{tracker}/style.css">
<script src="{tracker}/script.js"></script>
</head>
<body>
<img src="/logo.png" alt="us">
<img src="{tracker}/pixel.png" alt="them">
<script src="/app.js"></script>
</body>
</html>
"""
    cross_context = f"""<!DOCTYPE html>
<html>
<head><title>Demo shop - partner content</title></head>
<body>
<iframe src="{tracker}/page.html" width="400" height="100"></iframe>
<a href="{tracker}/page.html">open partner page</a>
</body>
</html>
"""
    css_chain = f"""<!DOCTYPE html>
<html>
<head>
<title>Demo shop - styled</title>
<link rel="stylesheet" href="{tracker}/style.css">
</head>
<body><p class="fancy">styled text</p></body>
</html>
"""
    redirect_page = f"""<!DOCTYPE html>
<html>
<head><title>Demo shop - promo</title></head>
<body><img src="{tracker}/redirect" alt="promo"></body>
</html>
"""
    index = """<!DOCTYPE html>
<html>
<head><title>Demo shop - index</title></head>
<body>
<a href="/in-context.html">in-context</a>
<a href="/cross-context.html">cross-context</a>
</body>
</html>
"""
    return {
        "/": ("text/html; charset=utf-8", index.encode()),
        "/in-context.html": ("text/html; charset=utf-8", in_context.encode()),
        "/cross-context.html": ("text/html; charset=utf-8", cross_context.encode()),
        "/css-chain.html": ("text/html; charset=utf-8", css_chain.encode()),
        "/redirect-page.html": ("text/html; charset=utf-8", redirect_page.encode()),
        "/site.css": ("text/css", b"body { margin: 2em; }\n"),
        "/app.js": ("text/javascript", b"console.log('first party');\n"),
        "/logo.png": ("image/png", b"\x89PNG\r\n\x1a\nfirstpartylogo"),
    }


class _SiteHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "DemoSite"

    def log_message(self, format, *args):
        pass

    def do_GET(self):
        page = self.server.pages.get(self.path.split("?")[0])
        if page is None:
            self.send_response_only(404)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        content_type, body = page
        self.send_response_only(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    do_HEAD = do_GET


class DemoSite(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, tracker_origin: str):
        super().__init__(("127.0.0.1", 0), _SiteHandler)
        self.pages = _pages(tracker_origin)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        return f"127.0.0.1:{self.server_address[1]}"

    @property
    def origin(self) -> str:
        return f"http://{self.address}"

    def start(self) -> "DemoSite":
        self._thread = threading.Thread(
            target=lambda: self.serve_forever(poll_interval=0.05), daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
