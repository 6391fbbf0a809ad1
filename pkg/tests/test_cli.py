"""Smoke tests for the two server CLIs: config loading, overrides, and a
live round trip through real processes started the way operators start them."""

import http.client
import json
import os
import signal
import subprocess
import sys
import time

import pytest

from stubserver import CannedResponse, StubServer, free_port


def _wait_for_port(port: int, timeout: float = 5.0) -> None:
    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            conn = http.client.HTTPConnection("127.0.0.1", port, timeout=0.5)
            conn.request("GET", "/__probe")
            conn.getresponse().read()
            conn.close()
            return
        except OSError:
            time.sleep(0.05)
    raise TimeoutError(f"nothing listening on {port}")


@pytest.fixture()
def upstream():
    server = StubServer().start()
    server.routes["/"] = CannedResponse(
        200, [("Content-Type", "text/html")],
        b'<html><head></head><body><script src="http://t.test/x.js"></script></body></html>',
    )
    yield server
    server.stop()


def _spawn(module: str, *args: str) -> subprocess.Popen:
    return subprocess.Popen(
        [sys.executable, "-m", module, *args],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        env=dict(os.environ, PYTHONUNBUFFERED="1"),
    )


def test_rewrite_server_cli_round_trip(tmp_path, upstream):
    rewrite_port = free_port()
    config = {
        "listen": f"127.0.0.1:{rewrite_port}",
        "upstream": upstream.address,
        "first_party_origin": f"http://127.0.0.1:{rewrite_port}",
        "middle_party_origin": "http://127.0.0.1:65000",
    }
    path = tmp_path / "gw.json"
    path.write_text(json.dumps(config))
    process = _spawn("trackgate.rewrite_server", "--config", str(path))
    try:
        _wait_for_port(rewrite_port)
        conn = http.client.HTTPConnection("127.0.0.1", rewrite_port, timeout=5)
        conn.request("GET", "/")
        resp = conn.getresponse()
        body = resp.read().decode()
        conn.close()
        assert resp.status == 200
        assert "http://127.0.0.1:65000/?src=" in body
        assert resp.getheader("Content-Security-Policy") is not None
    finally:
        process.send_signal(signal.SIGINT)
        process.wait(timeout=5)


def test_middle_party_cli_round_trip(tmp_path, upstream):
    upstream.routes["/a.js"] = CannedResponse(
        200, [("Content-Type", "text/javascript"), ("Set-Cookie", "uid=1")], b"x()"
    )
    middle_port = free_port()
    config = {
        "listen": f"127.0.0.1:{middle_port}",
        "first_party_origin": "http://127.0.0.1:65001",
        "middle_party_origin": f"http://127.0.0.1:{middle_port}",
    }
    path = tmp_path / "mp.json"
    path.write_text(json.dumps(config))
    process = _spawn("trackgate.middle_party", "--config", str(path))
    try:
        _wait_for_port(middle_port)
        from urllib.parse import quote

        conn = http.client.HTTPConnection("127.0.0.1", middle_port, timeout=5)
        conn.request("GET", f"/?src={quote(upstream.origin + '/a.js', safe='')}")
        resp = conn.getresponse()
        body = resp.read()
        conn.close()
        assert resp.status == 200
        assert body == b"x()"
        assert resp.getheader("Set-Cookie") is None
    finally:
        process.send_signal(signal.SIGINT)
        process.wait(timeout=5)


def test_listen_override(tmp_path, upstream):
    port_a, port_b = free_port(), free_port()
    config = {
        "listen": f"127.0.0.1:{port_a}",
        "first_party_origin": "http://127.0.0.1:65001",
        "middle_party_origin": f"http://127.0.0.1:{port_a}",
    }
    path = tmp_path / "mp.json"
    path.write_text(json.dumps(config))
    process = _spawn("trackgate.middle_party", "--config", str(path), "--listen", f"127.0.0.1:{port_b}")
    try:
        _wait_for_port(port_b)
    finally:
        process.send_signal(signal.SIGINT)
        process.wait(timeout=5)
