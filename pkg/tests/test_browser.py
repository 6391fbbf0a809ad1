"""The emulated browser's header behavior is itself part of the trust chain:
these tests pin it against the stateful-mechanism model (cookies attached
per origin, validators on revisit, Referer on subresource fetches)."""

import pytest

from stubserver import CannedResponse, StubServer
from trackgate.harness.browser import Browser


@pytest.fixture()
def echo():
    server = StubServer().start()
    server.routes["/"] = CannedResponse(200, [("Content-Type", "text/plain")], b"ok")
    yield server
    server.stop()


def _last_headers(server) -> dict:
    return {name.lower(): value for name, value in server.requests[-1].headers}


class TestCookies:
    def test_stored_and_attached_per_origin(self, echo):
        browser = Browser()
        echo.routes["/set"] = CannedResponse(
            200, [("Set-Cookie", "uid=7; Path=/"), ("Content-Type", "text/plain")], b"x"
        )
        browser.fetch(f"{echo.origin}/set")
        browser.fetch(f"{echo.origin}/")
        assert _last_headers(echo)["cookie"] == "uid=7"

    def test_not_sent_cross_origin(self, echo):
        other = StubServer().start()
        other.routes["/"] = CannedResponse(200, [], b"")
        try:
            browser = Browser()
            echo.routes["/set"] = CannedResponse(200, [("Set-Cookie", "uid=7")], b"")
            browser.fetch(f"{echo.origin}/set")
            browser.fetch(f"{other.origin}/")
            assert "cookie" not in _last_headers(other)
        finally:
            other.stop()


class TestValidators:
    def test_attached_on_revisit_of_same_url(self, echo):
        browser = Browser()
        echo.routes["/asset"] = CannedResponse(
            200,
            [("ETag", '"e1"'), ("Last-Modified", "Mon, 06 Jan 2020 08:00:00 GMT")],
            b"payload",
        )
        browser.fetch(f"{echo.origin}/asset")
        browser.fetch(f"{echo.origin}/asset")
        sent = _last_headers(echo)
        assert sent["if-none-match"] == '"e1"'
        assert sent["if-modified-since"] == "Mon, 06 Jan 2020 08:00:00 GMT"

    def test_not_attached_for_other_urls(self, echo):
        browser = Browser()
        echo.routes["/asset"] = CannedResponse(200, [("ETag", '"e1"')], b"")
        browser.fetch(f"{echo.origin}/asset")
        browser.fetch(f"{echo.origin}/")
        sent = _last_headers(echo)
        assert "if-none-match" not in sent


class TestReferer:
    def test_sent_on_subresource_fetches(self, echo):
        page = (
            f'<html><head><link rel="stylesheet" href="/s.css"></head>'
            f'<body><img src="/i.png"><script src="/j.js"></script></body></html>'
        )
        echo.routes["/page"] = CannedResponse(200, [("Content-Type", "text/html")], page.encode())
        echo.routes["/s.css"] = CannedResponse(200, [("Content-Type", "text/css")], b"")
        echo.routes["/i.png"] = CannedResponse(200, [("Content-Type", "image/png")], b"")
        echo.routes["/j.js"] = CannedResponse(200, [("Content-Type", "text/javascript")], b"")
        browser = Browser()
        browser.visit(f"{echo.origin}/page")
        subresource_requests = [r for r in echo.requests if r.path != "/page"]
        assert len(subresource_requests) == 3
        for request in subresource_requests:
            headers = {name.lower(): value for name, value in request.headers}
            assert headers["referer"] == f"{echo.origin}/page"

    def test_noreferrer_fetch_sends_none(self, echo):
        browser = Browser()
        browser.fetch(f"{echo.origin}/", referer="http://site.test/", noreferrer=True)
        assert "referer" not in _last_headers(echo)

    def test_css_subresources_use_stylesheet_as_referer(self, echo):
        echo.routes["/page"] = CannedResponse(
            200, [("Content-Type", "text/html")],
            b'<html><head><link rel="stylesheet" href="/s.css"></head></html>',
        )
        echo.routes["/s.css"] = CannedResponse(
            200, [("Content-Type", "text/css")], b"@font-face{src:url(f.woff)}"
        )
        echo.routes["/f.woff"] = CannedResponse(200, [("Content-Type", "font/woff")], b"")
        browser = Browser()
        browser.visit(f"{echo.origin}/page")
        font_request = [r for r in echo.requests if r.path == "/f.woff"][-1]
        headers = {name.lower(): value for name, value in font_request.headers}
        assert headers["referer"] == f"{echo.origin}/s.css"


class TestRedirects:
    def test_follow_chain(self, echo):
        echo.routes["/hop"] = CannedResponse(301, [("Location", f"{echo.origin}/")], b"")
        browser = Browser()
        chain = browser.fetch_following(f"{echo.origin}/hop")
        assert [r.status for r in chain] == [301, 200]


class TestTrampolineHandling:
    def test_auto_click_without_referer(self, echo):
        trampoline = (
            f'<html><body><a href="{echo.origin}/inner" rel="noreferrer noopener" '
            f'target=""></a><script>x</script></body></html>'
        )
        echo.routes["/tramp"] = CannedResponse(200, [("Content-Type", "text/html")], trampoline.encode())
        echo.routes["/inner"] = CannedResponse(200, [("Content-Type", "text/html")], b"inner")
        browser = Browser()
        frame = browser.load_frame(f"{echo.origin}/tramp", referer="http://site.test/")
        assert frame.inner is not None
        assert frame.inner.body == b"inner"
        inner_request = [r for r in echo.requests if r.path == "/inner"][-1]
        headers = {name.lower(): value for name, value in inner_request.headers}
        assert "referer" not in headers
