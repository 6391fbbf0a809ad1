"""Scripted HTTP client emulating the browser header behavior that
stateful tracking relies on: per-origin cookie jars, cache validators on
revisit, a Referer on every subresource fetch, and the noreferrer rule
for trampoline-style auto-clicked anchors.

Deliberately independent of the gateway modules: URLs are resolved with
the stdlib and pages are picked apart with a local extractor, so harness
evidence does not depend on the code under test.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from http.client import HTTPConnection
from http.cookies import SimpleCookie
from urllib.parse import urljoin, urlsplit

USER_AGENT = "HarnessBrowser/1.0"


@dataclass
class FetchResult:
    url: str
    status: int
    headers: list[tuple[str, str]]
    body: bytes

    def header(self, name: str) -> str | None:
        wanted = name.lower()
        for header, value in self.headers:
            if header.lower() == wanted:
                return value
        return None


@dataclass
class FrameResult:
    """An iframe load: the outer document and, when the outer document was
    a self-clicking trampoline, the inner document it reloaded."""

    outer: FetchResult
    inner: FetchResult | None


@dataclass
class VisitResult:
    page: FetchResult
    resources: list[FetchResult] = field(default_factory=list)
    frames: list[FrameResult] = field(default_factory=list)


class _ResourceExtractor(HTMLParser):
    def __init__(self) -> None:
        super().__init__()
        self.stylesheets: list[str] = []
        self.scripts: list[str] = []
        self.images: list[str] = []
        self.iframes: list[str] = []
        self.noreferrer_anchor: str | None = None
        self.has_script = False

    def handle_starttag(self, tag, attrs):
        attr = dict(attrs)
        if tag == "link" and "stylesheet" in (attr.get("rel") or "") and attr.get("href"):
            self.stylesheets.append(attr["href"])
        elif tag == "script":
            self.has_script = True
            if attr.get("src"):
                self.scripts.append(attr["src"])
        elif tag == "img" and attr.get("src"):
            self.images.append(attr["src"])
        elif tag == "iframe" and attr.get("src"):
            self.iframes.append(attr["src"])
        elif tag == "a" and attr.get("href") is not None:
            rel = (attr.get("rel") or "").split()
            if "noreferrer" in rel and self.noreferrer_anchor is None:
                self.noreferrer_anchor = attr["href"]


_CSS_URL_RE = re.compile(
    r"url\(\s*(?:\"([^\"]*)\"|'([^']*)'|([^)\s]*))\s*\)|@import\s+(?:\"([^\"]*)\"|'([^']*)')",
    re.IGNORECASE,
)


def _css_references(css: str) -> list[str]:
    refs = []
    for match in _CSS_URL_RE.finditer(css):
        url = next((group for group in match.groups() if group), None)
        if url and not url.startswith("data:"):
            refs.append(url)
    return refs


def _extract(html: str) -> _ResourceExtractor:
    extractor = _ResourceExtractor()
    extractor.feed(html)
    extractor.close()
    return extractor


class Browser:
    def __init__(self, user_agent: str = USER_AGENT):
        self.user_agent = user_agent
        self.cookies: dict[str, dict[str, str]] = {}
        self.validators: dict[str, dict[str, str]] = {}
        self.steps: list[dict] = []

    # -- wire level ----------------------------------------------------

    def fetch(
        self,
        url: str,
        referer: str | None = None,
        noreferrer: bool = False,
        method: str = "GET",
        body: bytes | None = None,
    ) -> FetchResult:
        parts = urlsplit(url)
        origin = f"{parts.scheme}://{parts.netloc}"
        connection = HTTPConnection(parts.hostname, parts.port, timeout=5)
        path = parts.path or "/"
        if parts.query:
            path += "?" + parts.query
        try:
            connection.putrequest(method, path, skip_accept_encoding=True)
            connection.putheader("User-Agent", self.user_agent)
            connection.putheader("Accept", "*/*")
            connection.putheader("Accept-Encoding", "identity")
            jar = self.cookies.get(origin)
            if jar:
                connection.putheader(
                    "Cookie", "; ".join(f"{name}={value}" for name, value in jar.items())
                )
            cached = self.validators.get(url, {})
            if "etag" in cached:
                connection.putheader("If-None-Match", cached["etag"])
            if "last_modified" in cached:
                connection.putheader("If-Modified-Since", cached["last_modified"])
            if referer and not noreferrer:
                connection.putheader("Referer", referer)
            if body is not None:
                connection.putheader("Content-Length", str(len(body)))
            connection.endheaders(body)
            response = connection.getresponse()
            data = response.read()
            result = FetchResult(url, response.status, list(response.getheaders()), data)
        finally:
            connection.close()
        self._remember(origin, result)
        self.steps.append(
            {
                "action": "fetch",
                "url": url,
                "status": result.status,
                "referer": None if noreferrer else referer,
                "noreferrer": noreferrer,
            }
        )
        return result

    def _remember(self, origin: str, result: FetchResult) -> None:
        for name, value in result.headers:
            if name.lower() == "set-cookie":
                jar = SimpleCookie()
                jar.load(value)
                stored = self.cookies.setdefault(origin, {})
                for cookie_name, morsel in jar.items():
                    stored[cookie_name] = morsel.value
        etag = result.header("ETag")
        last_modified = result.header("Last-Modified")
        if etag or last_modified:
            entry = self.validators.setdefault(result.url, {})
            if etag:
                entry["etag"] = etag
            if last_modified:
                entry["last_modified"] = last_modified

    def fetch_following(
        self, url: str, referer: str | None = None, max_hops: int = 5
    ) -> list[FetchResult]:
        chain = [self.fetch(url, referer=referer)]
        while chain[-1].status in (301, 302, 303, 307, 308) and len(chain) <= max_hops:
            location = chain[-1].header("Location")
            if not location:
                break
            chain.append(self.fetch(urljoin(chain[-1].url, location), referer=referer))
        return chain

    # -- page level ----------------------------------------------------

    def visit(self, page_url: str) -> VisitResult:
        page = self.fetch(page_url)
        result = VisitResult(page)
        refs = _extract(page.body.decode("utf-8", "replace"))

        for href in refs.stylesheets:
            css_url = urljoin(page_url, href)
            css = self.fetch(css_url, referer=page_url)
            result.resources.append(css)
            if (css.header("Content-Type") or "").startswith("text/css") or href.endswith(".css"):
                for reference in _css_references(css.body.decode("utf-8", "replace")):
                    nested = urljoin(css_url, reference)
                    result.resources.append(self.fetch(nested, referer=css_url))

        for src in refs.scripts + refs.images:
            result.resources.append(self.fetch(urljoin(page_url, src), referer=page_url))

        for src in refs.iframes:
            result.frames.append(self.load_frame(urljoin(page_url, src), referer=page_url))
        return result

    def load_frame(self, url: str, referer: str | None) -> FrameResult:
        outer = self.fetch(url, referer=referer)
        extracted = _extract(outer.body.decode("utf-8", "replace"))
        if extracted.noreferrer_anchor is not None and extracted.has_script:
            # Trampoline: the anchor is auto-clicked; rel=noreferrer means
            # the reload carries no Referer at all.
            target = urljoin(url, extracted.noreferrer_anchor)
            inner = self.fetch(target, noreferrer=True)
            return FrameResult(outer, inner)
        return FrameResult(outer, None)
