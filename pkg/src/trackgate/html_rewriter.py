"""Streaming rewrite of third-party references in HTML documents.

Built on the stdlib tolerant HTML tokenizer: every token the rewriter does
not change is echoed back verbatim (via the raw start-tag text), so
documents without third-party references round-trip unchanged apart from
shim injection, and rewriting is idempotent byte-for-byte.

The rewrite covers the static reference positions of both context kinds
(scripts, images, media, forms, stylesheets in-context; frames, links,
plugin containers cross-context), inline CSS in ``<style>`` elements and
``style=`` attributes, and per-candidate ``srcset`` values.  A script
reference to the client shim is inserted as the first child of ``<head>``
so it runs before any other script.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from html import escape
from html.parser import HTMLParser

from trackgate.css_rewriter import rewrite_css
from trackgate.report import RewriteReport
from trackgate.urlcodec import (
    Classification,
    OriginSet,
    ProxiedUrl,
    UnparsableUrl,
    UrlKind,
    classify,
    encode,
    resolve,
)

_IN = UrlKind.IN_CONTEXT
_CROSS = UrlKind.CROSS_CONTEXT


@dataclass(frozen=True)
class TagRule:
    """One (element, attribute) rewrite position and the context it loads in."""

    element: str
    attribute: str
    kind: UrlKind
    enabled: bool = True


# Static third-party content positions by execution context, plus the
# equivalent request triggers the context table leaves out (srcset,
# <track>, <input type=image>).
DEFAULT_RULES: tuple[TagRule, ...] = (
    TagRule("link", "href", _IN),
    TagRule("img", "src", _IN),
    TagRule("img", "srcset", _IN),
    TagRule("audio", "src", _IN),
    TagRule("video", "src", _IN),
    TagRule("video", "poster", _IN),
    TagRule("source", "src", _IN),
    TagRule("source", "srcset", _IN),
    TagRule("track", "src", _IN),
    TagRule("input", "src", _IN),
    TagRule("form", "action", _IN),
    TagRule("script", "src", _IN),
    TagRule("iframe", "src", _CROSS),
    TagRule("frame", "src", _CROSS),
    TagRule("a", "href", _CROSS),
    TagRule("object", "data", _CROSS),
    TagRule("embed", "src", _CROSS),
    TagRule("applet", "code", _CROSS),
    TagRule("applet", "archive", _CROSS),
)

RulesMap = dict[tuple[str, str], UrlKind]

_META_CHARSET_RE = re.compile(
    rb"""<meta[^>]+charset\s*=\s*["']?([a-zA-Z0-9_\-:.]+)""", re.IGNORECASE
)
_CONTENT_CHARSET_RE = re.compile(r"charset\s*=\s*[a-zA-Z0-9_\-:.]+", re.IGNORECASE)


def rules_map(rules: tuple[TagRule, ...] | list[TagRule]) -> RulesMap:
    return {
        (rule.element.lower(), rule.attribute.lower()): rule.kind
        for rule in rules
        if rule.enabled
    }


def _first_attr(attrs: list[tuple[str, str | None]], name: str) -> str | None:
    for attr, value in attrs:
        if attr == name and value is not None:
            return value
    return None


class _PreScan(HTMLParser):
    """First pass: document structure facts the rewrite pass needs up front."""

    def __init__(self, shim_url: str | None) -> None:
        super().__init__(convert_charrefs=False)
        self.shim_url = shim_url
        self.base_href: str | None = None
        self.has_head = False
        self.has_html = False
        self.shim_present = False

    def handle_starttag(self, tag: str, attrs: list) -> None:
        if tag == "base" and self.base_href is None:
            href = _first_attr(attrs, "href")
            if href:
                self.base_href = href
        elif tag == "head":
            self.has_head = True
        elif tag == "html":
            self.has_html = True
        elif tag == "script" and self.shim_url is not None:
            if _first_attr(attrs, "src") == self.shim_url:
                self.shim_present = True


class _Rewriter(HTMLParser):
    """Second pass: token-preserving rewrite and shim injection.

    ``origins`` of None puts the parser in injection-only mode (no URL
    rewriting, no base handling, no charset meta edits).
    """

    def __init__(
        self,
        base: str,
        origins: OriginSet | None,
        rules: RulesMap,
        shim_url: str | None,
        report: RewriteReport,
        inject_mode: str | None,
    ) -> None:
        super().__init__(convert_charrefs=False)
        self.base = base
        self.origins = origins
        self.rules = rules
        self.shim_url = shim_url
        self.report = report
        self.inject_mode = inject_mode  # "head" | "html" | "start" | None
        self.out: list[str] = []
        self.in_style = False
        self.style_buffer: list[str] = []

    # -- emission ----------------------------------------------------

    def _emit(self, text: str, *, structural: bool = True) -> None:
        if (
            self.inject_mode == "start"
            and structural
            and text.strip()
            and not text.startswith("<!")
        ):
            self._emit_synthesized_head()
        self.out.append(text)

    def _shim_tag(self) -> str:
        return f'<script src="{escape(self.shim_url, quote=True)}"></script>'

    def _emit_synthesized_head(self) -> None:
        self.out.append(f"<head>{self._shim_tag()}</head>")
        self.inject_mode = None

    # -- tag handling ------------------------------------------------

    def handle_starttag(self, tag: str, attrs: list) -> None:
        if self.in_style:  # malformed markup inside <style>: treat as text
            self._emit(self.get_starttag_text(), structural=False)
            return
        if tag == "base" and self.origins is not None and self._drop_base(attrs):
            return
        rebuilt = self._rewrite_attrs(tag, attrs)
        self._emit(rebuilt if rebuilt is not None else self.get_starttag_text())
        if tag == "style":
            self.in_style = True
        if tag == "head" and self.inject_mode == "head":
            self.out.append(self._shim_tag())
            self.inject_mode = None
        elif tag == "html" and self.inject_mode == "html":
            self.out.append(f"<head>{self._shim_tag()}</head>")
            self.inject_mode = None

    def handle_startendtag(self, tag: str, attrs: list) -> None:
        if tag == "base" and self.origins is not None and self._drop_base(attrs):
            return
        rebuilt = self._rewrite_attrs(tag, attrs, self_closing=True)
        self._emit(rebuilt if rebuilt is not None else self.get_starttag_text())

    def handle_endtag(self, tag: str) -> None:
        if self.in_style and tag == "style":
            self._flush_style()
        self._emit(f"</{tag}>")

    def handle_data(self, data: str) -> None:
        if self.in_style:
            self.style_buffer.append(data)
        else:
            self._emit(data, structural=False)

    def handle_comment(self, data: str) -> None:
        self._emit(f"<!--{data}-->", structural=False)

    def handle_decl(self, decl: str) -> None:
        self._emit(f"<!{decl}>", structural=False)

    def handle_pi(self, data: str) -> None:
        self._emit(f"<?{data}>", structural=False)

    def unknown_decl(self, data: str) -> None:
        self._emit(f"<![{data}]>", structural=False)

    def handle_entityref(self, name: str) -> None:
        self._emit(f"&{name};", structural=False)

    def handle_charref(self, name: str) -> None:
        self._emit(f"&#{name};", structural=False)

    def close(self) -> None:
        super().close()
        if self.in_style:
            self._flush_style()
        if self.inject_mode == "start":  # blank or markup-free document
            self._emit_synthesized_head()

    def _flush_style(self) -> None:
        css = "".join(self.style_buffer)
        self.style_buffer = []
        self.in_style = False
        if self.origins is not None and css:
            css, sub_report = rewrite_css(css, self.base, self.origins)
            self.report.merge(sub_report)
        self.out.append(css)

    # -- rewriting ---------------------------------------------------

    def _drop_base(self, attrs: list) -> bool:
        """Off-origin <base> elements silently re-point every relative URL; drop them."""
        href = _first_attr(attrs, "href")
        if not href:
            return False
        try:
            kind = classify(href, self.base, self.origins)
        except UnparsableUrl:
            return False
        return kind in (Classification.THIRD_PARTY, Classification.MIDDLE_PARTY)

    def _rewrite_attrs(
        self, tag: str, attrs: list, self_closing: bool = False
    ) -> str | None:
        """Return the rebuilt tag when any attribute changed, else None."""
        if self.origins is None:
            return None
        changed = False
        new_attrs: list[tuple[str, str | None]] = []
        for name, value in attrs:
            if value is not None:
                new_value = self._rewrite_attr_value(tag, name, value)
                if new_value is not None:
                    value = new_value
                    changed = True
            new_attrs.append((name, value))
        if not changed:
            return None
        parts = [tag]
        for name, value in new_attrs:
            if value is None:
                parts.append(name)
            else:
                parts.append(f'{name}="{escape(value, quote=True)}"')
        return f"<{' '.join(parts)}{'/' if self_closing else ''}>"

    def _rewrite_attr_value(self, tag: str, name: str, value: str) -> str | None:
        kind = self.rules.get((tag, name))
        if kind is not None:
            if name == "srcset":
                return self._rewrite_srcset(tag, value, kind)
            return self._rewrite_url(tag, name, value, kind)
        if name == "style":
            rewritten, _ = rewrite_css(value, self.base, self.origins)
            if rewritten != value:
                self.report.bump(tag, "style")
                return rewritten
            return None
        if tag == "meta":  # output is always UTF-8, keep the declaration honest
            return self._update_charset_meta(name, value)
        return None

    def _rewrite_url(self, tag: str, name: str, value: str, kind: UrlKind) -> str | None:
        try:
            classification = classify(value, self.base, self.origins)
        except UnparsableUrl:
            self.report.unparsable += 1
            return None
        if classification is Classification.NON_HTTP:
            self.report.skipped_nonhttp += 1
            return None
        if classification is not Classification.THIRD_PARTY:
            return None
        self.report.bump(tag, name)
        return encode(ProxiedUrl(resolve(value, self.base), kind), self.origins)

    def _rewrite_srcset(self, tag: str, value: str, kind: UrlKind) -> str | None:
        candidates = []
        changed = False
        pos, n = 0, len(value)
        while pos < n:
            while pos < n and (value[pos].isspace() or value[pos] == ","):
                pos += 1
            if pos >= n:
                break
            start = pos
            while pos < n and not value[pos].isspace():
                pos += 1
            url = value[start:pos].rstrip(",")
            had_trailing_comma = len(value[start:pos]) != len(url)
            descriptor = ""
            if not had_trailing_comma:
                # descriptor runs to the next comma outside parentheses
                dstart, depth = pos, 0
                while pos < n:
                    ch = value[pos]
                    if ch == "(":
                        depth += 1
                    elif ch == ")":
                        depth = max(0, depth - 1)
                    elif ch == "," and depth == 0:
                        break
                    pos += 1
                descriptor = value[dstart:pos].strip()
            if not url:
                continue
            new_url = self._rewrite_url(tag, "srcset", url, kind)
            if new_url is not None:
                url = new_url
                changed = True
            candidates.append(f"{url} {descriptor}".strip())
        return ", ".join(candidates) if changed else None

    def _update_charset_meta(self, name: str, value: str) -> str | None:
        if name == "charset":
            return "utf-8" if value.lower() not in ("utf-8", "utf8") else None
        if name == "content" and "charset" in value.lower():
            updated = _CONTENT_CHARSET_RE.sub("charset=utf-8", value)
            return updated if updated != value else None
        return None


def _choose_inject_mode(scan: _PreScan, shim_url: str | None) -> str | None:
    if shim_url is None or scan.shim_present:
        return None
    if scan.has_head:
        return "head"
    if scan.has_html:
        return "html"
    return "start"


def rewrite_html_text(
    text: str,
    base: str,
    origins: OriginSet,
    rules: tuple[TagRule, ...] | list[TagRule] = DEFAULT_RULES,
    shim_url: str | None = None,
) -> tuple[str, RewriteReport]:
    """Rewrite a decoded HTML document; see rewrite_html for the byte form."""
    scan = _PreScan(shim_url)
    scan.feed(text)
    scan.close()

    effective_base = base
    if scan.base_href is not None:
        try:
            effective_base = resolve(scan.base_href, base)
        except UnparsableUrl:
            pass

    report = RewriteReport()
    writer = _Rewriter(
        effective_base,
        origins,
        rules_map(rules),
        shim_url,
        report,
        _choose_inject_mode(scan, shim_url),
    )
    writer.feed(text)
    writer.close()
    return "".join(writer.out), report


def rewrite_html(
    document: bytes,
    base: str,
    origins: OriginSet,
    rules: tuple[TagRule, ...] | list[TagRule] = DEFAULT_RULES,
    shim_url: str | None = None,
    declared_charset: str | None = None,
) -> tuple[bytes, RewriteReport]:
    """Rewrite an HTML document given as raw bytes; output is always UTF-8.

    Charset detection order: the Content-Type parameter (``declared_charset``),
    then a meta charset sniffed from the head of the document, then UTF-8.
    Parsing is error-tolerant and never rejects a document.
    """
    charset = declared_charset or _sniff_meta_charset(document) or "utf-8"
    try:
        text = document.decode(charset, errors="replace")
    except LookupError:
        charset = "utf-8"
        text = document.decode("utf-8", errors="replace")
    rewritten, report = rewrite_html_text(text, base, origins, rules, shim_url)
    return rewritten.encode("utf-8"), report


def inject_shim(text: str, shim_url: str) -> str:
    """Insert the shim script reference as the first child of head (created
    if absent); a document already carrying the reference is left alone."""
    scan = _PreScan(shim_url)
    scan.feed(text)
    scan.close()
    writer = _Rewriter(
        "", None, {}, shim_url, RewriteReport(), _choose_inject_mode(scan, shim_url)
    )
    writer.feed(text)
    writer.close()
    return "".join(writer.out)


def _sniff_meta_charset(document: bytes) -> str | None:
    match = _META_CHARSET_RE.search(document[:2048])
    return match.group(1).decode("ascii") if match else None
