"""Rewriting of third-party URL references inside CSS text.

Covers ``url(...)`` tokens (background images, fonts, cursors, ...) and
``@import`` targets in both their string and url() forms.  The scanner is
deliberately not a full CSS parser: it walks the text token by token and
reproduces every byte it does not rewrite, so invalid CSS passes through
untouched and rewriting twice equals rewriting once.
"""

from __future__ import annotations

import re

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

# Comments and plain strings are matched so url(/@import occurrences inside
# them are skipped; leftmost match wins, which gives them precedence.
_TOKEN_RE = re.compile(
    r"""
      (?P<comment>/\*.*?\*/)
    | (?P<url>url\(\s*)
    | (?P<import>@import\b)
    | (?P<string>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
    """,
    re.IGNORECASE | re.VERBOSE | re.DOTALL,
)

_QUOTED_RE = re.compile(r"(?P<quote>[\"'])(?P<body>(?:[^\"'\\]|\\.)*?)(?P=quote)")
_UNQUOTED_URL_RE = re.compile(r"(?:[^)\s\\]|\\.)*")
_CHARSET_RE = re.compile(rb'^@charset\s+"([ -~]+)"\s*;')


def _rewrite_target(raw_url: str, base: str, origins: OriginSet, report: RewriteReport) -> str | None:
    """Return the encapsulated replacement for a third-party URL, else None."""
    try:
        kind = classify(raw_url, base, origins)
    except UnparsableUrl:
        report.unparsable += 1
        return None
    if kind is Classification.NON_HTTP:
        report.skipped_nonhttp += 1
        return None
    if kind is not Classification.THIRD_PARTY:
        return None
    return encode(ProxiedUrl(resolve(raw_url, base), UrlKind.IN_CONTEXT), origins)


def _rewrite(text: str, base: str, origins: OriginSet) -> tuple[str, RewriteReport]:
    report = RewriteReport()
    out: list[str] = []
    pos = 0
    import_pending_at: int | None = None  # position right after an @import keyword
    while match := _TOKEN_RE.search(text, pos):
        out.append(text[pos : match.start()])
        pos = match.end()

        if match.group("comment"):
            out.append(match.group())
            continue

        if match.group("import"):
            out.append(match.group())
            import_pending_at = match.end()
            continue

        # Only whitespace may sit between @import and its target string.
        is_import_target = (
            import_pending_at is not None
            and text[import_pending_at : match.start()].strip() == ""
        )
        import_pending_at = None

        if match.group("string"):
            token = match.group()
            if is_import_target:
                replacement = _rewrite_target(token[1:-1], base, origins, report)
                if replacement is not None:
                    report.bump("css", "@import")
                    token = token[0] + replacement + token[-1]
            out.append(token)
            continue

        # url( token: parse the inner target, preserving the quoting style.
        if (quoted := _QUOTED_RE.match(text, pos)) is not None:
            raw_url = quoted.group("body")
            quote = quoted.group("quote")
            after = quoted.end()
        else:
            unquoted = _UNQUOTED_URL_RE.match(text, pos)
            raw_url = unquoted.group()
            quote = ""
            after = unquoted.end()
        closing = re.compile(r"\s*\)").match(text, after)
        if closing is None:  # unterminated url(): pass the rest through untouched
            report.unparsable += 1
            out.append(match.group())
            continue
        replacement = _rewrite_target(raw_url, base, origins, report)
        if replacement is None:
            out.append(text[match.start() : closing.end()])
        else:
            report.bump("css", "@import" if is_import_target else "url")
            out.append(match.group() + quote + replacement + quote + text[after : closing.end()])
        pos = closing.end()

    out.append(text[pos:])
    return "".join(out), report


def rewrite_css(text: str, base: str, origins: OriginSet) -> tuple[str, RewriteReport]:
    """Rewrite every third-party url()/@import target in a stylesheet.

    ``base`` is the URL the stylesheet was fetched from, so relative
    references inside third-party stylesheets chain back through the
    middle party.
    """
    return _rewrite(text, base, origins)


def rewrite_style_attribute(value: str, base: str, origins: OriginSet) -> str:
    """Declaration-list variant of rewrite_css, for inline ``style=`` attributes."""
    rewritten, _ = _rewrite(value, base, origins)
    return rewritten


def css_text_from_bytes(data: bytes, charset_hint: str | None = None) -> str:
    """Decode stylesheet bytes: Content-Type charset, then @charset, then UTF-8."""
    for charset in (charset_hint, _sniff_charset(data), "utf-8"):
        if not charset:
            continue
        try:
            return data.decode(charset, errors="replace")
        except LookupError:
            continue
    return data.decode("utf-8", errors="replace")


def _sniff_charset(data: bytes) -> str | None:
    match = _CHARSET_RE.match(data[:100])
    return match.group(1).decode("ascii") if match else None
