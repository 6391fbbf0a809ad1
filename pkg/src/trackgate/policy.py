"""Header strip lists, redirect laundering, and the CSP builder.

This is the declarative core of the gateway: which request headers never
reach a third party, which response headers never reach the browser, how
third-party redirects are folded back onto the middle party, and what
Content-Security-Policy the rewrite server attaches as a bypass backstop.

Headers are handled as ordered ``(name, value)`` pair lists so multi-valued
headers (every ``Set-Cookie``) and original ordering survive untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

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

HeaderList = list[tuple[str, str]]

# Request headers carrying user-recognition or site-identification state.
# If-None-Match/If-Match are the request-side halves of the ETag mechanism.
REQUIRED_REQUEST_STRIP = (
    "Cookie",
    "Referer",
    "If-Modified-Since",
    "If-None-Match",
    "Cache-Control",
    "User-Agent",
)
DEFAULT_REQUEST_STRIP = REQUIRED_REQUEST_STRIP + ("If-Match",)

# Response headers a third party can use to plant identifiers client-side.
REQUIRED_RESPONSE_STRIP = ("Set-Cookie", "ETag", "Last-Modified", "Cache-Control")
DEFAULT_RESPONSE_STRIP = REQUIRED_RESPONSE_STRIP

# Upstream requests carry this instead of the user's own User-Agent; many
# servers reject UA-less requests, and a constant carries no per-user state.
GENERIC_USER_AGENT = "Mozilla/5.0 (compatible; trackgate/1.0)"

_CSP_KEYWORDS = frozenset(
    {"self", "none", "unsafe-inline", "unsafe-eval", "strict-dynamic", "unsafe-hashes"}
)


def _lower_set(names: Iterable[str]) -> frozenset[str]:
    return frozenset(name.lower() for name in names)


@dataclass(frozen=True)
class TrackingPolicy:
    """Which stateful tracking vectors get removed, and how.

    The strip lists are extendable but may not shrink below the required
    minimums.  ``strip_referer_outbound`` and ``strip_origin_header``
    toggle the two site-identification headers independently: Referer is
    stripped by default, Origin is preserved by default because removing
    it breaks CORS for legitimate cross-origin fetches.
    """

    request_strip: tuple[str, ...] = DEFAULT_REQUEST_STRIP
    response_strip: tuple[str, ...] = DEFAULT_RESPONSE_STRIP
    strip_referer_outbound: bool = True
    rewrite_location: bool = True
    user_agent_replacement: str | None = GENERIC_USER_AGENT
    add_no_store: bool = False
    strip_origin_header: bool = False
    strict_sandbox: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "request_strip", tuple(self.request_strip))
        object.__setattr__(self, "response_strip", tuple(self.response_strip))
        missing = _lower_set(REQUIRED_REQUEST_STRIP) - _lower_set(self.request_strip)
        if missing:
            raise ValueError(f"request_strip is missing required names: {sorted(missing)}")
        missing = _lower_set(REQUIRED_RESPONSE_STRIP) - _lower_set(self.response_strip)
        if missing:
            raise ValueError(f"response_strip is missing required names: {sorted(missing)}")

    def _effective_request_strip(self) -> frozenset[str]:
        names = set(_lower_set(self.request_strip))
        if not self.strip_referer_outbound:
            names.discard("referer")
        if self.strip_origin_header:
            names.add("origin")
        return frozenset(names)

    def strip_request_headers(self, headers: Sequence[tuple[str, str]]) -> tuple[HeaderList, list[str]]:
        """Drop every occurrence of the request strip list, preserving the rest in order."""
        strip = self._effective_request_strip()
        kept: HeaderList = []
        removed: list[str] = []
        for name, value in headers:
            if name.lower() in strip:
                removed.append(name)
            else:
                kept.append((name, value))
        return kept, removed

    def strip_response_headers(
        self,
        headers: Sequence[tuple[str, str]],
        origins: OriginSet,
        base: str | None = None,
        kind: UrlKind = UrlKind.IN_CONTEXT,
    ) -> tuple[HeaderList, list[str]]:
        """Drop the response strip list and launder third-party Location targets.

        ``base`` is the decapsulated URL the upstream request was sent to;
        relative Location values are resolved against it before being
        re-encapsulated with the original request's ``kind``.  Malformed
        Location values are removed entirely (fail closed).
        """
        strip = _lower_set(self.response_strip)
        kept: HeaderList = []
        removed: list[str] = []
        for name, value in headers:
            lower = name.lower()
            if lower in strip:
                removed.append(name)
                continue
            if lower == "location" and self.rewrite_location and base is not None:
                try:
                    if classify(value, base, origins) is Classification.THIRD_PARTY:
                        value = encode(ProxiedUrl(resolve(value, base), kind), origins)
                except UnparsableUrl:
                    removed.append(name)
                    continue
            kept.append((name, value))
        if self.add_no_store:
            kept.append(("Cache-Control", "no-store"))
        return kept, removed


@dataclass(frozen=True)
class CspDirectives:
    """Source lists for the injected policy; ``None`` means the built-in default.

    Defaults whitelist exactly the page's own origin and the middle party,
    which is what prevents a script that escaped rewriting from talking to
    a third party directly.
    """

    default_src: tuple[str, ...] | None = None
    object_src: tuple[str, ...] = ("self",)
    frame_ancestors: tuple[str, ...] | None = None


def _serialize_sources(sources: Iterable[str]) -> str:
    out = []
    for source in sources:
        if source in _CSP_KEYWORDS:
            out.append(f"'{source}'")
        else:
            out.append(source)  # host-source; CSP quotes are for keywords only
    return " ".join(out)


def build_csp(origins: OriginSet, directives: CspDirectives = CspDirectives()) -> str:
    """Build the Content-Security-Policy header value for first-party pages."""
    default_src = directives.default_src
    if default_src is None:
        default_src = ("self", origins.middle_party)
    parts = [
        f"default-src {_serialize_sources(default_src)}",
        f"object-src {_serialize_sources(directives.object_src)}",
    ]
    if directives.frame_ancestors is not None:
        parts.append(f"frame-ancestors {_serialize_sources(directives.frame_ancestors)}")
    return "; ".join(parts)
