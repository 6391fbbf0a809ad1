"""URL encapsulation and origin classification.

Third-party URLs are wrapped into middle-party URLs of the form
``http://middle.example/?src=<pct-encoded-target>`` (in-context content)
or ``?emb=<pct-encoded-target>`` (cross-context content), and unwrapped
again on the middle-party side.  Classification follows the same-origin
policy: an origin is scheme + host + port, with default ports normalized.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from urllib.parse import parse_qsl, quote, urljoin, urlsplit

IN_CONTEXT_PARAM = "src"
CROSS_CONTEXT_PARAM = "emb"

_DEFAULT_PORTS = {"http": 80, "https": 443}

# Tabs and newlines are stripped from URLs before parsing, as browsers do.
_URL_GARBAGE_RE = re.compile(r"[\t\r\n]")


class UrlCodecError(ValueError):
    """Base class for encapsulation/classification failures."""


class UnparsableUrl(UrlCodecError):
    """The URL cannot be parsed; the caller should leave the reference alone."""


class BadEncapsulation(UrlCodecError):
    """A middle-party URL is missing or duplicating the src/emb parameter,
    or carries a target that is not an absolute http(s) URL."""


class LoopDetected(UrlCodecError):
    """The decapsulated target points back at the middle party itself."""


class UrlKind(enum.Enum):
    """Context of an encapsulated reference; the value is the wire parameter name."""

    IN_CONTEXT = IN_CONTEXT_PARAM
    CROSS_CONTEXT = CROSS_CONTEXT_PARAM


class Classification(enum.Enum):
    FIRST_PARTY = "first-party"
    MIDDLE_PARTY = "middle-party"
    THIRD_PARTY = "third-party"
    NON_HTTP = "non-http"


def _clean(url: str) -> str:
    return _URL_GARBAGE_RE.sub("", url.strip())


def origin_of(url: str) -> str:
    """Return the normalized origin (``scheme://host[:port]``) of an absolute URL.

    Hosts are lowercased and default ports (http:80, https:443) dropped.
    Raises UnparsableUrl for non-http(s) schemes, missing hosts, or
    malformed authorities.
    """
    try:
        parts = urlsplit(_clean(url))
        scheme = parts.scheme.lower()
        host = parts.hostname
        port = parts.port
    except ValueError as exc:
        raise UnparsableUrl(f"cannot parse URL: {url!r}") from exc
    if scheme not in _DEFAULT_PORTS or not host:
        raise UnparsableUrl(f"not an absolute http(s) URL: {url!r}")
    if ":" in host:  # bare IPv6 address, re-bracket
        host = f"[{host}]"
    if port is None or port == _DEFAULT_PORTS[scheme]:
        return f"{scheme}://{host}"
    return f"{scheme}://{host}:{port}"


@dataclass(frozen=True)
class OriginSet:
    """The two trusted origins plus optional extra first-party origins.

    The middle party must live on a different origin than the first party,
    otherwise encapsulated requests would be same-origin and the browser
    would attach first-party state to them.
    """

    first_party: str
    middle_party: str
    first_party_allowlist: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "first_party", origin_of(self.first_party))
        object.__setattr__(self, "middle_party", origin_of(self.middle_party))
        object.__setattr__(
            self,
            "first_party_allowlist",
            tuple(origin_of(o) for o in self.first_party_allowlist),
        )
        if self.first_party == self.middle_party:
            raise ValueError("first-party and middle-party origins must differ")


@dataclass(frozen=True)
class ProxiedUrl:
    """An absolute third-party target plus the context it will load in.

    Fragments are stripped on construction: they never reach the wire and
    would otherwise bloat the encapsulated query string.
    """

    target: str
    kind: UrlKind

    def __post_init__(self) -> None:
        target = _clean(self.target).split("#", 1)[0]
        origin_of(target)  # validates absolute http(s) with a sane authority
        object.__setattr__(self, "target", target)


def resolve(url: str, base: str) -> str:
    """Resolve ``url`` against ``base``, raising UnparsableUrl on garbage."""
    try:
        resolved = urljoin(base, _clean(url))
        urlsplit(resolved).port  # noqa: B018 - forces authority validation
    except ValueError as exc:
        raise UnparsableUrl(f"cannot resolve {url!r} against {base!r}") from exc
    return resolved


def classify(url: str, base: str, origins: OriginSet) -> Classification:
    """Classify a (possibly relative) URL reference found in first-party content.

    Relative references are resolved against ``base`` first; protocol-relative
    references inherit the base scheme.  Non-http(s) schemes (``data:``,
    ``javascript:``, ``blob:``, ``about:``, ...) are NonHttp and are never
    rewritten since they carry no third-party request.
    """
    resolved = resolve(url, base)
    scheme = urlsplit(resolved).scheme.lower()
    if scheme not in _DEFAULT_PORTS:
        return Classification.NON_HTTP
    origin = origin_of(resolved)
    if origin == origins.middle_party:
        return Classification.MIDDLE_PARTY
    if origin == origins.first_party or origin in origins.first_party_allowlist:
        return Classification.FIRST_PARTY
    return Classification.THIRD_PARTY


def encode(proxied: ProxiedUrl, origins: OriginSet) -> str:
    """Encapsulate a third-party target into a middle-party URL.

    The full target is percent-encoded so targets containing ``&`` or ``?``
    survive the trip through the query string.
    """
    return (
        f"{origins.middle_party}/?"
        f"{proxied.kind.value}={quote(proxied.target, safe='')}"
    )


def decode(url: str, origins: OriginSet) -> ProxiedUrl:
    """Decapsulate a middle-party URL back into its target and kind.

    Raises BadEncapsulation when the src/emb parameter is missing,
    duplicated, or contains anything but an absolute http(s) URL, and
    LoopDetected when the target points back at the middle party
    (self-proxying chains are refused).
    """
    try:
        query = urlsplit(_clean(url)).query
    except ValueError as exc:
        raise BadEncapsulation(f"cannot parse URL: {url!r}") from exc
    wrapped = [
        (name, value)
        for name, value in parse_qsl(query, keep_blank_values=True)
        if name in (IN_CONTEXT_PARAM, CROSS_CONTEXT_PARAM)
    ]
    if len(wrapped) != 1:
        raise BadEncapsulation(
            f"expected exactly one {IN_CONTEXT_PARAM}/{CROSS_CONTEXT_PARAM} "
            f"parameter, found {len(wrapped)}"
        )
    name, target = wrapped[0]
    try:
        target_origin = origin_of(target)
    except UnparsableUrl as exc:
        raise BadEncapsulation(f"target is not an absolute http(s) URL: {target!r}") from exc
    if target_origin == origins.middle_party:
        raise LoopDetected(f"target points back at the middle party: {target!r}")
    kind = UrlKind.IN_CONTEXT if name == IN_CONTEXT_PARAM else UrlKind.CROSS_CONTEXT
    return ProxiedUrl(target, kind)
