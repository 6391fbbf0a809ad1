"""Server-side anti-tracking gateway.

Two cooperating servers let a site embed third-party content without
letting the third parties track its users:

* the rewrite server, a reverse proxy in front of the original site that
  rewrites every third-party reference in HTML/CSS to route through the
  middle party, injects a client shim for dynamically created content,
  and attaches a Content-Security-Policy backstop;

* the middle-party server, a trusted forwarder on its own origin that
  strips stateful tracking headers in both directions, rewrites CSS it
  relays, and answers cross-context requests with a referrer-suppressing
  trampoline page instead of proxying them.

A self-contained harness (demo site + mock tracker + scripted browser)
demonstrates end-to-end that tracking is broken.
"""

from trackgate.css_rewriter import rewrite_css, rewrite_style_attribute
from trackgate.html_rewriter import DEFAULT_RULES, TagRule, inject_shim, rewrite_html
from trackgate.policy import CspDirectives, TrackingPolicy, build_csp
from trackgate.report import RewriteReport
from trackgate.urlcodec import (
    BadEncapsulation,
    Classification,
    LoopDetected,
    OriginSet,
    ProxiedUrl,
    UnparsableUrl,
    UrlKind,
    classify,
    decode,
    encode,
)

__all__ = [
    "BadEncapsulation",
    "Classification",
    "CspDirectives",
    "DEFAULT_RULES",
    "LoopDetected",
    "OriginSet",
    "ProxiedUrl",
    "RewriteReport",
    "TagRule",
    "TrackingPolicy",
    "UnparsableUrl",
    "UrlKind",
    "build_csp",
    "classify",
    "decode",
    "encode",
    "inject_shim",
    "rewrite_css",
    "rewrite_html",
    "rewrite_style_attribute",
]

__version__ = "0.1.0"
