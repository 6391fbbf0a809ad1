"""Gateway configuration shared by both servers.

The on-disk form is a JSON document; ``docs/gateway-config.schema.json``
describes it and the README shows a worked example.  Everything except the
addresses and the two origins has a sensible default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from trackgate.html_rewriter import DEFAULT_RULES, TagRule
from trackgate.policy import CspDirectives, TrackingPolicy
from trackgate.urlcodec import OriginSet, UrlKind


@dataclass(frozen=True)
class GatewayConfig:
    listen: str  # "host:port"
    origins: OriginSet
    upstream: str | None = None  # "host:port" of the original server (rewrite server only)
    policy: TrackingPolicy = TrackingPolicy()
    csp: CspDirectives = CspDirectives()
    rules: tuple[TagRule, ...] = DEFAULT_RULES
    shim_path: str = "/__trackgate/shim.js"
    max_rewrite_size: int = 8 * 1024 * 1024
    upstream_timeout: float = 10.0
    tls_certfile: str | None = None
    tls_keyfile: str | None = None

    def __post_init__(self) -> None:
        if self.upstream is not None and self.listen == self.upstream:
            raise ValueError("listen and upstream addresses must differ")
        if not self.shim_path.startswith("/"):
            raise ValueError("shim_path must be a same-origin absolute path")
        if (self.tls_certfile is None) != (self.tls_keyfile is None):
            raise ValueError("tls requires both certfile and keyfile")


def _listen_tuple(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    return host or "127.0.0.1", int(port)


def listen_address(config: GatewayConfig) -> tuple[str, int]:
    return _listen_tuple(config.listen)


def _policy_from_dict(raw: dict) -> TrackingPolicy:
    kwargs = {}
    for key in (
        "request_strip",
        "response_strip",
        "strip_referer_outbound",
        "rewrite_location",
        "user_agent_replacement",
        "add_no_store",
        "strip_origin_header",
        "strict_sandbox",
    ):
        if key in raw:
            value = raw[key]
            if key.endswith("_strip"):
                value = tuple(value)
            kwargs[key] = value
    return TrackingPolicy(**kwargs)


def _csp_from_dict(raw: dict) -> CspDirectives:
    def tup(key: str):
        return tuple(raw[key]) if raw.get(key) is not None else None

    kwargs = {}
    if "default_src" in raw:
        kwargs["default_src"] = tup("default_src")
    if "object_src" in raw and raw["object_src"] is not None:
        kwargs["object_src"] = tuple(raw["object_src"])
    if "frame_ancestors" in raw:
        kwargs["frame_ancestors"] = tup("frame_ancestors")
    return CspDirectives(**kwargs)


def _rules_from_list(raw: list) -> tuple[TagRule, ...]:
    return tuple(
        TagRule(
            element=item["element"],
            attribute=item["attribute"],
            kind=UrlKind(item["kind"]),
            enabled=item.get("enabled", True),
        )
        for item in raw
    )


def config_from_dict(raw: dict) -> GatewayConfig:
    origins = OriginSet(
        first_party=raw["first_party_origin"],
        middle_party=raw["middle_party_origin"],
        first_party_allowlist=tuple(raw.get("first_party_allowlist", ())),
    )
    tls = raw.get("tls") or {}
    return GatewayConfig(
        listen=raw["listen"],
        upstream=raw.get("upstream"),
        origins=origins,
        policy=_policy_from_dict(raw.get("policy", {})),
        csp=_csp_from_dict(raw.get("csp", {})),
        rules=_rules_from_list(raw["rules"]) if "rules" in raw else DEFAULT_RULES,
        shim_path=raw.get("shim_path", "/__trackgate/shim.js"),
        max_rewrite_size=raw.get("max_rewrite_size", 8 * 1024 * 1024),
        upstream_timeout=raw.get("upstream_timeout", 10.0),
        tls_certfile=tls.get("certfile"),
        tls_keyfile=tls.get("keyfile"),
    )


def load_config(path: str | Path, overrides: dict | None = None) -> GatewayConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return config_from_dict(raw)
