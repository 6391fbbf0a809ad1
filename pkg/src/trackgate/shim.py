"""Client shim asset: template loading and per-deployment substitution.

The shim ships as a single self-contained template with ``{{NAME}}``
placeholders; the serving process bakes the deployment's origins and wire
parameter names in at startup so the script needs no runtime configuration
fetch.
"""

from __future__ import annotations

import json
from importlib import resources

from trackgate.urlcodec import CROSS_CONTEXT_PARAM, IN_CONTEXT_PARAM, OriginSet


def load_default_template() -> str:
    return (
        resources.files("trackgate")
        .joinpath("assets/shim_template.js")
        .read_text(encoding="utf-8")
    )


def render_shim(origins: OriginSet, template: str | None = None) -> str:
    """Substitute the deployment constants into the shim template."""
    if template is None:
        template = load_default_template()
    allowlist_json = json.dumps(list(origins.first_party_allowlist))
    rendered = (
        template.replace("{{MIDDLE_ORIGIN}}", origins.middle_party)
        .replace("{{FIRST_PARTY_ORIGIN}}", origins.first_party)
        .replace("{{IN_CONTEXT_PARAM}}", IN_CONTEXT_PARAM)
        .replace("{{CROSS_CONTEXT_PARAM}}", CROSS_CONTEXT_PARAM)
        # the template holds the allowlist placeholder as a string literal
        # so it stays valid source pre-substitution; the quotes go with it
        .replace('"{{FIRST_PARTY_ALLOWLIST_JSON}}"', allowlist_json)
        .replace("{{FIRST_PARTY_ALLOWLIST_JSON}}", allowlist_json)
    )
    if "{{" in rendered:
        raise ValueError("shim template contains unsubstituted placeholders")
    return rendered
