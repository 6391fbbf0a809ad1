"""Named end-to-end scenarios and their verdicts.

Each scenario spins up a fresh loopback deployment (mock tracker, a second
third-party host, the demo site, both gateway servers), drives it with the
scripted browser, and grades the tracker's haul: could it recognize the
user, and could it identify the website?  Tracking needs both.
"""

from __future__ import annotations

import random
import re
import socket
import threading
from dataclasses import dataclass, field

from trackgate.config import GatewayConfig
from trackgate.harness.browser import USER_AGENT, Browser
from trackgate.harness.site import DemoSite
from trackgate.harness.tracker import MockTracker, TrackerObservation
from trackgate.middle_party import MiddlePartyServer
from trackgate.policy import GENERIC_USER_AGENT
from trackgate.rewrite_server import RewriteServer
from trackgate.urlcodec import OriginSet, decode

FORBIDDEN_UPSTREAM_REQUEST = ("cookie", "referer", "if-modified-since", "if-none-match", "cache-control")
FORBIDDEN_BROWSER_RESPONSE = ("set-cookie", "etag", "last-modified", "cache-control")


@dataclass(frozen=True)
class LinkageVerdict:
    """The two capabilities a tracker needs; disabling either one is enough."""

    user_recognized: bool
    website_identified: bool
    evidence: tuple[str, ...] = ()

    @property
    def tracking_possible(self) -> bool:
        return self.user_recognized and self.website_identified

    def to_dict(self) -> dict:
        return {
            "user_recognized": self.user_recognized,
            "website_identified": self.website_identified,
            "tracking_possible": self.tracking_possible,
            "evidence": list(self.evidence),
        }


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class ScenarioResult:
    name: str
    verdict: LinkageVerdict
    assertions: list[Assertion]
    transcript: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(assertion.passed for assertion in self.assertions)


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class Stack:
    """One scenario's servers, all on loopback, all torn down together."""

    def __init__(self, seed: int):
        master = random.Random(seed)
        self.partner = MockTracker(random.Random(master.getrandbits(64))).start()
        self.tracker = MockTracker(
            random.Random(master.getrandbits(64)),
            partner_url=f"{self.partner.origin}/landing",
        ).start()
        self.site = DemoSite(self.tracker.origin).start()

        rewrite_port = _free_port()
        middle_port = _free_port()
        origins = OriginSet(
            f"http://127.0.0.1:{rewrite_port}", f"http://127.0.0.1:{middle_port}"
        )
        self.origins = origins
        self.middle = MiddlePartyServer(
            GatewayConfig(listen=f"127.0.0.1:{middle_port}", origins=origins)
        )
        self.rewrite = RewriteServer(
            GatewayConfig(
                listen=f"127.0.0.1:{rewrite_port}",
                upstream=self.site.address,
                origins=origins,
            )
        )
        for server in (self.middle, self.rewrite):
            threading.Thread(
                target=lambda s=server: s.serve_forever(poll_interval=0.05), daemon=True
            ).start()

    @property
    def gated_origin(self) -> str:
        return self.origins.first_party

    def set_session(self, label: str) -> None:
        self.tracker.session_label = label
        self.partner.session_label = label

    def observations(self) -> dict[str, list[TrackerObservation]]:
        return {
            "tracker": list(self.tracker.observations),
            "partner": list(self.partner.observations),
        }

    def close(self) -> None:
        for server in (self.rewrite, self.middle):
            server.shutdown()
            server.server_close()
        self.site.stop()
        self.tracker.stop()
        self.partner.stop()

    def servers_dict(self) -> dict:
        return {
            "tracker": self.tracker.origin,
            "partner": self.partner.origin,
            "site": self.site.origin,
            "rewrite": self.origins.first_party,
            "middle": self.origins.middle_party,
        }


def compute_verdict(stack: Stack, site_origin: str) -> LinkageVerdict:
    user_evidence: list[str] = []
    site_evidence: list[str] = []
    for name, tracker in (("tracker", stack.tracker), ("partner", stack.partner)):
        for observation in tracker.observations:
            if tracker.returned_identifier(observation):
                user_evidence.append(f"{name}:{observation.id}")
            if observation.referer and observation.referer.startswith(site_origin):
                site_evidence.append(f"{name}:{observation.id}")
    return LinkageVerdict(
        user_recognized=bool(user_evidence),
        website_identified=bool(site_evidence),
        evidence=tuple(user_evidence + site_evidence),
    )


def _direct_hits(stack: Stack, browser: Browser) -> list[str]:
    hits = []
    for name, tracker in (("tracker", stack.tracker), ("partner", stack.partner)):
        for observation in tracker.observations:
            if observation.user_agent == browser.user_agent:
                hits.append(f"{name}:{observation.id}")
    return hits


def _forbidden_request_headers_seen(stack: Stack) -> list[str]:
    seen = []
    for name, tracker in (("tracker", stack.tracker), ("partner", stack.partner)):
        for observation in tracker.observations:
            for header, _ in observation.headers:
                if header.lower() in FORBIDDEN_UPSTREAM_REQUEST:
                    seen.append(f"{name}:{observation.id}:{header}")
    return seen


def _forbidden_response_headers_seen(fetches) -> list[str]:
    seen = []
    for fetched in fetches:
        for header, _ in fetched.headers:
            if header.lower() in FORBIDDEN_BROWSER_RESPONSE:
                seen.append(f"{fetched.url}:{header}")
    return seen


# --- scenarios ---------------------------------------------------------


def _baseline(stack: Stack, browser: Browser) -> tuple[LinkageVerdict, list[Assertion]]:
    for label in ("visit1", "visit2"):
        stack.set_session(label)
        browser.visit(f"{stack.site.origin}/in-context.html")
        browser.visit(f"{stack.site.origin}/cross-context.html")
    verdict = compute_verdict(stack, site_origin=stack.site.origin)
    return verdict, [
        Assertion("user_recognized", verdict.user_recognized is True),
        Assertion("website_identified", verdict.website_identified is True),
        Assertion("tracking_possible", verdict.tracking_possible is True),
    ]


def _gated_in_context(stack: Stack, browser: Browser) -> tuple[LinkageVerdict, list[Assertion]]:
    fetched = []
    for label in ("visit1", "visit2"):
        stack.set_session(label)
        visit = browser.visit(f"{stack.gated_origin}/in-context.html")
        fetched.extend(visit.resources)
    verdict = compute_verdict(stack, site_origin=stack.gated_origin)
    middle_fetches = [
        f for f in fetched if f.url.startswith(stack.origins.middle_party)
    ]
    forbidden_requests = _forbidden_request_headers_seen(stack)
    forbidden_responses = _forbidden_response_headers_seen(middle_fetches)
    direct = _direct_hits(stack, browser)
    return verdict, [
        Assertion("user_not_recognized", verdict.user_recognized is False),
        Assertion(
            "no_forbidden_upstream_request_headers",
            not forbidden_requests,
            ", ".join(forbidden_requests),
        ),
        Assertion(
            "no_forbidden_browser_response_headers",
            not forbidden_responses,
            ", ".join(forbidden_responses),
        ),
        Assertion("zero_direct_tracker_hits", not direct, ", ".join(direct)),
        Assertion("observations_exist", bool(stack.tracker.observations)),
    ]


def _gated_cross_context(stack: Stack, browser: Browser) -> tuple[LinkageVerdict, list[Assertion]]:
    frames = []
    for label in ("visit1", "visit2"):
        stack.set_session(label)
        visit = browser.visit(f"{stack.gated_origin}/cross-context.html")
        frames.extend(visit.frames)
    verdict = compute_verdict(stack, site_origin=stack.gated_origin)
    trampolines_ok = all(
        frame.outer.url.startswith(stack.origins.middle_party)
        and frame.inner is not None
        and frame.inner.status == 200
        for frame in frames
    )
    referers_absent = all(
        observation.referer is None for observation in stack.tracker.observations
    )
    return verdict, [
        Assertion("website_not_identified", verdict.website_identified is False),
        Assertion("tracking_not_possible", verdict.tracking_possible is False),
        Assertion("iframe_loads_via_trampoline", trampolines_ok and bool(frames)),
        Assertion("no_referer_reaches_tracker", referers_absent),
    ]


def _redirect_chain(stack: Stack, browser: Browser) -> tuple[LinkageVerdict, list[Assertion]]:
    stack.set_session("visit1")
    page_url = f"{stack.gated_origin}/redirect-page.html"
    page = browser.fetch(page_url)
    match = re.search(r'<img src="([^"]+)"', page.body.decode("utf-8"))
    image_url = match.group(1) if match else ""
    chain = browser.fetch_following(image_url, referer=page_url)
    first = chain[0]
    location = first.header("Location") or ""
    on_middle = location.startswith(stack.origins.middle_party)
    target_ok = False
    if on_middle:
        target_ok = (
            decode(location, stack.origins).target == f"{stack.partner.origin}/landing"
        )
    verdict = compute_verdict(stack, site_origin=stack.gated_origin)
    return verdict, [
        Assertion("image_redirects", first.status in (301, 302), f"status={first.status}"),
        Assertion("location_on_middle_origin", on_middle, location),
        Assertion("location_encodes_new_target", target_ok, location),
        Assertion(
            "chain_completes_via_middle",
            len(chain) == 2 and chain[1].status == 200,
        ),
        Assertion("user_not_recognized", verdict.user_recognized is False),
    ]


def _css_chain(stack: Stack, browser: Browser) -> tuple[LinkageVerdict, list[Assertion]]:
    stack.set_session("visit1")
    visit = browser.visit(f"{stack.gated_origin}/css-chain.html")
    verdict = compute_verdict(stack, site_origin=stack.gated_origin)
    css_fetches = [
        f for f in visit.resources
        if (f.header("Content-Type") or "").startswith("text/css")
    ]
    css_via_middle = all(
        f.url.startswith(stack.origins.middle_party) for f in css_fetches
    ) and bool(css_fetches)
    font_observations = [
        observation
        for observation in stack.tracker.observations
        if observation.path == "/font.woff"
    ]
    font_via_middle = bool(font_observations) and all(
        observation.user_agent == GENERIC_USER_AGENT for observation in font_observations
    )
    direct = _direct_hits(stack, browser)
    return verdict, [
        Assertion("stylesheet_fetched_via_middle", css_via_middle),
        Assertion("nested_font_request_arrives_via_middle", font_via_middle),
        Assertion("zero_direct_tracker_hits", not direct, ", ".join(direct)),
        Assertion("user_not_recognized", verdict.user_recognized is False),
    ]


SCENARIOS = {
    "BASELINE": _baseline,
    "GATED_IN_CONTEXT": _gated_in_context,
    "GATED_CROSS_CONTEXT": _gated_cross_context,
    "REDIRECT_CHAIN": _redirect_chain,
    "CSS_CHAIN": _css_chain,
}


def run_scenario(name: str, seed: int = 0) -> ScenarioResult:
    """Run one named scenario on a fresh stack and return its result."""
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")
    stack = Stack(seed)
    browser = Browser()
    try:
        verdict, assertions = SCENARIOS[name](stack, browser)
        transcript = {
            "scenario": name,
            "seed": seed,
            "servers": stack.servers_dict(),
            "steps": browser.steps,
            "observations": {
                source: [observation.to_dict() for observation in observations]
                for source, observations in stack.observations().items()
            },
            "verdict": verdict.to_dict(),
            "assertions": [assertion.to_dict() for assertion in assertions],
        }
        result = ScenarioResult(name, verdict, assertions, transcript)
        transcript["passed"] = result.passed
        return result
    finally:
        stack.close()


def run_all(seed: int = 0) -> list[ScenarioResult]:
    return [run_scenario(name, seed) for name in SCENARIOS]
