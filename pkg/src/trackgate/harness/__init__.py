"""End-to-end proof rig: demo site + mock tracker + scripted browser.

The harness runs named scenarios against a full loopback deployment and
asserts the two halves of tracking separately: a tracker must recognize
the user (returned cookie or cache validator) AND identify the embedding
website (Referer) for tracking to work; breaking either breaks tracking.
"""

from trackgate.harness.scenarios import (
    SCENARIOS,
    LinkageVerdict,
    ScenarioResult,
    run_all,
    run_scenario,
)

__all__ = [
    "SCENARIOS",
    "LinkageVerdict",
    "ScenarioResult",
    "run_all",
    "run_scenario",
]
