import json

import pytest

from trackgate.harness import run_scenario
from trackgate.harness.cli import main as harness_main
from trackgate.harness.scenarios import SCENARIOS, LinkageVerdict


class TestVerdictInvariant:
    @pytest.mark.parametrize(
        "user,site,expected",
        [(True, True, True), (True, False, False), (False, True, False), (False, False, False)],
    )
    def test_tracking_needs_both(self, user, site, expected):
        verdict = LinkageVerdict(user_recognized=user, website_identified=site)
        assert verdict.tracking_possible is expected


class TestScenarios:
    def test_baseline_tracks(self):
        result = run_scenario("BASELINE", seed=1)
        assert result.passed, result.transcript["assertions"]
        assert result.verdict.tracking_possible is True
        assert result.verdict.evidence

    def test_gated_in_context_breaks_user_recognition(self):
        result = run_scenario("GATED_IN_CONTEXT", seed=1)
        assert result.passed, result.transcript["assertions"]
        assert result.verdict.user_recognized is False

    def test_gated_cross_context_breaks_website_identification(self):
        result = run_scenario("GATED_CROSS_CONTEXT", seed=1)
        assert result.passed, result.transcript["assertions"]
        assert result.verdict.website_identified is False
        assert result.verdict.tracking_possible is False

    def test_redirect_chain(self):
        result = run_scenario("REDIRECT_CHAIN", seed=1)
        assert result.passed, result.transcript["assertions"]

    def test_css_chain(self):
        result = run_scenario("CSS_CHAIN", seed=1)
        assert result.passed, result.transcript["assertions"]

    def test_unknown_scenario_rejected(self):
        with pytest.raises(KeyError):
            run_scenario("NOPE")

    def test_identifiers_reproducible_for_same_seed(self):
        uids_a = _issued_uids(run_scenario("BASELINE", seed=42))
        uids_b = _issued_uids(run_scenario("BASELINE", seed=42))
        assert uids_a == uids_b
        assert uids_a != _issued_uids(run_scenario("BASELINE", seed=43))


def _issued_uids(result) -> list[str]:
    uids = []
    for observation in result.transcript["observations"]["tracker"]:
        if "uid" in observation["cookies"]:
            uids.append(observation["cookies"]["uid"])
    return sorted(uids)


class TestTranscript:
    def test_schema(self):
        result = run_scenario("BASELINE", seed=3)
        transcript = result.transcript
        for key in ("scenario", "seed", "servers", "steps", "observations", "verdict", "assertions", "passed"):
            assert key in transcript, key
        json.dumps(transcript)  # must be JSON-serializable
        assert transcript["verdict"]["tracking_possible"] is True
        assert all({"name", "passed", "detail"} <= set(a) for a in transcript["assertions"])


class TestCli:
    def test_run_single(self, capsys):
        assert harness_main(["run", "BASELINE", "--seed", "2"]) == 0
        out = capsys.readouterr().out
        assert "BASELINE: PASS" in out

    def test_run_all_json(self, capsys):
        assert harness_main(["run", "all", "--seed", "2", "--json"]) == 0
        transcripts = json.loads(capsys.readouterr().out)
        assert {t["scenario"] for t in transcripts} == set(SCENARIOS)
