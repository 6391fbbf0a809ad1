import html as html_mod
import re
from pathlib import Path

import pytest

from trackgate.html_rewriter import (
    DEFAULT_RULES,
    TagRule,
    inject_shim,
    rewrite_html,
    rewrite_html_text,
)
from trackgate.urlcodec import Classification, OriginSet, UrlKind, classify, decode

ORIGINS = OriginSet("http://mysite.com", "http://middle.com")
BASE = "http://mysite.com/"
SHIM = "/__trackgate/shim.js"

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "html"
FIXTURES = sorted(FIXTURE_DIR.glob("*.html"))

_COMMENT_RE = re.compile(r"<!--.*?-->", re.DOTALL)
_SCRIPT_BODY_RE = re.compile(r"(<script\b[^>]*>).*?(</script>)", re.DOTALL | re.IGNORECASE)


def _scan_positions(doc: str) -> list[tuple[str, str, str]]:
    """Independent regex scan of every enabled (element, attribute) URL.

    Deliberately not built on the rewriter's parser: comments and script
    bodies are cut out, then attributes are pulled with plain regexes.
    """
    doc = _COMMENT_RE.sub("", doc)
    doc = _SCRIPT_BODY_RE.sub(r"\1\2", doc)
    found = []
    for rule in DEFAULT_RULES:
        pattern = re.compile(
            rf"<{rule.element}\b[^>]*?\s{rule.attribute}\s*=\s*"
            rf"(\"[^\"]*\"|'[^']*'|[^\s>]+)",
            re.IGNORECASE,
        )
        for match in pattern.finditer(doc):
            value = html_mod.unescape(match.group(1).strip("\"'"))
            if rule.attribute == "srcset":
                for candidate in value.split(","):
                    url = candidate.strip().split()[0] if candidate.strip() else ""
                    if url:
                        found.append((rule.element, rule.attribute, url))
            elif value:
                found.append((rule.element, rule.attribute, value))
    return found


def _kind_of_rule(element: str, attribute: str) -> UrlKind:
    for rule in DEFAULT_RULES:
        if rule.element == element and rule.attribute == attribute:
            return rule.kind
    raise LookupError((element, attribute))


class TestExamples:
    def test_third_party_script_rewritten(self):
        got, report = rewrite_html_text(
            '<script src="http://third.com/script.js"></script>', BASE, ORIGINS
        )
        assert got == '<script src="http://middle.com/?src=http%3A%2F%2Fthird.com%2Fscript.js"></script>'
        assert report.counts[("script", "src")] == 1

    def test_first_party_image_unchanged(self):
        src = '<img src="/local.png">'
        got, report = rewrite_html_text(src, BASE, ORIGINS)
        assert got == src
        assert report.total == 0

    def test_iframe_gets_cross_context_encapsulation(self):
        got, _ = rewrite_html_text('<iframe src="http://third.com/page.html">', BASE, ORIGINS)
        assert 'src="http://middle.com/?emb=http%3A%2F%2Fthird.com%2Fpage.html"' in got

    def test_counts_by_position(self):
        doc = (FIXTURE_DIR / "scripts_counting.html").read_text()
        _, report = rewrite_html_text(doc, BASE, ORIGINS)
        # Independent oracle: regex count of third-party script tags in the fixture.
        scripts = re.findall(r'<script src="http://(?:tracker|ads)\.test/', doc)
        assert report.counts[("script", "src")] == len(scripts) == 3
        assert ("img", "src") not in report.counts

    def test_unparsable_attribute_left_alone(self):
        src = '<img src="http://[broken">'
        got, report = rewrite_html_text(src, BASE, ORIGINS)
        assert got == src
        assert report.unparsable == 1

    def test_rule_toggle(self):
        rules = [r if r.element != "a" else TagRule("a", "href", r.kind, enabled=False) for r in DEFAULT_RULES]
        src = '<a href="http://third.com/x">x</a>'
        got, _ = rewrite_html_text(src, BASE, ORIGINS, rules=rules)
        assert got == src


class TestInjectShim:
    def test_first_child_of_head(self):
        got = inject_shim("<html><head><title>t</title></head><body></body></html>", SHIM)
        assert got == (
            f'<html><head><script src="{SHIM}"></script>'
            "<title>t</title></head><body></body></html>"
        )

    def test_head_synthesized(self):
        got = inject_shim("<html><body><p>x</p></body></html>", SHIM)
        assert got == (
            f'<html><head><script src="{SHIM}"></script></head>'
            "<body><p>x</p></body></html>"
        )

    def test_bare_fragment_gets_head(self):
        got = inject_shim("<p>x</p>", SHIM)
        assert got == f'<head><script src="{SHIM}"></script></head><p>x</p>'

    def test_doctype_stays_first(self):
        got = inject_shim("<!DOCTYPE html>\n<p>x</p>", SHIM)
        assert got.startswith("<!DOCTYPE html>")
        assert '<script src="' in got

    def test_not_duplicated(self):
        once = inject_shim("<html><head></head><body></body></html>", SHIM)
        assert inject_shim(once, SHIM) == once

    def test_empty_document(self):
        got = inject_shim("", SHIM)
        assert got == f'<head><script src="{SHIM}"></script></head>'


class TestBaseHandling:
    def test_third_party_base_removed_and_used_for_resolution(self):
        got, _ = rewrite_html_text((FIXTURE_DIR / "base_third_party.html").read_text(), BASE, ORIGINS)
        assert "<base" not in got
        positions = [(el, at, url) for el, at, url in _scan_positions(got)]
        for _, _, url in positions:
            proxied = decode(url, ORIGINS)
            assert proxied.target.startswith("http://tracker.test/assets/")

    def test_first_party_base_kept(self):
        got, _ = rewrite_html_text((FIXTURE_DIR / "base_first_party.html").read_text(), BASE, ORIGINS)
        assert '<base href="/deep/path/">' in got
        assert 'src="relative.png"' in got  # still relative, still first-party


class TestCharset:
    def test_latin1_meta_updated_and_body_transcoded(self):
        raw = (FIXTURE_DIR / "charset_latin1.html").read_bytes()
        out, _ = rewrite_html(raw, BASE, ORIGINS)
        text = out.decode("utf-8")
        assert 'charset="utf-8"' in text
        assert "Café corner" in text

    def test_content_type_param_takes_precedence(self):
        doc = "<html><head></head><body><p>€</p></body></html>".encode("utf-16")
        out, _ = rewrite_html(doc, BASE, ORIGINS, declared_charset="utf-16")
        assert "€" in out.decode("utf-8")

    def test_http_equiv_content_updated(self):
        doc = (
            b'<html><head><meta http-equiv="Content-Type" '
            b'content="text/html; charset=iso-8859-1"></head><body>caf\xe9</body></html>'
        )
        out, _ = rewrite_html(doc, BASE, ORIGINS)
        assert b"charset=utf-8" in out
        assert "café" in out.decode("utf-8")


class TestStyleHandling:
    def test_style_element_rewritten(self):
        got, report = rewrite_html_text(
            "<style>body{background:url(http://t.com/x.png)}</style>", BASE, ORIGINS
        )
        assert "http://middle.com/?src=" in got
        assert report.counts[("css", "url")] == 1

    def test_style_attribute_rewritten(self):
        got, report = rewrite_html_text(
            '<div style="background:url(http://t.com/x.png)">x</div>', BASE, ORIGINS
        )
        assert "http://middle.com/?src=" in got
        assert report.counts[("div", "style")] == 1

    def test_inline_script_body_untouched(self):
        src = '<script>var u = "http://t.com/x.js";</script>'
        got, _ = rewrite_html_text(src, BASE, ORIGINS)
        assert got == src


@pytest.mark.parametrize("fixture", FIXTURES, ids=lambda p: p.name)
class TestCorpus:
    def test_completeness(self, fixture):
        out, _ = rewrite_html(fixture.read_bytes(), BASE, ORIGINS, shim_url=SHIM)
        for element, attribute, url in _scan_positions(out.decode("utf-8")):
            got = classify(url, BASE, ORIGINS)
            assert got is not Classification.THIRD_PARTY, (element, attribute, url)

    def test_idempotence(self, fixture):
        once, _ = rewrite_html(fixture.read_bytes(), BASE, ORIGINS, shim_url=SHIM)
        twice, report = rewrite_html(once, BASE, ORIGINS, shim_url=SHIM)
        assert twice == once
        assert report.total == 0

    def test_kind_correctness(self, fixture):
        out, _ = rewrite_html(fixture.read_bytes(), BASE, ORIGINS, shim_url=SHIM)
        for element, attribute, url in _scan_positions(out.decode("utf-8")):
            if classify(url, BASE, ORIGINS) is not Classification.MIDDLE_PARTY:
                continue
            if "src=" not in url and "emb=" not in url:
                continue
            assert decode(url, ORIGINS).kind is _kind_of_rule(element, attribute)

    def test_golden_stable(self, fixture):
        out, _ = rewrite_html(fixture.read_bytes(), BASE, ORIGINS, shim_url=SHIM)
        golden = Path(__file__).parent / "golden" / "html" / fixture.name
        assert out == golden.read_bytes()


class TestNonInterference:
    def test_clean_document_round_trips(self):
        src = (FIXTURE_DIR / "clean.html").read_text()
        got, report = rewrite_html_text(src, BASE, ORIGINS, shim_url=SHIM)
        assert got == src.replace("<head>", f'<head><script src="{SHIM}"></script>', 1)
        assert report.total == 0

    def test_comments_verbatim(self):
        src = (FIXTURE_DIR / "comments_conditional.html").read_text()
        got, _ = rewrite_html_text(src, BASE, ORIGINS)
        assert "<!-- plain comment mentioning http://tracker.test/ignored.js -->" in got
        assert '<!--[if IE]><script src="http://tracker.test/ie-only.js"></script><![endif]-->' in got

    def test_already_encapsulated_untouched(self):
        src = (FIXTURE_DIR / "already_rewritten.html").read_text()
        got, report = rewrite_html_text(src, BASE, ORIGINS)
        assert 'src="http://middle.com/?src=http%3A%2F%2Ftracker.test%2Fdone.js"' in got
        assert report.total == 1  # only the fresh image


class TestSrcset:
    def test_per_candidate(self):
        got, _ = rewrite_html_text(
            '<img srcset="http://t.com/a.jpg 1x, /local.jpg 2x">', BASE, ORIGINS
        )
        assert "http://middle.com/?src=http%3A%2F%2Ft.com%2Fa.jpg 1x" in got
        assert "/local.jpg 2x" in got

    def test_untouched_when_no_third_party(self):
        src = '<img srcset="/a.jpg 1x, /b.jpg 2x">'
        assert rewrite_html_text(src, BASE, ORIGINS)[0] == src
