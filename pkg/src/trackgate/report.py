"""Per-document accounting of what a rewrite pass changed."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class RewriteReport:
    """Counts of rewritten references keyed by (element, attribute).

    CSS rewrites use the pseudo-keys ``("css", "url")`` and
    ``("css", "@import")``.  ``skipped_nonhttp`` counts references left
    alone because they carry no http(s) request (``data:`` and friends);
    ``unparsable`` counts references left alone because they would not
    parse as URLs at all.
    """

    counts: dict[tuple[str, str], int] = field(default_factory=dict)
    skipped_nonhttp: int = 0
    unparsable: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def bump(self, element: str, attribute: str, n: int = 1) -> None:
        key = (element, attribute)
        self.counts[key] = self.counts.get(key, 0) + n

    def merge(self, other: "RewriteReport") -> None:
        for key, n in other.counts.items():
            self.counts[key] = self.counts.get(key, 0) + n
        self.skipped_nonhttp += other.skipped_nonhttp
        self.unparsable += other.unparsable

    def summary(self) -> dict:
        """Flat JSON-friendly form for the structured request log."""
        return {
            "rewritten": self.total,
            "skipped_nonhttp": self.skipped_nonhttp,
            "unparsable": self.unparsable,
            "by": {f"{el}.{attr}": n for (el, attr), n in sorted(self.counts.items())},
        }
