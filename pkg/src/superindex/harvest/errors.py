"""Harvest-side failure types."""

from __future__ import annotations


class SourceUnreachable(Exception):
    """The source node did not answer (after retries, where applicable)."""


class PageOrderViolation(Exception):
    """A source returned pages out of (timestamp, id) order; the scan is
    untrustworthy and the source gets flagged."""

    def __init__(self, source_id: str, detail: str):
        super().__init__(f"{source_id}: {detail}")
        self.source_id = source_id


class MissingCursor(Exception):
    """Incremental sync or reconcile requested before any full harvest."""
