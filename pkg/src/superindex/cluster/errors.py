"""Cluster-level failure types."""

from __future__ import annotations


class ReplicaUnreachable(Exception):
    """A replica did not respond; transport-level failure."""


class ShardUnavailable(Exception):
    """A write could not reach any live replica of its target shard."""

    def __init__(self, shard: int):
        super().__init__(f"shard {shard} has no live replica")
        self.shard = shard


class IncompleteCoverage(Exception):
    """A read could not cover every shard; partial answers are never given."""

    def __init__(self, shard: int):
        super().__init__(f"no live replica for shard {shard}")
        self.shard = shard


class LogTruncated(Exception):
    """The shard op log no longer reaches back to a replica's watermark."""

    def __init__(self, shard: int, watermark: int, first_seq: int):
        super().__init__(
            f"shard {shard} log starts at {first_seq}, replica watermark {watermark}"
        )
        self.shard = shard
        self.watermark = watermark
        self.first_seq = first_seq
