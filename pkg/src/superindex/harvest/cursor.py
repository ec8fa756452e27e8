"""Per-source harvest cursors, persisted as one small JSON file each.

The cursor is the high-water timestamp of synchronized records. Files are
written atomically (temp + rename) so a crash never leaves a torn cursor,
and a restart resumes from the last persisted value; the fetch overlap
window plus version-compare dedup make the resulting re-fetches harmless.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


@dataclass
class HarvestCursor:
    source_id: str
    last_sync_ms: int


class CursorStore:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, source_id: str) -> Path:
        return self.directory / f"{source_id}.json"

    def load(self, source_id: str) -> Optional[HarvestCursor]:
        path = self._path(source_id)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return HarvestCursor(source_id=obj["source_id"], last_sync_ms=obj["last_sync_ms"])

    def save(self, cursor: HarvestCursor) -> None:
        prior = self.load(cursor.source_id)
        if prior is not None and cursor.last_sync_ms < prior.last_sync_ms:
            raise ValueError(
                f"cursor for {cursor.source_id} would move backwards: "
                f"{prior.last_sync_ms} -> {cursor.last_sync_ms}"
            )
        path = self._path(cursor.source_id)
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(
                {"source_id": cursor.source_id, "last_sync_ms": cursor.last_sync_ms},
                fh,
            )
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    def delete(self, source_id: str) -> None:
        path = self._path(source_id)
        if path.exists():
            path.unlink()
