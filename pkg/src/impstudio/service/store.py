"""File-backed JSON record store with atomic writes and quarantine.

One canonical-JSON file per record. Writes go to a temp file in the same
directory, are fsynced, and renamed into place, so a crash can never leave a
half-written record. Files that fail to parse on load are moved into a
quarantine directory instead of taking the service down.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from ..errors import StorageUnavailable


class FileStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        try:
            for sub in ("designs", "jobs", "quarantine"):
                (self.root / sub).mkdir(parents=True, exist_ok=True)
            probe = self.root / ".write-probe"
            probe.write_text("ok")
            probe.unlink()
        except OSError as exc:
            raise StorageUnavailable(f"cannot use data dir {self.root}: {exc}") from exc

    def _path(self, kind: str, record_id: str) -> Path:
        return self.root / kind / f"{record_id}.json"

    def save(self, kind: str, record_id: str, payload: dict) -> None:
        data = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        directory = self.root / kind
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{record_id}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, self._path(kind, record_id))
        except OSError as exc:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise StorageUnavailable(f"write failed for {kind}/{record_id}: {exc}") from exc

    def load(self, kind: str, record_id: str) -> dict | None:
        path = self._path(kind, record_id)
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def load_all(self, kind: str) -> tuple[dict[str, dict], list[str]]:
        """All parseable records of a kind, plus ids of quarantined files."""
        records: dict[str, dict] = {}
        quarantined: list[str] = []
        for path in sorted((self.root / kind).glob("*.json")):
            record_id = path.stem
            try:
                records[record_id] = json.loads(path.read_text())
            except (json.JSONDecodeError, OSError):
                target = self.root / "quarantine" / f"{kind}-{path.name}"
                try:
                    os.replace(path, target)
                except OSError:
                    pass
                quarantined.append(record_id)
        return records, quarantined

    def delete(self, kind: str, record_id: str) -> None:
        path = self._path(kind, record_id)
        if path.exists():
            path.unlink()
