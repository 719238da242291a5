"""Per-location codebook store persisted as one JSON document."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from ..core import Codebook, codebook_from_text, codebook_to_text

STORE_VERSION = 1
MAX_LOCATION_ID = 64


def check_location_id(location_id: object) -> str:
    if not isinstance(location_id, str) or not location_id:
        raise ValueError("location id must be a nonempty string")
    if len(location_id) > MAX_LOCATION_ID:
        raise ValueError(f"location id longer than {MAX_LOCATION_ID} characters")
    return location_id


class CodebookStore:
    """Mapping of location id to codebook, optionally backed by a file.

    Every mutation is written through to ``path`` (when set) via a temporary
    file and an atomic rename.
    """

    def __init__(self, path: str | os.PathLike | None = None, entries: dict[str, Codebook] | None = None):
        self.path = Path(path) if path is not None else None
        self.version = STORE_VERSION
        self._entries: dict[str, Codebook] = {}
        for loc, cb in (entries or {}).items():
            self._entries[check_location_id(loc)] = cb

    @classmethod
    def load(cls, path: str | os.PathLike) -> CodebookStore:
        path = Path(path)
        if not path.exists():
            return cls(path)
        return cls.from_json(path.read_text(encoding="utf-8"), path)

    @classmethod
    def from_json(cls, text: str, path: str | os.PathLike | None = None) -> CodebookStore:
        doc = json.loads(text)
        if not isinstance(doc, dict) or doc.get("version") != STORE_VERSION:
            raise ValueError(f"unsupported store document (version {doc.get('version') if isinstance(doc, dict) else None!r})")
        entries = doc.get("entries")
        if not isinstance(entries, dict):
            raise ValueError("store entries must be an object")
        return cls(path, {loc: codebook_from_text(txt) for loc, txt in entries.items()})

    def to_json(self) -> str:
        doc = {"version": self.version,
               "entries": {loc: codebook_to_text(self._entries[loc]) for loc in sorted(self._entries)}}
        return json.dumps(doc, indent=2) + "\n"

    def save(self) -> None:
        if self.path is None:
            return
        directory = self.path.parent if str(self.path.parent) else Path(".")
        fd, tmp = tempfile.mkstemp(prefix=self.path.name + ".", suffix=".tmp", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(self.to_json())
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def put(self, location_id: str, cb: Codebook) -> None:
        self._entries[check_location_id(location_id)] = cb
        self.save()

    def delete(self, location_id: str) -> None:
        del self._entries[location_id]
        self.save()

    def get(self, location_id: str) -> Codebook:
        return self._entries[location_id]

    def __contains__(self, location_id: object) -> bool:
        return location_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def location_ids(self) -> list[str]:
        return sorted(self._entries)
