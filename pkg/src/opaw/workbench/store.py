"""Directory-backed JSON store for sessions and results, keyed by ULID."""

from __future__ import annotations

import json
import os
import threading
import time
from pathlib import Path

from ..errors import ParseError, UnknownIdError

_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"
_ulid_lock = threading.Lock()
_last_ms = -1
_counter = 0


def new_ulid(rng=None) -> str:
    """26-character Crockford-base32 ULID: 48 bits of time, 80 random bits.

    Same-millisecond calls bump a counter so ids stay unique and sortable
    within one process.
    """
    import secrets

    global _last_ms, _counter
    with _ulid_lock:
        ms = int(time.time() * 1000)
        if ms == _last_ms:
            _counter += 1
        else:
            _last_ms = ms
            _counter = 0
        entropy = (secrets.randbits(80) & ~0xFFFF) | (_counter & 0xFFFF)
    value = (ms << 80) | entropy
    chars = []
    for _ in range(26):
        chars.append(_CROCKFORD[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


class JsonStore:
    """One subdirectory per document kind; files named <id>.json.

    Mutations on a given id must happen under ``lock(id)``; the lock map is
    process-local, matching the single-service deployment model.
    """

    def __init__(self, root):
        self.root = Path(root)
        for kind in ("sessions", "results"):
            (self.root / kind).mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.RLock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, doc_id: str) -> threading.RLock:
        with self._locks_guard:
            if doc_id not in self._locks:
                self._locks[doc_id] = threading.RLock()
            return self._locks[doc_id]

    def _path(self, kind: str, doc_id: str) -> Path:
        safe = "".join(c for c in doc_id if c.isalnum() or c in "-_")
        if safe != doc_id or not doc_id:
            raise UnknownIdError(f"malformed id {doc_id!r}")
        return self.root / kind / f"{safe}.json"

    def save(self, kind: str, doc_id: str, doc: dict):
        path = self._path(kind, doc_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")), encoding="utf-8")
        os.replace(tmp, path)

    def load(self, kind: str, doc_id: str) -> dict:
        path = self._path(kind, doc_id)
        if not path.exists():
            raise UnknownIdError(f"no stored {kind[:-1]} with id {doc_id!r}")
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"stored document {path} is corrupt: {exc}") from exc

    def list_ids(self, kind: str) -> list[str]:
        return sorted(p.stem for p in (self.root / kind).glob("*.json"))


def default_data_dir() -> Path:
    env = os.environ.get("OPA_DATA_DIR")
    if env:
        return Path(env)
    return Path.home() / ".opaw"
