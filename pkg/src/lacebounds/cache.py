"""Checksummed, versioned JSON cache for computed tables.

Each entry is one file ``<kind>-<key>.json``::

    {"format": "lacebounds-cache", "version": 1, "kind": ..., "key": ...,
     "sha256": <hex digest of the canonical payload>, "payload": {...}}

Canonical JSON means sorted keys, no whitespace, and shortest round-trip
float reprs, so identical payloads give byte-identical files.  A file with a
wrong checksum, version or key is ignored and recomputed, never reused.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path

FORMAT = "lacebounds-cache"
VERSION = 1

log = logging.getLogger(__name__)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def checksum(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


class Cache:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def path(self, kind: str, key: str) -> Path:
        return self.root / f"{kind}-{key}.json"

    def load(self, kind: str, key: str):
        path = self.path(kind, key)
        if not path.exists():
            return None
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            log.warning("unreadable cache file %s (%s); recomputing", path, exc)
            return None
        if (
            doc.get("format") != FORMAT
            or doc.get("version") != VERSION
            or doc.get("kind") != kind
            or doc.get("key") != key
        ):
            log.warning("cache file %s has a foreign header; recomputing", path)
            return None
        payload = doc.get("payload")
        if checksum(payload) != doc.get("sha256"):
            log.warning("checksum mismatch in %s; recomputing", path)
            return None
        log.info("cache hit: %s", path.name)
        return payload

    def store(self, kind: str, key: str, payload) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        doc = {
            "format": FORMAT,
            "version": VERSION,
            "kind": kind,
            "key": key,
            "sha256": checksum(payload),
            "payload": payload,
        }
        path = self.path(kind, key)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(canonical_json(doc) + "\n")
        tmp.replace(path)
        return path


def default_cache() -> Cache | None:
    root = os.environ.get("LACEBOUNDS_CACHE")
    return Cache(root) if root else None
