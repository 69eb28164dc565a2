"""In-process session state: uploaded volumes, a byte-budgeted LRU of
degradation results, and the file-persisted preset store.

Result ids are content hashes of (volume_id, full parameter record), so the
cache key cannot collide for distinct records and an evicted result can
always be recomputed from its registry entry; the cache is an optimization,
never a semantic.
"""

import hashlib
import json
import os
import threading
import uuid
from collections import OrderedDict
from concurrent.futures import Future
from dataclasses import dataclass
from datetime import datetime, timezone

from ..grid import Volume
from ..kspace import DegradationParams, params_from_dict, params_to_dict, synthesize_ulf


def _params_key(volume_id, params: DegradationParams):
    canonical = json.dumps({"volume": volume_id, "params": params_to_dict(params)}, sort_keys=True)
    return "r-" + hashlib.sha256(canonical.encode()).hexdigest()[:16]


class VolumeStore:
    """Uploaded volumes for the lifetime of the process. Re-uploading the
    same bytes yields a fresh id on purpose (no dedup)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._volumes = {}

    def add(self, volume: Volume):
        volume_id = "v-" + uuid.uuid4().hex[:12]
        with self._lock:
            self._volumes[volume_id] = volume
        return volume_id

    def get(self, volume_id):
        with self._lock:
            return self._volumes.get(volume_id)


@dataclass
class CachedResult:
    volume: Volume
    report: dict
    nbytes: int


class ResultStore:
    """Degradation results: tiny always-kept registry (result_id -> inputs)
    plus an LRU of materialized volumes bounded by a byte budget.

    Concurrent identical requests coalesce onto one computation via a
    per-key future; distinct keys compute in parallel.
    """

    def __init__(self, volume_store: VolumeStore, cache_bytes):
        self._volumes = volume_store
        self._budget = int(cache_bytes)
        self._lock = threading.Lock()
        self._registry = {}
        self._cache = OrderedDict()
        self._cache_bytes = 0
        self._inflight = {}

    def _compute(self, volume_id, params):
        volume = self._volumes.get(volume_id)
        if volume is None:
            raise KeyError(volume_id)
        result, report = synthesize_ulf(volume, params)
        return CachedResult(volume=result, report=report.to_dict(), nbytes=result.data.nbytes)

    def _cache_put(self, key, entry: CachedResult):
        with self._lock:
            if key in self._cache:
                return
            self._cache[key] = entry
            self._cache_bytes += entry.nbytes
            while self._cache_bytes > self._budget and len(self._cache) > 1:
                _, evicted = self._cache.popitem(last=False)
                self._cache_bytes -= evicted.nbytes
            # a single over-budget entry is dropped immediately; the
            # registry still allows recomputation on demand
            if self._cache_bytes > self._budget:
                _, evicted = self._cache.popitem(last=False)
                self._cache_bytes -= evicted.nbytes

    def _cache_get(self, key):
        with self._lock:
            entry = self._cache.get(key)
            if entry is not None:
                self._cache.move_to_end(key)
            return entry

    def degrade(self, volume_id, params: DegradationParams):
        """Returns (result_id, CachedResult, cache_hit)."""
        key = _params_key(volume_id, params)
        entry = self._cache_get(key)
        if entry is not None:
            return key, entry, True

        with self._lock:
            fut = self._inflight.get(key)
            owner = fut is None
            if owner:
                fut = Future()
                self._inflight[key] = fut
        if owner:
            try:
                entry = self._compute(volume_id, params)
                self._registry[key] = (volume_id, params_to_dict(params))
                fut.set_result(entry)
            except BaseException as exc:
                fut.set_exception(exc)
                raise
            finally:
                with self._lock:
                    self._inflight.pop(key, None)
            self._cache_put(key, entry)
            return key, entry, False
        return key, fut.result(), False

    def materialize(self, result_id):
        """Cached entry, or a recomputation from the registry; None for
        ids this process has never produced."""
        entry = self._cache_get(result_id)
        if entry is not None:
            return entry
        record = self._registry.get(result_id)
        if record is None:
            return None
        volume_id, params_dict = record
        entry = self._compute(volume_id, params_from_dict(params_dict))
        self._cache_put(result_id, entry)
        return entry

    @property
    def cache_bytes_used(self):
        with self._lock:
            return self._cache_bytes


class PresetStore:
    """Named parameter presets persisted to a local JSON file."""

    def __init__(self, path):
        self._path = str(path)
        self._lock = threading.Lock()
        self._presets = {}
        self._load()

    def _load(self):
        if os.path.exists(self._path):
            with open(self._path) as f:
                data = json.load(f)
            self._presets = {p["name"]: p for p in data.get("presets", [])}

    def _save(self):
        payload = {"presets": [self._presets[name] for name in sorted(self._presets)]}
        tmp = self._path + ".tmp"
        with open(tmp, "w") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
        os.replace(tmp, self._path)

    def create(self, name, params: DegradationParams, notes=""):
        with self._lock:
            if name in self._presets:
                return None
            record = {
                "name": name,
                "params": params_to_dict(params),
                "seed": params.seed,
                "notes": notes,
                "created_at": datetime.now(timezone.utc).isoformat(),
            }
            self._presets[name] = record
            self._save()
            return record

    def get(self, name):
        with self._lock:
            return self._presets.get(name)

    def list(self):
        with self._lock:
            return [self._presets[name] for name in sorted(self._presets)]

    def delete(self, name):
        with self._lock:
            if name not in self._presets:
                return False
            del self._presets[name]
            self._save()
            return True
