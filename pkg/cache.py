"""
Context Cache for kaehler
==========================
In-process LRU cache for constructions that need a Gröbner basis: ellipsoid
rings, Kähler modules, jet rings and jet tensor rings. Cached values are
immutable, so handing the same object to several callers is safe.
"""

import os
import json
import hashlib
import logging
import threading
from collections import OrderedDict
from typing import Any, Callable, Dict, Optional

from observability import record_cache_hit, record_cache_miss

logger = logging.getLogger("cache")

CACHE_SIZE = int(os.getenv("KAEHLER_CACHE_SIZE", 64))

# Kinds that may be cached; anything else passes straight through.
CACHE_KINDS = {
    "ellipsoid_ring",
    "kaehler_module",
    "jet_ring",
    "jet_tensor_ring",
}

_store: "OrderedDict[str, Any]" = OrderedDict()
_lock = threading.RLock()
_build_locks: Dict[str, threading.Lock] = {}


def _drop_build_lock(key: str) -> None:
    """Forget the build lock of a key that left the store. Caller holds _lock."""
    key_lock = _build_locks.get(key)
    if key_lock is not None and not key_lock.locked():
        del _build_locks[key]


def _make_key(kind: str, params: dict) -> str:
    """Create a deterministic cache key from kind and params."""
    param_str = json.dumps(params, sort_keys=True, default=str)
    param_hash = hashlib.md5(param_str.encode()).hexdigest()[:12]
    return f"kh:{kind}:{param_hash}"


def get_cached(kind: str, params: dict) -> Optional[Any]:
    """Return the cached value or None."""
    if kind not in CACHE_KINDS:
        return None
    key = _make_key(kind, params)
    with _lock:
        if key in _store:
            _store.move_to_end(key)
            record_cache_hit(kind)
            logger.debug("Cache HIT: %s", key)
            return _store[key]
    record_cache_miss(kind)
    logger.debug("Cache MISS: %s", key)
    return None


def set_cached(kind: str, params: dict, value: Any) -> None:
    """Store a value, evicting the least recently used entry when full."""
    if kind not in CACHE_KINDS or CACHE_SIZE <= 0:
        return
    key = _make_key(kind, params)
    with _lock:
        _store[key] = value
        _store.move_to_end(key)
        while len(_store) > CACHE_SIZE:
            evicted, _ = _store.popitem(last=False)
            _drop_build_lock(evicted)
            logger.debug("Cache EVICT: %s", evicted)


def cached(kind: str, params: dict, build: Callable[[], Any]) -> Any:
    """get_cached, falling back to build() and storing the result.

    Concurrent callers asking for the same key wait for one build, so they
    all receive the same object.
    """
    value = get_cached(kind, params)
    if value is not None:
        return value
    key = _make_key(kind, params)
    with _lock:
        key_lock = _build_locks.setdefault(key, threading.Lock())
    with key_lock:
        with _lock:
            value = _store.get(key)
        if value is None:
            value = build()
            set_cached(kind, params, value)
    with _lock:
        if key not in _store:
            _drop_build_lock(key)
    return value


def invalidate(kind: str, params: dict) -> None:
    """Remove a specific cache entry."""
    key = _make_key(kind, params)
    with _lock:
        _store.pop(key, None)
        _drop_build_lock(key)


def flush_all() -> None:
    """Drop every cached construction."""
    with _lock:
        count = len(_store)
        _store.clear()
        for key in [k for k, lock in _build_locks.items() if not lock.locked()]:
            del _build_locks[key]
    if count:
        logger.info("Flushed %d cache entries", count)


def cache_size() -> int:
    """Number of constructions currently held."""
    with _lock:
        return len(_store)
