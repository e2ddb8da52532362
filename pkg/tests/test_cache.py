"""
Context Cache Tests
===================
Build-once semantics, LRU eviction, build-lock cleanup and the cache kinds
used by the jet rings.

Run:  pytest tests/test_cache.py -v
"""

import threading
from collections import OrderedDict

import pytest


@pytest.fixture
def empty_cache(monkeypatch):
    """A private store so eviction tests leave the session rings alone."""
    import cache
    monkeypatch.setattr(cache, "_store", OrderedDict())
    monkeypatch.setattr(cache, "_build_locks", {})
    return cache


# =====================================================
# 1. BUILD ONCE (unit)
# =====================================================

class TestContextCache:

    def test_unit_cached_builds_once(self):
        from cache import cached, invalidate
        params = {"case": "builds-once"}
        calls = []
        first = cached("jet_ring", params, lambda: calls.append(1) or object())
        second = cached("jet_ring", params, lambda: calls.append(1) or object())
        assert first is second
        assert len(calls) == 1
        invalidate("jet_ring", params)

    def test_unit_unknown_kind_not_stored(self):
        from cache import cached, get_cached
        value = cached("scratch", {"a": 1}, lambda: [1])
        assert value == [1]
        assert get_cached("scratch", {"a": 1}) is None

    def test_unit_invalidate(self):
        from cache import get_cached, invalidate, set_cached
        params = {"case": "invalidate"}
        set_cached("kaehler_module", params, "value")
        assert get_cached("kaehler_module", params) == "value"
        invalidate("kaehler_module", params)
        assert get_cached("kaehler_module", params) is None

    def test_unit_concurrent_callers_share_one_build(self):
        from cache import cached, invalidate
        params = {"case": "concurrent"}
        calls = []
        gate = threading.Event()
        results = []

        def build():
            calls.append(1)
            gate.wait(1.0)
            return object()

        def worker():
            results.append(cached("ellipsoid_ring", params, build))

        threads = [threading.Thread(target=worker) for _ in range(4)]
        for t in threads:
            t.start()
        gate.set()
        for t in threads:
            t.join()
        assert len(calls) == 1, f"build ran {len(calls)} times"
        assert all(r is results[0] for r in results)
        invalidate("ellipsoid_ring", params)

    def test_unit_keys_are_deterministic(self):
        from cache import _make_key
        assert _make_key("jet_ring", {"a": 1, "b": [1, 2]}) == _make_key("jet_ring", {"b": [1, 2], "a": 1})
        assert _make_key("jet_ring", {"a": 1}) != _make_key("kaehler_module", {"a": 1})


# =====================================================
# 2. EVICTION AND LOCKS (unit)
# =====================================================

class TestEviction:

    def test_unit_lru_evicts_oldest(self, empty_cache, monkeypatch):
        monkeypatch.setattr(empty_cache, "CACHE_SIZE", 2)
        for i in range(3):
            empty_cache.cached("jet_ring", {"i": i}, lambda: object())
        assert empty_cache.cache_size() == 2
        assert empty_cache.get_cached("jet_ring", {"i": 0}) is None

    def test_unit_build_locks_follow_the_store(self, empty_cache, monkeypatch):
        monkeypatch.setattr(empty_cache, "CACHE_SIZE", 2)
        for i in range(10):
            empty_cache.cached("jet_ring", {"i": i}, lambda: object())
        assert set(empty_cache._build_locks) <= set(empty_cache._store)
        assert len(empty_cache._build_locks) <= 2

    def test_unit_uncached_kind_leaves_no_lock(self, empty_cache):
        empty_cache.cached("scratch", {"a": 1}, lambda: [1])
        assert empty_cache._build_locks == {}

    def test_unit_invalidate_drops_lock(self, empty_cache):
        empty_cache.cached("kaehler_module", {"a": 1}, lambda: object())
        empty_cache.invalidate("kaehler_module", {"a": 1})
        assert empty_cache._build_locks == {}

    def test_unit_flush_all(self, empty_cache):
        for i in range(3):
            empty_cache.cached("ellipsoid_ring", {"i": i}, lambda: object())
        assert empty_cache.cache_size() == 3
        empty_cache.flush_all()
        assert empty_cache.cache_size() == 0
        assert empty_cache._build_locks == {}


# =====================================================
# 3. JET RING KINDS (unit)
# =====================================================

class TestJetRingKinds:

    def test_unit_tensor_rings_have_their_own_kind(self, sphere):
        from cache import get_cached
        from jets import build_jet_tensor_ring
        tensor = build_jet_tensor_ring(sphere, (1, 1))
        params = {"exponents": list(sphere.exponents), "orders": [1, 1], "ring": id(sphere)}
        assert get_cached("jet_tensor_ring", params) is tensor
        assert get_cached("jet_ring", params) is None

    def test_unit_single_order_stays_a_jet_ring(self, sphere):
        from cache import get_cached
        from jets import build_jet_ring
        p1 = build_jet_ring(sphere, 1)
        params = {"exponents": list(sphere.exponents), "orders": [1], "ring": id(sphere)}
        assert get_cached("jet_ring", params) is p1
