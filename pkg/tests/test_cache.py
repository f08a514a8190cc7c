import logging
import os
import time

import pytest

from mvkit.decomposition.labels import CellLabel, Space
from mvkit.decomposition.quadtree import Bounds, Quadtree
from mvkit.errors import CacheLockError
from mvkit.kinematics import WorkingMode
from mvkit.utils.cache import QuadtreeCache, cache_key
from mvkit.utils.logging_setup import configure_logging


def _tree():
    leaves = {"0": CellLabel.FREE, "1": CellLabel.UNREACHABLE, "2": CellLabel.COLLISION,
              "30": CellLabel.FREE, "31": CellLabel.SERIAL_SINGULAR, "32": CellLabel.FREE, "33": CellLabel.FREE}
    return Quadtree(Space.W, Bounds(0.0, 0.0, 4.0), 1.0, WorkingMode.MF3, 1, leaves=leaves,
                    conservative=frozenset({"31"}))


def test_key_ignores_dict_order():
    first = cache_key({"space": "w", "min_cell": 0.1, "mode": 2})
    second = cache_key({"mode": 2, "space": "w", "min_cell": 0.1})
    assert first == second
    assert len(first) == 64
    assert cache_key({"space": "w", "min_cell": 0.2, "mode": 2}) != first


def test_save_and_load(tmp_path):
    cache = QuadtreeCache(tmp_path / "cache")
    key = cache_key({"k": 1})
    assert cache.load(key) is None
    path = cache.save(key, _tree())
    assert path.name == f"tree_{key}.json"
    assert cache.load(key) == _tree()
    assert not (tmp_path / "cache" / ".lock").exists()


def test_corrupt_entry_is_discarded(tmp_path):
    cache = QuadtreeCache(tmp_path)
    key = cache_key({"k": 2})
    cache.path_for(key).write_text("{not json")
    assert cache.load(key) is None
    assert not cache.path_for(key).exists()


def test_get_or_build_builds_once(tmp_path):
    cache = QuadtreeCache(tmp_path)
    calls = []

    def build():
        calls.append(1)
        return _tree()

    key = cache_key({"k": 3})
    assert cache.get_or_build(key, build) == _tree()
    assert cache.get_or_build(key, build) == _tree()
    assert len(calls) == 1


def test_held_lock_times_out(tmp_path):
    cache = QuadtreeCache(tmp_path, lock_timeout=0.1)
    with cache.lock():
        with pytest.raises(CacheLockError):
            with cache.lock():
                pass


def test_stale_lock_is_broken(tmp_path):
    cache = QuadtreeCache(tmp_path, lock_timeout=1.0, stale_after=60.0)
    lock = tmp_path / ".lock"
    lock.write_text("12345")
    old = time.time() - 3600
    os.utime(lock, (old, old))
    with cache.lock() as held:
        assert held == lock
    assert not lock.exists()


def test_cleanup_removes_old_trees(tmp_path):
    cache = QuadtreeCache(tmp_path)
    old_path = cache.save(cache_key({"k": "old"}), _tree())
    new_path = cache.save(cache_key({"k": "new"}), _tree())
    old = time.time() - 40 * 86400
    os.utime(old_path, (old, old))
    assert cache.cleanup() == 1
    assert not old_path.exists() and new_path.exists()
    assert QuadtreeCache(tmp_path / "absent").cleanup() == 0


def test_configure_logging_replaces_its_handler():
    logger = configure_logging("debug")
    configure_logging(logging.WARNING)
    ours = [h for h in logger.handlers if getattr(h, "_mvkit_handler", False)]
    assert len(ours) == 1
    assert logger.level == logging.WARNING
    assert configure_logging("nonsense").level == logging.INFO
