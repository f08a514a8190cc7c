"""
File cache for finished quadtrees.

Trees are stored as ``tree_<key>.json`` where the key is the SHA-256 of the
canonical JSON of everything that determines the build (classifier identity,
bounds, min cell, sampling parameters). Writers take a lock file in the
cache directory; a stale lock older than ``stale_after`` seconds is broken.
"""

import hashlib
import json
import logging
import os
import time
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterator, Optional, Union

from mvkit.decomposition.quadtree import Quadtree
from mvkit.errors import CacheLockError, ConfigError

logger = logging.getLogger(__name__)

LOCK_NAME = ".lock"
LOCK_TIMEOUT = 30.0
STALE_LOCK_SECONDS = 600.0


def cache_key(params: dict) -> str:
    """SHA-256 of the canonical (sorted, compact) JSON of ``params``."""
    canonical = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class QuadtreeCache:
    """Content-addressed store of serialized quadtrees in one directory."""

    def __init__(self, directory: Union[str, Path], lock_timeout: float = LOCK_TIMEOUT,
                 stale_after: float = STALE_LOCK_SECONDS):
        self.directory = Path(directory)
        self.lock_timeout = lock_timeout
        self.stale_after = stale_after

    def path_for(self, key: str) -> Path:
        return self.directory / f"tree_{key}.json"

    def load(self, key: str) -> Optional[Quadtree]:
        """Cached tree for ``key``, or None (unreadable entries count as misses)."""
        path = self.path_for(key)
        if not path.exists():
            logger.debug("cache miss %s", key[:12])
            return None
        try:
            tree = Quadtree.load(path)
        except ConfigError as exc:
            logger.warning("discarding unreadable cache entry %s: %s", path, exc)
            path.unlink(missing_ok=True)
            return None
        logger.debug("cache hit %s", key[:12])
        return tree

    @contextmanager
    def lock(self) -> Iterator[Path]:
        """
        Hold the directory lock.

        Raises:
            CacheLockError: If the lock stays held past ``lock_timeout``
        """
        self.directory.mkdir(parents=True, exist_ok=True)
        lock_path = self.directory / LOCK_NAME
        deadline = time.monotonic() + self.lock_timeout
        while True:
            try:
                fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                break
            except FileExistsError:
                self._break_stale(lock_path)
                if time.monotonic() >= deadline:
                    raise CacheLockError(f"cache directory {self.directory} is locked ({lock_path})")
                time.sleep(0.05)
        try:
            os.write(fd, str(os.getpid()).encode("ascii"))
            os.close(fd)
            yield lock_path
        finally:
            lock_path.unlink(missing_ok=True)

    def _break_stale(self, lock_path: Path) -> None:
        try:
            age = datetime.now().timestamp() - lock_path.stat().st_mtime
        except FileNotFoundError:
            return
        if age > self.stale_after:
            logger.warning("removing stale cache lock %s (%.0fs old)", lock_path, age)
            lock_path.unlink(missing_ok=True)

    def save(self, key: str, tree: Quadtree) -> Path:
        """Write ``tree`` under ``key``; the file appears atomically."""
        with self.lock():
            path = self.path_for(key)
            tmp = path.with_suffix(".tmp")
            tree.save(tmp)
            os.replace(tmp, path)
        logger.debug("cached %s", path.name)
        return path

    def get_or_build(self, key: str, build: Callable[[], Quadtree]) -> Quadtree:
        tree = self.load(key)
        if tree is None:
            tree = build()
            self.save(key, tree)
        return tree

    def cleanup(self, max_age_seconds: float = 30 * 86400) -> int:
        """Remove cached trees older than ``max_age_seconds``; returns the count."""
        if not self.directory.exists():
            return 0
        removed = 0
        now = datetime.now().timestamp()
        for path in self.directory.glob("tree_*.json"):
            if now - path.stat().st_mtime > max_age_seconds:
                path.unlink(missing_ok=True)
                removed += 1
        return removed
