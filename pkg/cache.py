"""
Caching
In-process LRU memoization for recurring numerical values and an on-disk store for catalog queries.
"""

import json
import hashlib
import functools
import threading
import logging
from typing import Any, Dict, List, Optional, Callable
from datetime import datetime
from dataclasses import dataclass, field
from collections import OrderedDict
from pathlib import Path

import mpmath


@dataclass
class CacheStats:
    """Cache statistics for monitoring"""
    hits: int = 0
    misses: int = 0
    evictions: int = 0
    entry_count: int = 0

    @property
    def hit_rate(self) -> float:
        """Calculate cache hit rate"""
        total = self.hits + self.misses
        return self.hits / total if total > 0 else 0.0

    def reset(self):
        """Reset all statistics"""
        self.hits = 0
        self.misses = 0
        self.evictions = 0
        self.entry_count = 0


@dataclass
class CacheEntry:
    """Cache entry with metadata"""
    key: str
    value: Any
    timestamp: datetime = field(default_factory=datetime.now)
    access_count: int = 0

    def update_access(self):
        """Update access statistics"""
        self.access_count += 1


class LRUCache:
    """Thread-safe LRU cache"""

    def __init__(self, max_size: int = 4096, name: str = "default"):
        self.max_size = max_size
        self.name = name

        self._cache: "OrderedDict[str, CacheEntry]" = OrderedDict()
        self._lock = threading.RLock()
        self._stats = CacheStats()

        self.logger = logging.getLogger(f"{__name__}.LRUCache")

    def get(self, key: str, default: Any = None) -> Any:
        """Get value from cache"""
        with self._lock:
            entry = self._cache.get(key)
            if entry is None:
                self._stats.misses += 1
                return default

            entry.update_access()
            self._cache.move_to_end(key)
            self._stats.hits += 1
            return entry.value

    def set(self, key: str, value: Any) -> bool:
        """Set value in cache"""
        with self._lock:
            self._cache[key] = CacheEntry(key=key, value=value)
            self._cache.move_to_end(key)

            while len(self._cache) > self.max_size:
                self._cache.popitem(last=False)
                self._stats.evictions += 1

            self._stats.entry_count = len(self._cache)
            return True

    def contains(self, key: str) -> bool:
        """Check if key exists"""
        with self._lock:
            return key in self._cache

    def delete(self, key: str) -> bool:
        """Delete key from cache"""
        with self._lock:
            if key in self._cache:
                del self._cache[key]
                self._stats.entry_count = len(self._cache)
                return True
            return False

    def clear(self):
        """Clear all cache entries"""
        with self._lock:
            self._cache.clear()
            self._stats.reset()

    def get_keys(self) -> List[str]:
        """Get all cache keys, least recently used first"""
        with self._lock:
            return list(self._cache.keys())

    def get_stats(self) -> Dict[str, Any]:
        """Get cache statistics"""
        with self._lock:
            return {
                'name': self.name,
                'hits': self._stats.hits,
                'misses': self._stats.misses,
                'hit_rate': self._stats.hit_rate,
                'evictions': self._stats.evictions,
                'entry_count': self._stats.entry_count,
                'max_size': self.max_size,
            }


def make_key(*parts: Any) -> str:
    """Stable digest of the arguments and the active mpmath precision"""
    key_parts = [f"dps={mpmath.mp.dps}"]
    key_parts.extend(repr(part) for part in parts)
    return hashlib.sha256('|'.join(key_parts).encode()).hexdigest()


def memoize(cache: LRUCache, key_func: Optional[Callable] = None):
    """Decorator caching function results in an LRUCache.

    Keys include the working precision, so a value computed at 30 digits is
    never served to a 50-digit caller.
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            if key_func:
                cache_key = make_key(func.__name__, key_func(*args, **kwargs))
            else:
                cache_key = make_key(func.__name__, args, sorted(kwargs.items()))

            result = cache.get(cache_key)
            if result is not None:
                return result

            result = func(*args, **kwargs)
            cache.set(cache_key, result)
            return result

        wrapper.cache = cache
        return wrapper
    return decorator


class DiskCache:
    """JSON-lines store keyed by the digest of a normalized query"""

    def __init__(self, cache_dir: str):
        self.cache_dir = Path(cache_dir)
        self._lock = threading.RLock()
        self._stats = CacheStats()
        self.logger = logging.getLogger(f"{__name__}.DiskCache")

    @staticmethod
    def query_digest(query: Dict[str, Any]) -> str:
        """SHA-256 digest of a query with sorted keys"""
        normalized = json.dumps(query, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(normalized.encode()).hexdigest()

    def path_for(self, query: Dict[str, Any]) -> Path:
        return self.cache_dir / f"{self.query_digest(query)}.jsonl"

    def contains(self, query: Dict[str, Any]) -> bool:
        return self.path_for(query).exists()

    def get(self, query: Dict[str, Any]) -> Optional[List[Dict[str, Any]]]:
        """Records stored for the query, or None on a miss"""
        path = self.path_for(query)
        with self._lock:
            if not path.exists():
                self._stats.misses += 1
                return None

            records = []
            with open(path, 'r') as f:
                for line in f:
                    line = line.strip()
                    if line:
                        records.append(json.loads(line))

            self._stats.hits += 1
            self.logger.debug(f"Disk cache hit for {path.name}: {len(records)} records")
            return records

    def set(self, query: Dict[str, Any], records: List[Dict[str, Any]]):
        """Persist records atomically"""
        path = self.path_for(query)
        with self._lock:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            tmp_path = path.with_suffix('.tmp')
            with open(tmp_path, 'w') as f:
                for record in records:
                    f.write(json.dumps(record, sort_keys=True) + '\n')
            tmp_path.replace(path)
            self._stats.entry_count = len(list(self.cache_dir.glob('*.jsonl')))
            self.logger.info(f"Cached {len(records)} records under {path.name}")

    def clear(self):
        """Remove every cached query"""
        with self._lock:
            if self.cache_dir.exists():
                for path in self.cache_dir.glob('*.jsonl'):
                    path.unlink()
            self._stats.reset()

    def get_stats(self) -> Dict[str, Any]:
        with self._lock:
            return {
                'cache_dir': str(self.cache_dir),
                'hits': self._stats.hits,
                'misses': self._stats.misses,
                'hit_rate': self._stats.hit_rate,
                'entry_count': self._stats.entry_count,
            }


# Shared caches for values that recur across checks
dirichlet_cache = LRUCache(max_size=20000, name="dirichlet")
transform_cache = LRUCache(max_size=20000, name="transform")
sym2_cache = LRUCache(max_size=4096, name="sym2")
