from __future__ import annotations

from gibbs_cert.cache.backend import CacheBackend
from gibbs_cert.cache.decorators import configure_cache
from gibbs_cert.cache.decorators import oracle_cache
from gibbs_cert.cache.sqlite import SqliteCacheBackend

__all__ = ["CacheBackend", "SqliteCacheBackend", "configure_cache", "oracle_cache"]
