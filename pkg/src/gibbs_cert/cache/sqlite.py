from __future__ import annotations

import datetime
import functools
import hashlib
import pickle
import sqlite3
from typing import Any
from typing import Callable

from gibbs_cert.cache.backend import AbstractCacheBackend
from gibbs_cert.cache.backend import CacheBackendDecodeError
from gibbs_cert.cache.backend import CacheBackendEncodeError
from gibbs_cert.cache.backend import get_function_identifier


class SqliteCacheBackend(AbstractCacheBackend[str, bytes]):
    """
    Oracle cache stored in a single SQLite table.

    Rows are keyed by the oracle's qualified name and the SHA-256 digest of its pickled
    arguments, so large models do not bloat the index.

    Args:
    ----
        filename (str): The path to the SQLite database file.

    """

    file_path: str

    def __init__(self, filename: str) -> None:
        self.file_path = filename

    def __save__(self) -> str:
        return self.file_path

    @functools.cached_property
    def connection(self) -> sqlite3.Connection:
        return sqlite3.connect(self.file_path, check_same_thread=False)

    @functools.cached_property
    def cursor(self) -> sqlite3.Cursor:
        connection = self.connection
        cursor = connection.cursor()
        cursor.execute(
            """
            CREATE TABLE IF NOT EXISTS oracle_cache (
                id INTEGER PRIMARY KEY,
                function TEXT,
                digest TEXT,
                result BLOB,
                timestamp TIMESTAMP DEFAULT (strftime('%Y-%m-%d %H:%M:%S', 'now', 'localtime'))
            )
        """
        )
        connection.commit()
        return cursor

    def hash_key(
        self, *, func: Callable[..., Any], args: tuple[Any, ...], kwargs: dict[str, Any]
    ) -> tuple[str, str]:
        payload = pickle.dumps((args, sorted(kwargs.items())))
        return (get_function_identifier(func), hashlib.sha256(payload).hexdigest())

    def encode(self, *, data: Any) -> bytes:  # noqa: ANN401
        try:
            return pickle.dumps(data)
        except (pickle.PickleError, TypeError, AttributeError) as e:
            raise CacheBackendEncodeError(e) from None

    def decode(self, *, data: bytes) -> Any:  # noqa: ANN401
        try:
            return pickle.loads(data)  # noqa: S301
        except (pickle.PickleError, TypeError, AttributeError, EOFError) as e:
            raise CacheBackendDecodeError(e) from None

    def get(self, *, key: tuple[str, str]) -> tuple[datetime.datetime, bytes] | None:
        func_key, digest = key
        self.cursor.execute(
            "SELECT result, timestamp FROM oracle_cache WHERE function = ? AND digest = ?",
            (func_key, digest),
        )
        cached_result = self.cursor.fetchone()
        if not cached_result:
            return None

        pickled_result, timestamp = cached_result
        cached_time = datetime.datetime.strptime(  # noqa: DTZ007
            timestamp,
            "%Y-%m-%d %H:%M:%S",
        )
        return cached_time, pickled_result

    def delete(self, *, key: tuple[str, str]) -> None:
        func_key, digest = key
        self.cursor.execute(
            "DELETE FROM oracle_cache WHERE function = ? AND digest = ?",
            (func_key, digest),
        )
        self.connection.commit()

    def put(self, *, key: tuple[str, str], data: bytes) -> None:
        func_key, digest = key
        self.cursor.execute(
            "INSERT INTO oracle_cache (function, digest, result) VALUES (?, ?, ?)",
            (func_key, digest, data),
        )
        self.connection.commit()

    def del_func_cache(self, *, func: Callable[..., Any]) -> None:
        self.cursor.execute(
            "DELETE FROM oracle_cache WHERE function = ?",
            (get_function_identifier(func),),
        )
        self.connection.commit()
