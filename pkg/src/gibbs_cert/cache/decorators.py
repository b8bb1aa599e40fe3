from __future__ import annotations

import datetime
import functools
import os
from typing import Callable
from typing import Generic
from typing import TYPE_CHECKING

from gibbs_cert.cache.backend import CacheBackend
from gibbs_cert.cache.backend import NO_CACHE_VARIABLE
from gibbs_cert.cache.sqlite import SqliteCacheBackend
from typing_extensions import ParamSpec
from typing_extensions import TypedDict
from typing_extensions import TypeVar
from typing_extensions import Unpack


if TYPE_CHECKING:

    class _CacheDuration(TypedDict, total=False):
        days: float
        seconds: float
        minutes: float
        hours: float
        weeks: float


CACHE_DIR_VARIABLE = "GIBBS_CERT_CACHE_DIR"
CACHE_FILE_NAME = "oracles.sqlite"
DEFAULT_CACHE_DURATION: _CacheDuration = {"days": 30}

_P = ParamSpec("_P")
_R = TypeVar("_R")

_configured_directory: str | None = None


def configure_cache(directory: str | None) -> None:
    """
    Enable (or with ``None`` fall back to ``GIBBS_CERT_CACHE_DIR`` for) the oracle cache.

    Args:
    ----
        directory: Folder that receives ``oracles.sqlite``. Created on first use.

    """
    global _configured_directory  # noqa: PLW0603
    _configured_directory = directory


@functools.lru_cache(maxsize=None)
def _backend_for(directory: str) -> SqliteCacheBackend:
    os.makedirs(directory, exist_ok=True)
    return SqliteCacheBackend(os.path.join(directory, CACHE_FILE_NAME))


def active_backend() -> CacheBackend | None:
    directory = _configured_directory or os.environ.get(CACHE_DIR_VARIABLE)
    if not directory:
        return None
    return _backend_for(os.path.abspath(directory))


class _PersistentCache(Generic[_P, _R]):
    """
    Persist the results of a pure, expensive oracle across runs.

    Args:
    ----
        func (Callable[_P, _R]): The oracle to be decorated.
        duration (datetime.timedelta): How long a stored result stays valid.
        backend (CacheBackend | None): Fixed store; ``None`` follows the configured directory.

    """

    __wrapped__: Callable[_P, _R]
    __duration__: datetime.timedelta
    __backend__: CacheBackend | None

    def __init__(
        self,
        func: Callable[_P, _R],
        duration: datetime.timedelta,
        backend: CacheBackend | None,
    ) -> None:
        self.__wrapped__ = func
        self.__duration__ = duration
        self.__backend__ = backend
        functools.update_wrapper(self, func)

    def _backend(self) -> CacheBackend | None:
        return self.__backend__ if self.__backend__ is not None else active_backend()

    def cache_clear(self) -> None:
        """Clears the stored results of the wrapped oracle."""
        backend = self._backend()
        if backend is not None:
            backend.del_func_cache(func=self.__wrapped__)

    def no_cache_call(self, *args: _P.args, **kwargs: _P.kwargs) -> _R:
        """Calls the wrapped oracle without touching the cache."""
        return self.__wrapped__(*args, **kwargs)

    def __call__(self, *args: _P.args, **kwargs: _P.kwargs) -> _R:
        backend = self._backend()
        if backend is None or NO_CACHE_VARIABLE in os.environ:
            return self.__wrapped__(*args, **kwargs)
        return backend.get_cache_or_call(  # type: ignore[no-any-return]
            func=self.__wrapped__,
            args=args,
            kwargs=kwargs,
            lifespan=self.__duration__,
        )


def oracle_cache(
    *,
    backend: CacheBackend | None = None,
    **duration: Unpack[_CacheDuration],
) -> Callable[[Callable[_P, _R]], _PersistentCache[_P, _R]]:
    """
    Decorator that persists oracle results when a cache directory is configured.

    Args:
    ----
        backend: Fixed cache backend. By default the SQLite store in the configured directory.
        duration: How long results stay valid. Default is 30 days.

    Returns:
    -------
        A decorator that can be applied to an oracle function.

    """
    duration = duration or DEFAULT_CACHE_DURATION
    lifespan = datetime.timedelta(**duration)

    def inner(func: Callable[_P, _R]) -> _PersistentCache[_P, _R]:
        return _PersistentCache(func=func, duration=lifespan, backend=backend)

    return inner
