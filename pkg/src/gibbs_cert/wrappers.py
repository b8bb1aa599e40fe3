from __future__ import annotations

import functools
from functools import _CacheInfo
from functools import _lru_cache_wrapper
from functools import lru_cache as _lru_cache
from typing import Any
from typing import Callable
from typing import Generic
from typing import TypeVar

import numpy as np
from typing_extensions import ParamSpec

_R = TypeVar("_R")
_P = ParamSpec("_P")


def _freeze(value: Any) -> Any:  # noqa: ANN401
    if isinstance(value, np.ndarray):
        value.setflags(write=False)
    elif isinstance(value, tuple):
        for item in value:
            _freeze(item)
    return value


class _FrozenLRUCache(Generic[_P, _R]):
    """An ``lru_cache`` whose cached numpy arrays (also inside tuples) are read-only."""

    __wrapped__: Callable[_P, _R]
    __wrapped_lru_func__: _lru_cache_wrapper[_R]

    def __init__(self, *, func: Callable[_P, _R], maxsize: int | None = 128) -> None:
        self.__wrapped__ = func

        def frozen(*args: _P.args, **kwargs: _P.kwargs) -> _R:
            return _freeze(func(*args, **kwargs))  # type: ignore[no-any-return]

        self.__wrapped_lru_func__ = _lru_cache(maxsize=maxsize)(frozen)
        functools.update_wrapper(self, func)

    def cache_info(self) -> _CacheInfo:
        return self.__wrapped_lru_func__.cache_info()

    def cache_clear(self) -> None:
        return self.__wrapped_lru_func__.cache_clear()

    def __call__(self, *args: _P.args, **kwargs: _P.kwargs) -> _R:
        return self.__wrapped_lru_func__(*args, **kwargs)  # type: ignore

    def no_cache_call(self, *args: _P.args, **kwargs: _P.kwargs) -> _R:
        """Calls the wrapped function without using the cache (result stays writable)."""
        return self.__wrapped__(*args, **kwargs)


def frozen_lru_cache(
    *, maxsize: int | None = 128
) -> Callable[[Callable[_P, _R]], _FrozenLRUCache[_P, _R]]:
    return lambda func: _FrozenLRUCache(func=func, maxsize=maxsize)
