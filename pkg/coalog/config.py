"""Enumeration resource limit shared by every module that materialises finite sets."""

from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator

from coalog.errors import ResourceLimit


DEFAULT_LIMIT = 2 ** 20

_limit: ContextVar[int] = ContextVar('coalog_resource_limit', default=DEFAULT_LIMIT)


def get_limit() -> int:
    return _limit.get()


def set_limit(limit: int) -> None:
    if limit < 1:
        raise ValueError(f'Resource limit must be positive, got {limit}')
    _limit.set(limit)


@contextmanager
def resource_limit(limit: int) -> Iterator[int]:
    if limit < 1:
        raise ValueError(f'Resource limit must be positive, got {limit}')
    token = _limit.set(limit)
    try:
        yield limit
    finally:
        _limit.reset(token)


def check_cardinality(cardinality: int, what: str) -> int:
    limit = _limit.get()
    if cardinality > limit:
        raise ResourceLimit(what, cardinality, limit)
    return cardinality
