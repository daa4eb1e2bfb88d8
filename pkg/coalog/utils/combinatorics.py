"""Small enumeration helpers for finite sets represented by index ranges."""

import itertools

from typing import FrozenSet, Iterable, Iterator, List, Sequence, Tuple, TypeVar


T = TypeVar('T')


def subset_from_mask(mask: int, members: Sequence[T]) -> Tuple[T, ...]:
    """Return the members selected by the bits of mask, in member order."""
    return tuple(member for i, member in enumerate(members) if mask >> i & 1)


def all_subsets(members: Sequence[T]) -> Iterator[Tuple[T, ...]]:
    """Yield every subset of members in bitmask order."""
    for mask in range(1 << len(members)):
        yield subset_from_mask(mask, members)


def all_index_subsets(size: int) -> Iterator[FrozenSet[int]]:
    """Yield every subset of range(size) in bitmask order."""
    for mask in range(1 << size):
        yield frozenset(i for i in range(size) if mask >> i & 1)


def all_functions(dom_size: int, cod_size: int) -> Iterator[Tuple[int, ...]]:
    """Yield every function range(dom_size) -> range(cod_size) as a table, lexicographically."""
    return itertools.product(range(cod_size), repeat=dom_size)


def all_surjections(dom_size: int) -> Iterator[Tuple[int, ...]]:
    """Yield every surjection from range(dom_size) onto an initial segment, one per kernel."""
    def extend(prefix: List[int], blocks: int) -> Iterator[Tuple[int, ...]]:
        if len(prefix) == dom_size:
            yield tuple(prefix)
            return
        for block in range(blocks + 1):
            yield from extend(prefix + [block], max(blocks, block + 1))
    yield from extend([], 0)


def bits(value: int, width: int) -> Tuple[bool, ...]:
    """Return the low width bits of value, least significant first."""
    return tuple(bool(value >> i & 1) for i in range(width))


def from_bits(flags: Iterable[bool]) -> int:
    """Inverse of bits."""
    return sum(1 << i for i, flag in enumerate(flags) if flag)
