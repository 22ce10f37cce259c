"""Ordered (interval) partitions of label lists.

Particles are numbered by nonzero integers, ``... < -2 < -1 < 1 < 2 < ...``.
Every expansion in the package sums over *compositions* of a label list,
i.e. ordered partitions into contiguous blocks.  A list of ``n`` items has
``2**(n-1)`` of them.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Any, Sequence

Block = tuple
Partition = tuple  # tuple of blocks


def check_index_set(labels: Sequence[int]) -> tuple[int, ...]:
    labels = tuple(int(v) for v in labels)
    if any(v == 0 for v in labels):
        raise ValueError("label 0 is not allowed")
    if any(a >= b for a, b in zip(labels, labels[1:])):
        raise ValueError(f"labels must be strictly increasing: {labels}")
    return labels


def canonical_labels(n1: int, n2: int) -> tuple[int, ...]:
    """Labels ``(-n1, ..., -1, 1, ..., n2)``."""
    if n1 < 0 or n2 < 0:
        raise ValueError("particle counts must be non-negative")
    return tuple(range(-n1, 0)) + tuple(range(1, n2 + 1))


def arity(labels: Sequence[int]) -> tuple[int, int]:
    """Component index ``(#negative, #positive)`` used to evaluate a block."""
    neg = sum(1 for v in labels if v < 0)
    return neg, len(labels) - neg


def successor(label: int) -> int:
    return 1 if label == -1 else label + 1


def compositions(items: Sequence[Any]) -> list[Partition]:
    """All ordered partitions of ``items`` into contiguous non-empty blocks.

    Ordered by number of blocks, then lexicographically by cut positions.
    """
    items = tuple(items)
    n = len(items)
    if n == 0:
        raise ValueError("empty index set")
    out = []
    for k in range(n):
        for cuts in combinations(range(1, n), k):
            bounds = (0,) + cuts + (n,)
            out.append(tuple(items[a:b] for a, b in zip(bounds, bounds[1:])))
    return out


def enumerate_interval_partitions(s: Sequence[int]) -> list[Partition]:
    return compositions(check_index_set(s))


def mobius_sign(p: Partition) -> int:
    return -1 if len(p) % 2 == 0 else 1


def enumerate_two_block_splits(s: Sequence[int]) -> list[tuple[tuple, tuple, tuple[int, int]]]:
    """Splits ``s = X1 + X2`` into a left and a right interval.

    The third entry is the interacting pair ``(max X1, min X2)``.
    """
    s = check_index_set(s)
    return [(s[:k], s[k:], (s[k - 1], s[k])) for k in range(1, len(s))]


@dataclass(frozen=True)
class ClusteredIndexSet:
    """Labels ``left + cluster + right`` where ``cluster`` is one element.

    An empty cluster is allowed only through :meth:`elements` with
    ``allow_empty=True``; it then acts as a marked element carrying no
    particles (used by the observable expansions).
    """

    left: tuple[int, ...]
    cluster: tuple[int, ...]
    right: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "cluster", tuple(self.cluster))
        object.__setattr__(self, "right", tuple(self.right))
        check_index_set(self.flatten())

    def elements(self, allow_empty: bool = False) -> tuple:
        if not self.cluster and not allow_empty:
            raise ValueError("empty cluster")
        return tuple((v,) for v in self.left) + (self.cluster,) + tuple((v,) for v in self.right)

    def flatten(self) -> tuple[int, ...]:
        return self.left + self.cluster + self.right


def declusterize(block: Sequence[tuple[int, ...]]) -> tuple[int, ...]:
    """Flatten a block of elements (each a label tuple) into labels."""
    return tuple(v for el in block for v in el)


def enumerate_clustered_partitions(c: ClusteredIndexSet, allow_empty: bool = False) -> list[Partition]:
    """Compositions of ``c.elements()``; each block is a tuple of elements."""
    return compositions(c.elements(allow_empty=allow_empty))


def partition_to_json(p: Partition) -> list[list[int]]:
    """Blocks as label lists; works for flat and clustered partitions."""
    out = []
    for block in p:
        if block and isinstance(block[0], tuple):
            out.append(list(declusterize(block)))
        else:
            out.append(list(block))
    return out
