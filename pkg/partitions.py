#!/usr/bin/env python3
"""
Integer partitions and set partitions

Every vector and matrix in the engine is indexed by the partitions of an
order r, listed in one frozen canonical order. Set partitions carry the
Moebius and coincidence computations behind the Carver function.
"""
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from typing import Dict, Iterator, List, Optional, Tuple

from more_itertools import set_partitions

from config import Config
from exceptions import DomainError

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r'^(\d+)(?:\^(\d+))?$')


@dataclass(frozen=True)
class Partition:
    """Multiset of positive integers, parts stored ascending"""

    parts: Tuple[int, ...]

    def __post_init__(self):
        parts = tuple(sorted(int(p) for p in self.parts))
        if not parts:
            raise DomainError("a partition needs at least one part")
        if parts[0] <= 0:
            raise DomainError(f"partition parts must be positive, got {parts}")
        object.__setattr__(self, 'parts', parts)

    @classmethod
    def of(cls, *parts: int) -> 'Partition':
        return cls(tuple(parts))

    @classmethod
    def parse(cls, text: str) -> 'Partition':
        """Read "1^2 2", "1 1 2", "1,1,2" or the compact digit form "112"."""
        cleaned = text.strip().strip('()').replace(',', ' ')
        if not cleaned:
            raise DomainError(f"empty partition text: {text!r}")

        tokens = cleaned.split()
        if len(tokens) == 1 and cleaned.isdigit() and len(cleaned) > 1:
            tokens = list(cleaned)

        parts: List[int] = []
        for token in tokens:
            match = _TOKEN.match(token)
            if not match:
                raise DomainError(f"cannot read partition token {token!r} in {text!r}")
            multiplicity = int(match.group(2)) if match.group(2) else 1
            parts.extend([int(match.group(1))] * multiplicity)
        return cls(tuple(parts))

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def parts_count(self) -> int:
        return len(self.parts)

    @property
    def unit_count(self) -> int:
        return self.parts.count(1)

    @property
    def has_units(self) -> bool:
        return self.parts[0] == 1

    @property
    def core(self) -> Optional['Partition']:
        """Parts above one, or None when every part is a unit."""
        rest = tuple(p for p in self.parts if p > 1)
        return Partition(rest) if rest else None

    def multiplicities(self) -> Dict[int, int]:
        return dict(Counter(self.parts))

    def with_units(self, count: int) -> 'Partition':
        return Partition(self.parts + (1,) * count)

    def join(self, other: 'Partition') -> 'Partition':
        return Partition(self.parts + other.parts)

    def sort_key(self) -> Tuple:
        return (self.parts_count, tuple(-p for p in reversed(self.parts)))

    def __str__(self) -> str:
        chunks = []
        for part, count in sorted(Counter(self.parts).items()):
            chunks.append(f"{part}^{count}" if count > 1 else str(part))
        return ' '.join(chunks)

    def __repr__(self) -> str:
        return f"Partition({str(self)!r})"


def join_all(parts: Iterator[Partition]) -> Optional[Partition]:
    """Multiset union of several partitions; None for an empty product."""
    collected: List[int] = []
    for p in parts:
        collected.extend(p.parts)
    return Partition(tuple(collected)) if collected else None


@dataclass(frozen=True)
class SetPartition:
    """Blocks of {1..r}, sorted by least element"""

    blocks: Tuple[Tuple[int, ...], ...]
    size: int = field(default=0)

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0]))
        if any(not b for b in blocks):
            raise DomainError("set partition blocks must be nonempty")
        members = [i for b in blocks for i in b]
        size = self.size or len(members)
        if sorted(members) != list(range(1, size + 1)):
            raise DomainError(f"blocks {blocks} do not partition 1..{size}")
        object.__setattr__(self, 'blocks', blocks)
        object.__setattr__(self, 'size', size)

    def shape(self) -> Partition:
        return Partition(tuple(len(b) for b in self.blocks))

    def __len__(self) -> int:
        return len(self.blocks)


class PartitionOrder:
    """All partitions of r in canonical matrix order"""

    def __init__(self, r: int, partitions: List[Partition]):
        self.r = r
        self.partitions: Tuple[Partition, ...] = tuple(partitions)
        self._index = {p: i for i, p in enumerate(self.partitions)}

    def __len__(self) -> int:
        return len(self.partitions)

    def __iter__(self):
        return iter(self.partitions)

    def __getitem__(self, i: int) -> Partition:
        return self.partitions[i]

    def __contains__(self, p: Partition) -> bool:
        return p in self._index

    def index(self, p: Partition) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise DomainError(f"partition {p} is not a partition of {self.r}")

    def labels(self) -> List[str]:
        return [str(p) for p in self.partitions]

    def minus(self) -> List[Partition]:
        return [p for p in self.partitions if not p.has_units]

    def plus(self) -> List[Partition]:
        return [p for p in self.partitions if p.has_units]


def _descending(remaining: int, largest: int) -> Iterator[Tuple[int, ...]]:
    if remaining == 0:
        yield ()
        return
    for part in range(min(remaining, largest), 0, -1):
        for rest in _descending(remaining - part, part):
            yield (part,) + rest


@lru_cache(maxsize=None)
def enumerate_partitions(r: int) -> PartitionOrder:
    """All partitions of r in canonical order."""
    if r < 1 or r > Config.PARTITION_CAP:
        raise DomainError(f"order r={r} outside 1..{Config.PARTITION_CAP}")
    found = [Partition(p) for p in _descending(r, r)]
    found.sort(key=Partition.sort_key)
    return PartitionOrder(r, found)


def partition_function(pi: Partition) -> int:
    """Number of ways to split r labelled items into blocks of sizes pi."""
    denominator = 1
    for part, count in pi.multiplicities().items():
        denominator *= factorial(part) ** count * factorial(count)
    return factorial(pi.weight) // denominator


@lru_cache(maxsize=None)
def _set_partitions_cached(r: int) -> Tuple[SetPartition, ...]:
    found = [SetPartition(tuple(tuple(b) for b in blocks), r)
             for blocks in set_partitions(range(1, r + 1))]
    found.sort(key=lambda s: (len(s), s.blocks))
    logger.debug(f" [PARTITIONS] materialised {len(found)} set partitions of {r}")
    return tuple(found)


def enumerate_set_partitions(r: int) -> List[SetPartition]:
    """All set partitions of {1..r}."""
    if r < 1 or r > Config.SET_PARTITION_CAP:
        raise DomainError(f"set partitions limited to 1..{Config.SET_PARTITION_CAP}, got {r}")
    return list(_set_partitions_cached(r))


@lru_cache(maxsize=None)
def bell_number(r: int) -> int:
    """Bell number from the Bell triangle."""
    if r < 0:
        raise DomainError("Bell numbers need r >= 0")
    row = [1]
    for _ in range(r):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[0]


@lru_cache(maxsize=None)
def _stirling_tables(m: int) -> Tuple[Tuple[Tuple[int, ...], ...], Tuple[Tuple[int, ...], ...]]:
    second = [[0] * (m + 1) for _ in range(m + 1)]
    first = [[0] * (m + 1) for _ in range(m + 1)]
    second[0][0] = first[0][0] = 1
    for i in range(1, m + 1):
        for k in range(1, i + 1):
            second[i][k] = k * second[i - 1][k] + second[i - 1][k - 1]
            first[i][k] = first[i - 1][k - 1] - (i - 1) * first[i - 1][k]
    return tuple(map(tuple, second)), tuple(map(tuple, first))


def stirling2(m: int, k: int) -> int:
    """Stirling number of the second kind S(m, k)."""
    if m < 0 or k < 0:
        raise DomainError("Stirling numbers need nonnegative arguments")
    if k > m:
        return 0
    return _stirling_tables(m)[0][m][k]


def stirling1(m: int, k: int) -> int:
    """Signed Stirling number of the first kind s(m, k)."""
    if m < 0 or k < 0:
        raise DomainError("Stirling numbers need nonnegative arguments")
    if k > m:
        return 0
    return _stirling_tables(m)[1][m][k]
