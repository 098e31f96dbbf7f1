from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Set

from domain.memloc import MemLoc


EMPTY: FrozenSet[MemLoc] = frozenset()


@dataclass
class PointsTo:
    """Flow-insensitive targets of every address-typed location."""

    targets: Dict[MemLoc, FrozenSet[MemLoc]] = field(default_factory=dict)

    def of(self, loc: MemLoc) -> FrozenSet[MemLoc]:
        return self.targets.get(loc, EMPTY)

    def __len__(self) -> int:
        return len(self.targets)


@dataclass
class AccessSets:
    """Per-function read and write sets, closed over callees."""

    reads: Dict[str, FrozenSet[MemLoc]] = field(default_factory=dict)
    writes: Dict[str, FrozenSet[MemLoc]] = field(default_factory=dict)

    def read_set(self, function: str) -> FrozenSet[MemLoc]:
        return self.reads.get(function, EMPTY)

    def write_set(self, function: str) -> FrozenSet[MemLoc]:
        return self.writes.get(function, EMPTY)

    def accessed(self, function: str) -> FrozenSet[MemLoc]:
        return self.read_set(function) | self.write_set(function)

    def static_accessed(self, function: str) -> FrozenSet[MemLoc]:
        return frozenset(loc for loc in self.accessed(function) if loc.is_static)

    def static_writes(self, function: str) -> FrozenSet[MemLoc]:
        return frozenset(loc for loc in self.write_set(function) if loc.is_static)

    def describe(self) -> List[str]:
        lines = []
        for function in sorted(set(self.reads) | set(self.writes)):
            reads = ", ".join(sorted(map(str, self.read_set(function))))
            writes = ", ".join(sorted(map(str, self.write_set(function))))
            lines.append(f"{function}: reads {{{reads}}} writes {{{writes}}}")
        return lines


class AccessPattern(str, Enum):
    MAIN_READS_ISR_WRITES = "main-reads/isr-writes"
    MAIN_WRITES_ISR_READS = "main-writes/isr-reads"
    BOTH_WRITE = "both-write"
    READ_ONLY = "read-only"


@dataclass
class SharedSet:
    """
    Locations accessed concurrently with at least one writer. Read-only
    sharing is recorded in `read_only` but does not make a location shared.
    """

    patterns: Dict[MemLoc, AccessPattern] = field(default_factory=dict)
    read_only: Set[MemLoc] = field(default_factory=set)
    isr_accessors: Dict[MemLoc, FrozenSet[str]] = field(default_factory=dict)
    isr_writers: Dict[MemLoc, FrozenSet[str]] = field(default_factory=dict)
    nonvolatile: FrozenSet[MemLoc] = EMPTY

    @property
    def shared(self) -> FrozenSet[MemLoc]:
        return frozenset(self.patterns)

    def __contains__(self, loc: MemLoc) -> bool:
        return loc in self.patterns

    def __len__(self) -> int:
        return len(self.patterns)

    def pattern(self, loc: MemLoc) -> AccessPattern:
        return self.patterns[loc]

    def intersect(self, locs: Iterable[MemLoc]) -> FrozenSet[MemLoc]:
        return frozenset(loc for loc in locs if loc in self.patterns)

    def describe(self) -> List[str]:
        lines = []
        for loc in sorted(self.patterns):
            marker = " (non-volatile)" if loc in self.nonvolatile else ""
            lines.append(f"shared {loc}: {self.patterns[loc].value}{marker}")
        for loc in sorted(self.read_only):
            lines.append(f"read-only {loc}")
        return lines
