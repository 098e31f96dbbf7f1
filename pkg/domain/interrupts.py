from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Mapping, Tuple


class Flag(str, Enum):
    """Three-valued enable flag; DISABLED and ENABLED are both below UNKNOWN."""

    DISABLED = "disabled"
    ENABLED = "enabled"
    UNKNOWN = "unknown"

    def join(self, other: "Flag") -> "Flag":
        return self if self == other else Flag.UNKNOWN

    def leq(self, other: "Flag") -> bool:
        return self == other or other == Flag.UNKNOWN

    @classmethod
    def of(cls, value: bool) -> "Flag":
        return cls.ENABLED if value else cls.DISABLED


@dataclass(frozen=True)
class InterruptState:
    """Global enable flag plus one flag per interrupt source."""

    global_flag: Flag = Flag.UNKNOWN
    sources: Tuple[Tuple[str, Flag], ...] = field(default_factory=tuple)

    @classmethod
    def make(cls, global_flag: Flag, sources: Mapping[str, Flag]) -> "InterruptState":
        return cls(global_flag, tuple(sorted(sources.items())))

    @property
    def source_map(self) -> Dict[str, Flag]:
        return dict(self.sources)

    def source(self, name: str) -> Flag:
        return self.source_map.get(name, Flag.UNKNOWN)

    def can_fire(self, name: str) -> bool:
        return self.global_flag != Flag.DISABLED and self.source(name) != Flag.DISABLED

    def firing(self, names: Iterable[str]):
        return [name for name in names if self.can_fire(name)]

    def with_global(self, flag: Flag) -> "InterruptState":
        return InterruptState(flag, self.sources)

    def with_source(self, name: str, flag: Flag) -> "InterruptState":
        sources = self.source_map
        sources[name] = flag
        return InterruptState.make(self.global_flag, sources)

    def join(self, other: "InterruptState") -> "InterruptState":
        mine, theirs = self.source_map, other.source_map
        names = set(mine) | set(theirs)
        sources = {
            name: mine.get(name, Flag.UNKNOWN).join(theirs.get(name, Flag.UNKNOWN)) for name in names
        }
        return InterruptState.make(self.global_flag.join(other.global_flag), sources)

    def leq(self, other: "InterruptState") -> bool:
        if not self.global_flag.leq(other.global_flag):
            return False
        theirs = other.source_map
        return all(flag.leq(theirs.get(name, Flag.UNKNOWN)) for name, flag in self.sources)

    def __str__(self) -> str:
        parts = [f"global={self.global_flag.value}"]
        parts.extend(f"{name}={flag.value}" for name, flag in self.sources)
        return " ".join(parts)
