from dataclasses import dataclass, field
from typing import List

from domain.analysis import AnalysisStats
from domain.ast import SourceLocation
from domain.interval import Interval
from domain.memloc import MemLoc
from domain.warning import AnalysisWarning


@dataclass(frozen=True)
class ArrayAccess:
    """Verdict for one array-index expression: safe iff index within [0, length-1]."""

    loc: SourceLocation
    array: MemLoc
    index: Interval
    length: int

    @property
    def safe(self) -> bool:
        return self.index.within(0, self.length - 1)

    @property
    def verdict(self) -> str:
        return "safe" if self.safe else "possibly-out-of-bounds"


@dataclass
class Report:
    file: str
    warnings: List[AnalysisWarning] = field(default_factory=list)
    array_accesses: List[ArrayAccess] = field(default_factory=list)
    stats: AnalysisStats = field(default_factory=AnalysisStats)

    @property
    def exit_code(self) -> int:
        return 1 if self.warnings else 0
