from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from domain.ast import SourceLocation
from domain.memloc import MemLoc


class WarningKind(str, Enum):
    NON_VOLATILE_SHARED = "NonVolatileShared"
    DATA_LOSS = "DataLoss"
    UNSPECIFIED_ORDER = "UnspecifiedOrder"
    NON_ATOMIC_ACCESS = "NonAtomicAccess"
    ARRAY_OUT_OF_BOUNDS = "ArrayOutOfBounds"

    @property
    def severity(self) -> str:
        return "error" if self == WarningKind.ARRAY_OUT_OF_BOUNDS else "warning"


@dataclass(frozen=True)
class AnalysisWarning:
    """One finding; deduplicated by (kind, loc)."""

    kind: WarningKind
    loc: SourceLocation
    message: str
    memlocs: Tuple[MemLoc, ...] = ()

    @property
    def severity(self) -> str:
        return self.kind.severity

    @property
    def key(self) -> Tuple[str, str]:
        return self.kind.value, str(self.loc)

    def sort_key(self) -> Tuple[str, int, int, str]:
        return self.loc.file, self.loc.line, self.loc.column, self.kind.value

    def __str__(self) -> str:
        return f"{self.loc}: {self.kind.value}: {self.message}"


def out_of_bounds(loc: SourceLocation, array: MemLoc, index: str, length: int) -> AnalysisWarning:
    return AnalysisWarning(
        WarningKind.ARRAY_OUT_OF_BOUNDS,
        loc,
        f"index of {array} may lie in {index}, outside [0, {length - 1}]",
        (array,),
    )


def shared_warning(kind: WarningKind, loc: SourceLocation, locs, detail: Optional[str] = None) -> AnalysisWarning:
    names = ", ".join(str(loc_) for loc_ in sorted(locs))
    messages = {
        WarningKind.NON_VOLATILE_SHARED: f"shared {names} accessed without volatile qualification",
        WarningKind.DATA_LOSS: f"write to {names} may be overwritten by an interrupt handler (data loss)",
        WarningKind.UNSPECIFIED_ORDER: f"expression is not well-formed; order of accesses to {names} is unspecified",
        WarningKind.NON_ATOMIC_ACCESS: f"non-atomic access to shared {names} may observe corrupted data",
    }
    message = messages[kind] + (f" ({detail})" if detail else "")
    return AnalysisWarning(kind, loc, message, tuple(sorted(locs)))
