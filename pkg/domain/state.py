from dataclasses import dataclass
from typing import Iterable, List, Optional

from domain.interrupts import InterruptState
from domain.octagon import Octagon


@dataclass(frozen=True)
class AbstractState:
    """Octagon paired with the interrupt flags; bottom iff the octagon is."""

    oct: Octagon
    ints: InterruptState

    @classmethod
    def bottom(cls, vars, ints: Optional[InterruptState] = None) -> "AbstractState":
        return cls(Octagon.bottom(vars), ints or InterruptState())

    @property
    def is_bottom(self) -> bool:
        return self.oct.is_bottom

    @property
    def vars(self):
        return self.oct.vars

    def with_oct(self, oct: Octagon) -> "AbstractState":
        return AbstractState(oct, self.ints)

    def join(self, other: "AbstractState") -> "AbstractState":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        return AbstractState(self.oct.join(other.oct), self.ints.join(other.ints))

    def widen(self, other: "AbstractState", thresholds: Iterable[int] = ()) -> "AbstractState":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        return AbstractState(self.oct.widen(other.oct, thresholds), self.ints.join(other.ints))

    def leq(self, other: "AbstractState") -> bool:
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        return self.ints.leq(other.ints) and self.oct.leq(other.oct)

    def describe(self) -> List[str]:
        return [str(self.ints)] + self.oct.describe()


def join_all(states: Iterable[AbstractState]) -> Optional[AbstractState]:
    result = None
    for state in states:
        result = state if result is None else result.join(state)
    return result
