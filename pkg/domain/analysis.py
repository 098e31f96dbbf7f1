from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from domain.state import AbstractState, join_all
from domain.warning import AnalysisWarning


Context = Tuple[int, ...]


@dataclass
class AnalysisStats:
    isr_analyses: int = 0
    isr_fixpoint_sites: int = 0
    node_visits: int = 0
    memo_hits: int = 0
    elapsed_seconds: float = 0.0


@dataclass
class AnalysisResult:
    """
    Pre-state of every (node, context) pair reached, plus findings. The
    accessed state is the pre-state after shared-access handling, the values
    the node's own reads and index computations may observe.
    """

    states: Dict[Tuple[int, Context], AbstractState] = field(default_factory=dict)
    accessed: Dict[Tuple[int, Context], AbstractState] = field(default_factory=dict)
    warnings: List[AnalysisWarning] = field(default_factory=list)
    stats: AnalysisStats = field(default_factory=AnalysisStats)

    def record(self, node_id: int, context: Context, state: AbstractState) -> None:
        _join_into(self.states, (node_id, context), state)

    def record_access(self, node_id: int, context: Context, state: AbstractState) -> None:
        _join_into(self.accessed, (node_id, context), state)

    def contexts(self, node_id: int) -> List[Context]:
        return sorted(ctx for nid, ctx in self.states if nid == node_id)

    def state_at(self, node_id: int) -> Optional[AbstractState]:
        """Join over all contexts; None if the node was never reached."""
        return _join_at(self.states, node_id)

    def accessed_state_at(self, node_id: int) -> Optional[AbstractState]:
        return _join_at(self.accessed, node_id)


def _join_into(states: Dict[Tuple[int, Context], AbstractState], key: Tuple[int, Context], state: AbstractState) -> None:
    old = states.get(key)
    states[key] = state if old is None else old.join(state)


def _join_at(states: Dict[Tuple[int, Context], AbstractState], node_id: int) -> Optional[AbstractState]:
    return join_all(state for (nid, _), state in sorted(states.items(), key=lambda item: item[0]) if nid == node_id)
