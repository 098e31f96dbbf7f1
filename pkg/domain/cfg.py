from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from domain.ast import Expr, SourceLocation, VarDecl
from domain.memloc import LocationTable, MemLoc


class NodeKind(str, Enum):
    ASSIGN = "assign"
    GUARD = "guard"
    CALL = "call"
    RETURN = "return"
    NOP = "nop"
    ISR_FIXPOINT = "isr-fixpoint"


@dataclass(frozen=True)
class NodeAccess:
    """Memory a node touches. `nonvolatile` lists locations accessed without volatile qualification."""

    reads: FrozenSet[MemLoc] = frozenset()
    writes: FrozenSet[MemLoc] = frozenset()
    nonvolatile: FrozenSet[MemLoc] = frozenset()

    @property
    def all(self) -> FrozenSet[MemLoc]:
        return self.reads | self.writes


@dataclass(eq=False)
class CfgNode:
    """
    One elementary step. ASSIGN stores `value` into `target`; GUARD tests
    `cond` (successors[0] is the branch where it holds); CALL runs `callee`
    with `args` and stores the result in the temporary `result`; RETURN
    evaluates `value` into the return slot. A NOP may carry a `value` that is
    only evaluated for its reads.
    """

    id: int
    kind: NodeKind
    function: str
    loc: Optional[SourceLocation] = None
    target: Optional[Expr] = None
    value: Optional[Expr] = None
    cond: Optional[Expr] = None
    callee: Optional[str] = None
    args: List[Expr] = field(default_factory=list)
    result: Optional[VarDecl] = None
    full_expr: Optional[int] = None
    successors: List[int] = field(default_factory=list)
    accesses: NodeAccess = field(default_factory=NodeAccess)
    synthetic: bool = False
    label: str = ""

    @property
    def is_guard(self) -> bool:
        return self.kind == NodeKind.GUARD

    def polarity(self, slot: int) -> bool:
        """Truth value of the guard condition along successor `slot`."""
        return slot == 0

    def __repr__(self) -> str:
        return f"CfgNode({self.id}, {self.kind.value}, {self.label!r})"


@dataclass(eq=False)
class FullExpr:
    """Nodes of one full expression, in evaluation order."""

    id: int
    function: str
    nodes: List[int] = field(default_factory=list)
    expr: Optional[Expr] = None
    loc: Optional[SourceLocation] = None
    well_formed: Optional[object] = None
    entry: Optional[int] = None
    exits: Tuple[int, ...] = ()


@dataclass(eq=False)
class FunctionCfg:
    name: str
    entry: int
    exit: int
    nodes: List[int] = field(default_factory=list)
    temps: List[VarDecl] = field(default_factory=list)
    is_isr: bool = False

    def __iter__(self) -> Iterator[int]:
        return iter(self.nodes)


@dataclass(eq=False)
class ProgramCfg:
    """Every function CFG of one program over a single node id space."""

    functions: Dict[str, FunctionCfg] = field(default_factory=dict)
    nodes: Dict[int, CfgNode] = field(default_factory=dict)
    full_exprs: Dict[int, FullExpr] = field(default_factory=dict)
    locations: LocationTable = field(default_factory=LocationTable)
    next_id: int = 0

    def node(self, node_id: int) -> CfgNode:
        return self.nodes[node_id]

    def function_nodes(self, name: str) -> List[CfgNode]:
        return [self.nodes[i] for i in self.functions[name].nodes]

    def full_expr_of(self, node: CfgNode) -> Optional[FullExpr]:
        if node.full_expr is None:
            return None
        return self.full_exprs.get(node.full_expr)

    def predecessors(self, name: str) -> Dict[int, List[int]]:
        preds: Dict[int, List[int]] = {i: [] for i in self.functions[name].nodes}
        for i in self.functions[name].nodes:
            for succ in self.nodes[i].successors:
                if i not in preds[succ]:
                    preds[succ].append(i)
        return preds

    def new_id(self) -> int:
        self.next_id += 1
        return self.next_id
