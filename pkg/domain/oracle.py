from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple, Union

from domain.ast import SourceLocation, VarDecl
from domain.c_types import CType
from domain.interval import Interval
from domain.memloc import MemLoc


@dataclass(frozen=True)
class Temp:
    """Compiler temporary (a machine register of the pseudo assembly)."""

    id: int

    def __str__(self) -> str:
        return f"t{self.id}"


@dataclass(frozen=True)
class Addr:
    """Concrete pointer value: a location and, for array elements, the index."""

    loc: MemLoc
    index: Optional[int] = None

    def __str__(self) -> str:
        return f"&{self.loc}" if self.index is None else f"&{self.loc.name}[{self.index}]"


Operand = Union[int, Temp, Addr]
Value = Union[int, Addr, Tuple[int, ...]]


@dataclass(frozen=True)
class Place:
    """
    Target of a load or store. `var` names a declared variable, `index` an
    array element selected by `operand`, `deref` the object a pointer operand
    points to (shifted by `offset` for p[i]).
    """

    kind: str
    decl: Optional[VarDecl] = None
    operand: Optional[Operand] = None
    offset: Optional[Operand] = None
    loc: Optional[SourceLocation] = None

    def __str__(self) -> str:
        if self.kind == "var":
            return self.decl.name
        if self.kind == "index":
            return f"{self.decl.name}[{self.operand}]"
        if self.offset is not None:
            return f"[{self.operand}+{self.offset}]"
        return f"[{self.operand}]"


class MicroKind(str, Enum):
    LOAD = "load"
    STORE = "store"
    OP = "op"
    CALL = "call"
    SEQPOINT = "seqpoint"
    NESTED = "nested"
    BRANCH = "branch"
    JUMP = "jump"
    CHOOSE = "choose"
    RET = "ret"


OP_NAMES = {
    "+": "ADD", "-": "SUB", "*": "MUL", "/": "DIV", "%": "MOD", "<<": "SHL", ">>": "SHR",
    "|": "OR", "&": "AND", "^": "XOR", "<": "LT", "<=": "LE", ">": "GT", ">=": "GE",
    "==": "EQ", "!=": "NE", "neg": "NEG", "~": "NOT", "!": "LNOT", "truth": "TST",
    "mov": "MOV", "cast": "CAST", "join": "JOIN", "addr": "LEA",
}


@dataclass(frozen=True)
class MicroInstr:
    """
    One elementary instruction. Loads and stores move `width` bits; a split
    access moves byte `part` only and may be interrupted between parts.
    NESTED stands for a sequenced sub-evaluation (&&, ||, comma) that is
    expanded in place when code is generated.
    """

    kind: MicroKind
    dest: Optional[Temp] = None
    place: Optional[Place] = None
    op: Optional[str] = None
    args: Tuple[Operand, ...] = ()
    ctype: Optional[CType] = None
    width: int = 0
    part: Optional[int] = None
    callee: Optional[str] = None
    targets: Tuple[int, ...] = ()
    full_expr: Optional[int] = None
    loc: Optional[SourceLocation] = None

    @property
    def atomic(self) -> bool:
        return self.part is None

    def __str__(self) -> str:
        suffix = f".{self.part}" if self.part is not None else ""
        args = ", ".join(str(a) for a in self.args)
        if self.kind == MicroKind.LOAD:
            return f"LOAD{suffix}  {self.dest}, {self.place}"
        if self.kind == MicroKind.STORE:
            return f"STORE{suffix} {self.place}, {args}"
        if self.kind == MicroKind.OP:
            if self.op == "+" and len(self.args) == 2 and self.args[1] == 1:
                return f"INC   {self.dest}, {self.args[0]}"
            if self.op == "-" and len(self.args) == 2 and self.args[1] == 1:
                return f"DEC   {self.dest}, {self.args[0]}"
            name = OP_NAMES.get(self.op, self.op.upper())
            place = f", {self.place}" if self.place is not None else ""
            return f"{name:<5} {self.dest}{', ' + args if args else ''}{place}"
        if self.kind == MicroKind.CALL:
            dest = f"{self.dest} = " if self.dest is not None else ""
            return f"CALL  {dest}{self.callee}({args})"
        if self.kind == MicroKind.NESTED:
            return f"{self.op.upper():<5} {self.dest}" if self.dest is not None else self.op.upper()
        if self.kind == MicroKind.SEQPOINT:
            return "SEQ"
        if self.kind == MicroKind.BRANCH:
            return f"BR    {args} ? {self.targets[0]} : {self.targets[1]}"
        if self.kind == MicroKind.JUMP:
            return f"JMP   {self.targets[0]}"
        if self.kind == MicroKind.CHOOSE:
            return f"CHOOSE {', '.join(map(str, self.targets))}"
        return f"RET   {args}".rstrip()


@dataclass(frozen=True)
class Schedule:
    """Instruction order chosen by a compiler for one full expression."""

    instrs: Tuple[MicroInstr, ...]

    def __len__(self) -> int:
        return len(self.instrs)

    def __str__(self) -> str:
        return "\n".join(str(instr) for instr in self.instrs)


@dataclass
class OracleBounds:
    """Limits that keep exhaustive enumeration finite."""

    isr_fires_max: int = 2
    state_budget: int = 1_000_000
    schedule_cap: int = 64
    split_wide_accesses: bool = True
    input_values: Dict[str, List[int]] = field(default_factory=dict)


Snapshot = Tuple[Tuple[MemLoc, Value], ...]


@dataclass(frozen=True)
class BoundsViolation:
    loc: SourceLocation
    array: MemLoc
    index: int


@dataclass
class Executions:
    """
    Everything the enumeration observed: the store at every sequence point
    reached (keyed by full expression id) and at every ISR entry, plus
    traces that ended in an out-of-bounds access or undefined behaviour.
    """

    seqpoints: Dict[int, Set[Snapshot]] = field(default_factory=dict)
    isr_entries: Dict[str, Set[Snapshot]] = field(default_factory=dict)
    bound_violations: Set[BoundsViolation] = field(default_factory=set)
    undefined: Set[str] = field(default_factory=set)
    states_explored: int = 0
    parents: Dict[object, Tuple[object, str]] = field(default_factory=dict, repr=False)
    first_seen: Dict[Tuple[object, Snapshot], object] = field(default_factory=dict, repr=False)

    def trace(self, key, snapshot: Snapshot) -> List[str]:
        """Steps from the initial configuration to the first one observing `snapshot` at `key`."""
        config = self.first_seen.get((key, snapshot))
        steps: List[str] = []
        while config is not None and config in self.parents:
            config, label = self.parents[config]
            steps.append(label)
        steps.reverse()
        return steps

    def observations(self) -> Set[Tuple[str, object, Snapshot]]:
        found = {("seq", fe, snap) for fe, snaps in self.seqpoints.items() for snap in snaps}
        found |= {("isr", isr, snap) for isr, snaps in self.isr_entries.items() for snap in snaps}
        return found


@dataclass(frozen=True)
class Violation:
    """A concrete value outside of what the analysis computed."""

    loc: SourceLocation
    memloc: Optional[MemLoc]
    value: Optional[int]
    interval: Optional[Interval]
    message: str
    trace: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.loc}: {self.message}"


@dataclass
class ContainmentReport:
    checked: int = 0
    violations: List[Violation] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


@dataclass
class CoverageReport:
    """Whether ISR runs inside one full expression are covered by runs at its sequence points."""

    full_expr: int
    loc: Optional[SourceLocation]
    uncovered: List[str] = field(default_factory=list)

    @property
    def covered(self) -> bool:
        return not self.uncovered


@dataclass
class ScheduleReport:
    """Whether the observable behaviour of one full expression is the same under every schedule."""

    full_expr: int
    loc: Optional[SourceLocation]
    schedules: int
    differing: List[str] = field(default_factory=list)

    @property
    def independent(self) -> bool:
        return not self.differing
