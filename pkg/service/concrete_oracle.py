"""
Concrete oracle: exhaustive enumeration of the executions of a small
program under every compiler schedule and every ISR arrival point, within
the limits of OracleBounds.

Used by the tests to check that the analysis contains every concrete value
(containment), that ISRs fired inside a full expression add nothing over
ISRs fired at its sequence points (coverage), and that well-formed full
expressions behave the same under every schedule (schedule independence).
"""
import logging
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

from domain.analysis import AnalysisResult
from domain.ast import ExprKind, Program, VarDecl
from domain.c_types import CType
from domain.cfg import ProgramCfg
from domain.exceptions import AnalyzerError, StateBudgetExceeded
from domain.memloc import MemLoc
from domain.oracle import (
    Addr,
    BoundsViolation,
    ContainmentReport,
    CoverageReport,
    Executions,
    MicroInstr,
    MicroKind,
    Operand,
    OracleBounds,
    Place,
    ScheduleReport,
    Snapshot,
    Temp,
    Value,
    Violation,
)
from domain.register import RegisterKind
from domain.report import ArrayAccess
from domain.state import join_all
from dto.hardware_spec import HardwareSpec
from service.cfg_builder import build_program_cfg
from service.hardware_model import classify_access, isr_sources
from service.oracle_schedules import FunctionCode, compile_program
from service.pointer_prepass import compute_access_sets, compute_points_to
from service.resolver import fold_constant


logger = logging.getLogger(__name__)


class Frame(NamedTuple):
    fn: str
    pc: int
    locals: Tuple[Value, ...]
    temps: Tuple[Tuple[int, Value], ...]
    dest: Optional[int] = None
    isr: bool = False
    atomic: bool = False


class Config(NamedTuple):
    frames: Tuple[Frame, ...]
    statics: Tuple[Value, ...]
    regs: Tuple[Tuple[int, int], ...]
    fires: int = 0


class _Abandon(Exception):
    """The current step leaves defined behaviour; the trace stops here."""

    def __init__(self, reason: str, violation: Optional[BoundsViolation] = None):
        super().__init__(reason)
        self.reason = reason
        self.violation = violation


def _zero(ctype: CType) -> Value:
    if ctype.is_array:
        return (0,) * ctype.length
    return 0


def _truthy(value: Value) -> bool:
    return isinstance(value, Addr) or bool(value)


def _c_div(left: int, right: int) -> int:
    quotient = abs(left) // abs(right)
    return quotient if (left >= 0) == (right >= 0) else -quotient


class ConcreteMachine:
    """Small-step semantics of the compiled micro-code."""

    def __init__(
        self,
        program: Program,
        spec: HardwareSpec,
        code: Dict[str, FunctionCode],
        bounds: OracleBounds,
        quiet: Optional[int] = None,
        pin: Optional[Tuple[int, int]] = None,
    ):
        self.program = program
        self.spec = spec
        self.code = code
        self.bounds = bounds
        self.quiet = quiet
        self.pin = pin
        self.isr_map = isr_sources(program, spec)

        self.statics: List[VarDecl] = [g for g in program.globals if not g.is_register]
        self.static_index = {MemLoc.of_decl(decl): k for k, decl in enumerate(self.statics)}
        self.registers: Dict[MemLoc, VarDecl] = {
            MemLoc.of_decl(g): g for g in program.globals if g.is_register
        }
        self.semantics = {loc: classify_access(decl, spec) for loc, decl in self.registers.items()}
        self.local_index: Dict[str, Dict[MemLoc, int]] = {
            name: {MemLoc.of_decl(decl): k for k, decl in enumerate(fn.variables)}
            for name, fn in code.items()
        }
        self.observed_registers = [
            (loc, decl) for loc, decl in sorted(self.registers.items())
            if decl.bit is None and decl.ctype.is_integer and self.semantics[loc].kind != RegisterKind.INPUT
        ]

    # -- configurations ------------------------------------------------

    def initial(self) -> Config:
        statics = tuple(self.initial_value(decl) for decl in self.statics)
        regs: Dict[int, int] = {}
        if not self.spec.agnostic:
            ge = self.spec.global_enable
            if self.spec.global_enable_initial:
                regs[ge.address] = regs.get(ge.address, 0) | (1 << ge.bit)
            for source in self.spec.sources:
                if source.initial:
                    regs[source.enable.address] = regs.get(source.enable.address, 0) | (1 << source.enable.bit)
        entry = self.new_frame(self.program.entry, ())
        return Config((entry,), statics, tuple(sorted(regs.items())))

    def initial_value(self, decl: VarDecl) -> Value:
        if decl.init is None:
            return _zero(decl.ctype)
        init = decl.init
        if init.kind == ExprKind.ADDR and init.children[0].kind == ExprKind.VAR:
            target = init.children[0].decl
            return Addr(MemLoc.of_decl(target), 0 if target.ctype.is_array else None)
        value = fold_constant(init)
        if value is None or not decl.ctype.is_integer:
            return 0
        return decl.ctype.wrap(value)

    def new_frame(self, name: str, args: Sequence[Value], isr: bool = False) -> Frame:
        fn = self.code[name]
        values = [_zero(decl.ctype) for decl in fn.variables]
        for k, (param, arg) in enumerate(zip(fn.params, args)):
            values[k] = param.ctype.wrap(arg) if param.ctype.is_integer and isinstance(arg, int) else arg
        atomic = name in self.spec.atomic_functions
        return Frame(name, 0, tuple(values), (), isr=isr, atomic=atomic)

    # -- snapshots -----------------------------------------------------

    def snapshot(self, config: Config, frame: Optional[Frame] = None) -> Snapshot:
        items: List[Tuple[MemLoc, Value]] = []
        for decl, value in zip(self.statics, config.statics):
            if decl.is_numeric:
                items.append((MemLoc.of_decl(decl), value))
        regs = dict(config.regs)
        for loc, decl in self.observed_registers:
            items.append((loc, decl.ctype.wrap(regs.get(decl.absolute_address, 0))))
        if frame is not None:
            for decl, value in zip(self.code[frame.fn].variables, frame.locals):
                if decl.is_numeric:
                    items.append((MemLoc.of_decl(decl), value))
        return tuple(sorted(items, key=lambda item: item[0]))

    # -- interrupts ----------------------------------------------------

    def bit(self, regs: Dict[int, int], ref) -> bool:
        return bool((regs.get(ref.address, 0) >> ref.bit) & 1)

    def can_fire(self, config: Config, isr: str) -> bool:
        if config.fires >= self.bounds.isr_fires_max:
            return False
        if any(frame.isr or frame.atomic for frame in config.frames):
            return False
        if self.spec.agnostic:
            return True
        regs = dict(config.regs)
        source = next(s for s in self.spec.sources if s.name == self.isr_map[isr])
        return self.bit(regs, self.spec.global_enable) and self.bit(regs, source.enable)

    def fire(self, config: Config, isr: str) -> Config:
        frame = self.new_frame(isr, (), isr=True)
        return Config(config.frames + (frame,), config.statics, config.regs, config.fires + 1)

    # -- stepping ------------------------------------------------------

    def successors(self, config: Config, executions: Executions) -> List[Tuple[str, Config]]:
        if not config.frames:
            return []
        frame = config.frames[-1]
        instr = self.code[frame.fn].instrs[frame.pc]
        result: List[Tuple[str, Config]] = []

        if instr.kind not in (MicroKind.JUMP, MicroKind.CHOOSE):
            inside_quiet = self.quiet is not None and instr.full_expr == self.quiet and instr.kind != MicroKind.SEQPOINT
            if not inside_quiet:
                for isr in sorted(self.isr_map):
                    if self.can_fire(config, isr):
                        result.append((f"interrupt {isr} at {frame.fn}.{frame.pc}", self.fire(config, isr)))

        try:
            for label, successor in self.execute(config, frame, instr, executions):
                result.append((f"{frame.fn}.{frame.pc:03d} {label}", successor))
        except _Abandon as stop:
            if stop.violation is not None:
                executions.bound_violations.add(stop.violation)
            else:
                executions.undefined.add(f"{instr.loc}: {stop.reason}")
        return result

    def execute(self, config: Config, frame: Frame, instr: MicroInstr, executions: Executions):
        kind = instr.kind
        temps = dict(frame.temps)

        def advance(pc: Optional[int] = None, **changes) -> Frame:
            return frame._replace(pc=frame.pc + 1 if pc is None else pc, **changes)

        if kind == MicroKind.SEQPOINT:
            yield "SEQ", self.replace_top(config, advance(temps=()))
        elif kind == MicroKind.JUMP:
            yield str(instr), self.replace_top(config, advance(instr.targets[0]))
        elif kind == MicroKind.CHOOSE:
            targets = list(enumerate(instr.targets))
            if self.pin is not None and instr.op == "top" and instr.full_expr == self.pin[0]:
                targets = [targets[self.pin[1]]]
            for index, target in targets:
                yield f"schedule {index}", self.replace_top(config, advance(target))
        elif kind == MicroKind.BRANCH:
            taken = _truthy(self.operand(instr.args[0], temps))
            yield str(instr), self.replace_top(config, advance(instr.targets[0 if taken else 1]))
        elif kind == MicroKind.OP:
            value = self.operate(instr, temps, frame, config)
            temps[instr.dest.id] = value
            yield str(instr), self.replace_top(config, advance(temps=tuple(sorted(temps.items()))))
        elif kind == MicroKind.LOAD:
            for value in self.load(config, frame, instr, temps):
                updated = dict(temps)
                updated[instr.dest.id] = value
                yield f"{instr} = {value}", self.replace_top(config, advance(temps=tuple(sorted(updated.items()))))
        elif kind == MicroKind.STORE:
            value = self.operand(instr.args[0], temps)
            stored = self.store(config, frame, instr, temps, value)
            yield str(instr), self.replace_top(stored, advance(locals=stored.frames[-1].locals))
        elif kind == MicroKind.CALL:
            yield str(instr), self.call(config, frame, instr, temps)
        elif kind == MicroKind.RET:
            yield str(instr), self.ret(config, frame, instr, temps)
        else:
            raise AnalyzerError(f"unexpected {kind.value} instruction in generated code")

    def replace_top(self, config: Config, frame: Frame) -> Config:
        return config._replace(frames=config.frames[:-1] + (frame,))

    def operand(self, operand: Operand, temps: Dict[int, Value]) -> Value:
        if isinstance(operand, Temp):
            return temps[operand.id]
        return operand

    # -- calls ---------------------------------------------------------

    def call(self, config: Config, frame: Frame, instr: MicroInstr, temps: Dict[int, Value]) -> Config:
        if instr.callee in ("sei", "cli"):
            regs = dict(config.regs)
            if not self.spec.agnostic:
                ge = self.spec.global_enable
                current = regs.get(ge.address, 0)
                regs[ge.address] = current | (1 << ge.bit) if instr.callee == "sei" else current & ~(1 << ge.bit)
            top = frame._replace(pc=frame.pc + 1)
            return Config(config.frames[:-1] + (top,), config.statics, tuple(sorted(regs.items())), config.fires)
        args = [self.operand(arg, temps) for arg in instr.args]
        waiting = frame._replace(dest=instr.dest.id if instr.dest is not None else None)
        callee = self.new_frame(instr.callee, args)
        return config._replace(frames=config.frames[:-1] + (waiting, callee))

    def ret(self, config: Config, frame: Frame, instr: MicroInstr, temps: Dict[int, Value]) -> Config:
        value = self.operand(instr.args[0], temps) if instr.args else None
        rest = config.frames[:-1]
        if frame.isr or not rest:
            return config._replace(frames=rest)
        caller = rest[-1]
        caller_temps = dict(caller.temps)
        if caller.dest is not None and value is not None:
            ctype = instr.ctype
            caller_temps[caller.dest] = ctype.wrap(value) if ctype.is_integer and isinstance(value, int) else value
        resumed = caller._replace(pc=caller.pc + 1, temps=tuple(sorted(caller_temps.items())), dest=None)
        return config._replace(frames=rest[:-1] + (resumed,))

    # -- memory --------------------------------------------------------

    def resolve(self, place: Place, temps: Dict[int, Value], frame: Frame) -> Tuple[MemLoc, Optional[int]]:
        """Location and element index designated by a place; checks bounds."""
        if place.kind == "var":
            return MemLoc.of_decl(place.decl), None
        if place.kind == "index":
            index = self.operand(place.operand, temps)
            array = MemLoc.of_decl(place.decl)
            if isinstance(index, Addr):
                raise _Abandon("pointer used as an array index")
            if not 0 <= index < place.decl.ctype.length:
                raise _Abandon("index out of bounds", BoundsViolation(place.loc, array, index))
            return array, index
        pointer = self.operand(place.operand, temps)
        offset = self.operand(place.offset, temps) if place.offset is not None else 0
        if not isinstance(pointer, Addr):
            raise _Abandon("null pointer dereference")
        if isinstance(offset, Addr):
            raise _Abandon("pointer used as an offset")
        if pointer.index is None:
            if offset != 0:
                raise _Abandon("pointer arithmetic outside of an array")
            return pointer.loc, None
        index = pointer.index + offset
        length = self.decl_of(pointer.loc).ctype.length
        if not 0 <= index < length:
            raise _Abandon("index out of bounds", BoundsViolation(place.loc, pointer.loc, index))
        return pointer.loc, index

    def decl_of(self, loc: MemLoc) -> VarDecl:
        if loc in self.static_index:
            return self.statics[self.static_index[loc]]
        if loc in self.registers:
            return self.registers[loc]
        fn = self.code[loc.function]
        return fn.variables[self.local_index[loc.function][loc]]

    def frame_of(self, config: Config, loc: MemLoc) -> int:
        for position in range(len(config.frames) - 1, -1, -1):
            if config.frames[position].fn == loc.function:
                return position
        raise _Abandon(f"dangling pointer to {loc}")

    def read_cell(self, config: Config, loc: MemLoc, index: Optional[int]) -> Value:
        if loc in self.static_index:
            value = config.statics[self.static_index[loc]]
        else:
            frame = config.frames[self.frame_of(config, loc)]
            value = frame.locals[self.local_index[loc.function][loc]]
        return value[index] if index is not None else value

    def write_cell(self, config: Config, loc: MemLoc, index: Optional[int], value: Value) -> Config:
        def put(old: Value) -> Value:
            if index is None:
                return value
            cells = list(old)
            cells[index] = value
            return tuple(cells)

        if loc in self.static_index:
            k = self.static_index[loc]
            statics = config.statics[:k] + (put(config.statics[k]),) + config.statics[k + 1:]
            return config._replace(statics=statics)
        position = self.frame_of(config, loc)
        frame = config.frames[position]
        k = self.local_index[loc.function][loc]
        frame = frame._replace(locals=frame.locals[:k] + (put(frame.locals[k]),) + frame.locals[k + 1:])
        return config._replace(frames=config.frames[:position] + (frame,) + config.frames[position + 1:])

    def input_values(self, name: str) -> List[int]:
        if name in self.bounds.input_values:
            return list(self.bounds.input_values[name])
        register = next(r for r in self.spec.inputs if r.name == name)
        return register.test_values()

    def load(self, config: Config, frame: Frame, instr: MicroInstr, temps: Dict[int, Value]) -> List[Value]:
        loc, index = self.resolve(instr.place, temps, frame)
        ctype = instr.ctype.unqualified()
        if loc in self.registers:
            decl = self.registers[loc]
            semantics = self.semantics[loc]
            if semantics.kind == RegisterKind.INPUT:
                values = self.input_values(semantics.source)
                if decl.bit is not None:
                    values = sorted({(v >> decl.bit) & 1 for v in values})
                raws = [v if decl.bit is not None else decl.ctype.wrap(v) for v in values]
            else:
                raw = dict(config.regs).get(decl.absolute_address, 0)
                raws = [(raw >> decl.bit) & 1 if decl.bit is not None else decl.ctype.wrap(raw)]
        else:
            raws = [self.read_cell(config, loc, index)]
        if instr.part is None:
            return raws
        return [self.byte_of(value, ctype, instr.part, instr.width) for value in raws]

    @staticmethod
    def byte_of(value: Value, ctype: CType, part: int, width: int) -> int:
        if not isinstance(value, int):
            raise _Abandon("split access of a pointer")
        mask = (1 << width) - 1
        return ((value & ((1 << ctype.bits) - 1)) >> (part * width)) & mask

    def store(self, config: Config, frame: Frame, instr: MicroInstr, temps: Dict[int, Value], value: Value) -> Config:
        loc, index = self.resolve(instr.place, temps, frame)
        ctype = instr.ctype.unqualified()
        if isinstance(value, int) and ctype.is_integer:
            if instr.part is not None:
                old = self.current(config, loc, index)
                shift = instr.part * instr.width
                mask = ((1 << instr.width) - 1) << shift
                raw = (old & ((1 << ctype.bits) - 1) & ~mask) | (value & ((1 << ctype.bits) - 1) & mask)
                value = ctype.wrap(raw)
            else:
                value = ctype.wrap(value)
        if loc in self.registers:
            decl = self.registers[loc]
            regs = dict(config.regs)
            current = regs.get(decl.absolute_address, 0)
            if decl.bit is not None:
                current = current | (1 << decl.bit) if _truthy(value) else current & ~(1 << decl.bit)
            else:
                current = value & 0xFFFF if isinstance(value, int) else 0
            regs[decl.absolute_address] = current
            return config._replace(regs=tuple(sorted(regs.items())))
        return self.write_cell(config, loc, index, value)

    def current(self, config: Config, loc: MemLoc, index: Optional[int]) -> int:
        if loc in self.registers:
            decl = self.registers[loc]
            return dict(config.regs).get(decl.absolute_address, 0)
        value = self.read_cell(config, loc, index)
        return value if isinstance(value, int) else 0

    # -- arithmetic ----------------------------------------------------

    def operate(self, instr: MicroInstr, temps: Dict[int, Value], frame: Frame, config: Config) -> Value:
        op = instr.op
        if op == "addr":
            loc, index = self.resolve(instr.place, temps, frame)
            return Addr(loc, index)
        args = [self.operand(arg, temps) for arg in instr.args]
        ctype = instr.ctype.unqualified() if instr.ctype is not None else None

        if op == "join":
            raw = 0
            for part, byte in enumerate(args):
                raw |= byte << (part * instr.width)
            return ctype.wrap(raw)
        if op in ("mov", "cast"):
            value = args[0]
            if isinstance(value, int) and ctype is not None and ctype.is_integer:
                return ctype.wrap(value)
            return value
        if op == "truth":
            return int(_truthy(args[0]))
        if op == "!":
            return int(not _truthy(args[0]))

        if any(isinstance(arg, Addr) for arg in args):
            if op in ("==", "!="):
                equal = args[0] == args[1]
                return int(equal if op == "==" else not equal)
            raise _Abandon(f"pointer arithmetic with '{op}'")

        if op == "neg":
            value = -args[0]
        elif op == "~":
            value = ~args[0]
        else:
            left, right = args
            if op in ("/", "%") and right == 0:
                raise _Abandon("division by zero")
            if op in ("<<", ">>") and not 0 <= right < 16:
                raise _Abandon(f"shift by {right}")
            value = {
                "+": lambda: left + right,
                "-": lambda: left - right,
                "*": lambda: left * right,
                "/": lambda: _c_div(left, right),
                "%": lambda: left - _c_div(left, right) * right,
                "<<": lambda: left << right,
                ">>": lambda: left >> right,
                "|": lambda: left | right,
                "&": lambda: left & right,
                "^": lambda: left ^ right,
                "<": lambda: int(left < right),
                "<=": lambda: int(left <= right),
                ">": lambda: int(left > right),
                ">=": lambda: int(left >= right),
                "==": lambda: int(left == right),
                "!=": lambda: int(left != right),
            }[op]()
        return ctype.wrap(value) if ctype is not None and ctype.is_integer else value


# -- enumeration -----------------------------------------------------------

def _prepare(program: Program, cfg: Optional[ProgramCfg]) -> ProgramCfg:
    return cfg if cfg is not None else build_program_cfg(program)


def enumerate_executions(
    program: Program,
    spec: HardwareSpec,
    bounds: Optional[OracleBounds] = None,
    cfg: Optional[ProgramCfg] = None,
    quiet: Optional[int] = None,
    pin: Optional[Tuple[int, int]] = None,
) -> Executions:
    """
    Explore every configuration reachable from reset. `quiet` forbids ISRs
    inside one full expression (they may still fire at its sequence point);
    `pin` fixes the schedule of one full expression.
    """
    bounds = bounds or OracleBounds()
    cfg = _prepare(program, cfg)
    code = compile_program(program, spec, cfg, bounds.schedule_cap, bounds.split_wide_accesses)
    machine = ConcreteMachine(program, spec, code, bounds, quiet, pin)
    access = compute_access_sets(program, cfg, compute_points_to(program, cfg))

    executions = Executions()
    start = machine.initial()
    seen: Set[Config] = {start}
    stack = [start]
    while stack:
        config = stack.pop()
        if config.frames:
            frame = config.frames[-1]
            instr = machine.code[frame.fn].instrs[frame.pc]
            if instr.kind == MicroKind.SEQPOINT and instr.full_expr is not None:
                snap = machine.snapshot(config, frame)
                _observe(executions, executions.seqpoints, ("seq", instr.full_expr), instr.full_expr, snap, config)
        for label, successor in machine.successors(config, executions):
            if successor.fires > config.fires:
                isr = successor.frames[-1].fn
                statics = access.static_accessed(isr)
                snap = tuple(item for item in machine.snapshot(successor) if item[0] in statics)
                if successor not in seen:
                    executions.parents[successor] = (config, label)
                _observe(executions, executions.isr_entries, ("isr", isr), isr, snap, successor)
            if successor in seen:
                continue
            seen.add(successor)
            if len(seen) > bounds.state_budget:
                raise StateBudgetExceeded(f"more than {bounds.state_budget} configurations")
            executions.parents[successor] = (config, label)
            stack.append(successor)

    executions.states_explored = len(seen)
    logger.info(
        f"oracle explored {len(seen)} configurations; {sum(map(len, executions.seqpoints.values()))} "
        f"sequence point observations, {len(executions.bound_violations)} out-of-bounds accesses"
    )
    return executions


def _observe(executions: Executions, table: Dict, key, slot, snap: Snapshot, config: Config) -> None:
    table.setdefault(slot, set()).add(snap)
    executions.first_seen.setdefault((key, snap), config)


# -- checks ----------------------------------------------------------------

def _contained(value: Value, interval) -> Optional[int]:
    """First concrete value outside `interval`, or None."""
    values = value if isinstance(value, tuple) else (value,)
    for item in values:
        if isinstance(item, int) and not interval.contains(item):
            return item
    return None


def check_containment(
    executions: Executions,
    result: AnalysisResult,
    cfg: ProgramCfg,
    array_accesses: Optional[Iterable[ArrayAccess]] = None,
) -> ContainmentReport:
    """
    Every value observed concretely at a sequence point or ISR entry must lie
    within the bounds the analysis computed there; every out-of-bounds access
    must sit at an index expression not proven safe.
    """
    report = ContainmentReport()

    def check(key, label: str, loc, state, snaps: Set[Snapshot]) -> None:
        for snap in sorted(snaps, key=str):
            report.checked += 1
            if state is None or state.is_bottom:
                report.violations.append(Violation(
                    loc, None, None, None, f"{label} reached concretely but unreachable for the analysis",
                    tuple(executions.trace(key, snap)),
                ))
                break
            for memloc, value in snap:
                if memloc not in state.oct.index:
                    continue
                interval = state.oct.bounds(memloc)
                outside = _contained(value, interval)
                if outside is not None:
                    report.violations.append(Violation(
                        loc, memloc, outside, interval,
                        f"{label}: {memloc} = {outside} outside {interval}",
                        tuple(executions.trace(key, snap)),
                    ))

    for fe_id in sorted(executions.seqpoints):
        fe = cfg.full_exprs[fe_id]
        state = join_all(s for s in (result.state_at(n) for n in fe.nodes) if s is not None)
        check(("seq", fe_id), f"full expression {fe_id} ({fe.function})", fe.loc, state,
              executions.seqpoints[fe_id])

    for isr in sorted(executions.isr_entries):
        graph = cfg.functions[isr]
        entry_loc = cfg.nodes[graph.entry].loc
        check(("isr", isr), f"entry of {isr}", entry_loc, result.state_at(graph.entry),
              executions.isr_entries[isr])

    verdicts = list(array_accesses or ())
    for violation in sorted(executions.bound_violations, key=lambda v: (str(v.loc), v.index)):
        claimed = [a for a in verdicts if a.loc == violation.loc and a.array == violation.array and a.safe]
        if claimed:
            report.violations.append(Violation(
                violation.loc, violation.array, violation.index, claimed[0].index,
                f"{violation.array} indexed with {violation.index} at an access proven safe",
            ))

    logger.info(f"containment: {report.checked} observations checked, {len(report.violations)} violations")
    return report


def _describe(observation) -> str:
    kind, key, snap = observation
    values = ", ".join(f"{loc}={value}" for loc, value in snap)
    where = f"full expression {key}" if kind == "seq" else f"entry of {key}"
    return f"{where}: {values}"


def _candidates(program: Program, cfg: ProgramCfg, fe_ids: Optional[Iterable[int]]) -> List[int]:
    if fe_ids is not None:
        return sorted(fe_ids)
    isrs = {fn.name for fn in program.isrs}
    return sorted(
        fe.id for fe in cfg.full_exprs.values()
        if fe.expr is not None and fe.function not in isrs
    )


def check_isr_coverage(
    program: Program,
    spec: HardwareSpec,
    fe_ids: Optional[Iterable[int]] = None,
    bounds: Optional[OracleBounds] = None,
    cfg: Optional[ProgramCfg] = None,
) -> List[CoverageReport]:
    """
    For each full expression, compare the runs with ISRs fired anywhere
    against the runs where ISRs fire only at its sequence point.
    """
    cfg = _prepare(program, cfg)
    everywhere = enumerate_executions(program, spec, bounds, cfg).observations()
    reports = []
    for fe_id in _candidates(program, cfg, fe_ids):
        quiet = enumerate_executions(program, spec, bounds, cfg, quiet=fe_id).observations()
        uncovered = sorted(_describe(obs) for obs in everywhere - quiet)
        reports.append(CoverageReport(fe_id, cfg.full_exprs[fe_id].loc, uncovered))
        logger.debug(f"full expression {fe_id}: {len(uncovered)} observations need an ISR inside it")
    return reports


def check_schedule_independence(
    program: Program,
    spec: HardwareSpec,
    fe_ids: Optional[Iterable[int]] = None,
    bounds: Optional[OracleBounds] = None,
    cfg: Optional[ProgramCfg] = None,
) -> List[ScheduleReport]:
    """For each full expression with several schedules, compare what each schedule lets the program observe."""
    bounds = bounds or OracleBounds()
    cfg = _prepare(program, cfg)
    code = compile_program(program, spec, cfg, bounds.schedule_cap, bounds.split_wide_accesses)
    reports = []
    for fe_id in _candidates(program, cfg, fe_ids):
        fe = cfg.full_exprs[fe_id]
        count = code[fe.function].schedules_of(fe_id)
        if count < 2:
            reports.append(ScheduleReport(fe_id, fe.loc, count))
            continue
        runs = [
            enumerate_executions(program, spec, bounds, cfg, pin=(fe_id, index)).observations()
            for index in range(count)
        ]
        differing = set()
        for other in runs[1:]:
            differing |= runs[0] ^ other
        reports.append(ScheduleReport(fe_id, fe.loc, count, sorted(_describe(obs) for obs in differing)))
    return reports


def describe_executions(executions: Executions, cfg: ProgramCfg) -> List[str]:
    """Value sets per sequence point and ISR entry, one line per location."""
    lines = []
    for fe_id in sorted(executions.seqpoints):
        fe = cfg.full_exprs[fe_id]
        lines.append(f"{fe.loc} [{fe.function}] full expression {fe_id}")
        lines.extend(_value_sets(executions.seqpoints[fe_id]))
    for isr in sorted(executions.isr_entries):
        lines.append(f"entry of {isr}")
        lines.extend(_value_sets(executions.isr_entries[isr]))
    for violation in sorted(executions.bound_violations, key=lambda v: (str(v.loc), v.index)):
        lines.append(f"{violation.loc}: {violation.array} indexed with {violation.index}")
    lines.extend(sorted(executions.undefined))
    return lines


def _value_sets(snaps: Set[Snapshot]) -> List[str]:
    values: Dict[MemLoc, Set] = {}
    for snap in snaps:
        for loc, value in snap:
            values.setdefault(loc, set()).add(value)
    return [
        f"  {loc} in {{{', '.join(str(v) for v in sorted(vals, key=str))}}}"
        for loc, vals in sorted(values.items())
    ]
