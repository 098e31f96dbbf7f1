"""
Compiler model of the concrete oracle.

A full expression is turned into a DAG of micro-instructions whose edges are
data dependencies; every topological order is a schedule a compiler may
choose. Sub-evaluations separated by sequence points (&&, ||, comma) form
one NESTED node that is expanded in place, so its inner instructions never
interleave with the rest of the expression. Calls are single nodes after
their arguments. Split accesses move their bytes low to high.
"""
import dataclasses
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

from domain.ast import Expr, ExprKind, FunctionDef, Program, Stmt, StmtKind, VarDecl
from domain.c_types import CType
from domain.cfg import FullExpr, ProgramCfg
from domain.exceptions import ScheduleExplosion, UnsupportedConstruct
from domain.memloc import MemLoc
from domain.oracle import Addr, MicroInstr, MicroKind, Operand, Place, Schedule, Temp
from dto.hardware_spec import HardwareSpec


logger = logging.getLogger(__name__)

DEFAULT_CAP = 64


@dataclass
class DagNode:
    instr: MicroInstr
    deps: FrozenSet[int]
    nested: Tuple["Dag", ...] = ()


@dataclass
class Dag:
    nodes: List[DagNode] = field(default_factory=list)
    result: Optional[Operand] = None


def _operands(instr: MicroInstr) -> Iterator[Operand]:
    yield from instr.args
    if instr.place is not None:
        if instr.place.operand is not None:
            yield instr.place.operand
        if instr.place.offset is not None:
            yield instr.place.offset


class ExprCompiler:
    """Builds the dependency DAG of one expression."""

    def __init__(
        self,
        spec: HardwareSpec,
        split_wide_accesses: bool = True,
        temps: Optional[Iterator[int]] = None,
        full_expr: Optional[int] = None,
    ):
        self.spec = spec
        self.unit = spec.atomic_bits or 8
        self.split = split_wide_accesses
        self.temps = temps if temps is not None else itertools.count(1)
        self.full_expr = full_expr
        self.nodes: List[DagNode] = []
        self.producer: Dict[Temp, int] = {}
        self.types: Dict[Temp, Optional[CType]] = {}

    def sub(self) -> "ExprCompiler":
        return ExprCompiler(self.spec, self.split, self.temps, self.full_expr)

    def fresh(self) -> Temp:
        return Temp(next(self.temps))

    def add(self, kind: MicroKind, dest: Optional[Temp] = None, after: Sequence[int] = (),
            nested: Tuple[Dag, ...] = (), **fields) -> int:
        instr = MicroInstr(kind, dest=dest, full_expr=self.full_expr, **fields)
        deps = {self.producer[o] for o in _operands(instr) if isinstance(o, Temp) and o in self.producer}
        deps.update(after)
        self.nodes.append(DagNode(instr, frozenset(deps), nested))
        index = len(self.nodes) - 1
        if dest is not None:
            self.producer[dest] = index
            self.types[dest] = instr.ctype
        return index

    # -- entry points --------------------------------------------------

    def effect(self, expr: Expr) -> Dag:
        self.eval(expr, need_value=False)
        return Dag(self.nodes)

    def value_dag(self, expr: Expr) -> Dag:
        result = self.eval(expr)
        return Dag(self.nodes, result)

    def store_dag(self, decl: VarDecl, expr: Expr) -> Dag:
        value = self.eval(expr)
        self.store(Place("var", decl=decl, loc=decl.loc), value, decl.ctype)
        return Dag(self.nodes)

    # -- expressions ---------------------------------------------------

    def eval(self, expr: Expr, need_value: bool = True) -> Optional[Operand]:
        kind = expr.kind
        if kind == ExprKind.CONST:
            return expr.value
        if kind == ExprKind.VAR:
            decl = expr.decl
            if decl.ctype.is_array:
                return Addr(MemLoc.of_decl(decl), 0)
            return self.load(Place("var", decl=decl, loc=expr.loc), decl.ctype)
        if kind in (ExprKind.INDEX, ExprKind.DEREF, ExprKind.VCAST):
            place, ctype = self.place(expr)
            return self.load(place, ctype)
        if kind == ExprKind.ADDR:
            return self.address(expr.children[0])
        if kind == ExprKind.UNARY:
            value = self.eval(expr.children[0])
            return self.op("neg" if expr.op == "-" else expr.op, [value], expr.ctype, expr)
        if kind == ExprKind.BINARY:
            left = self.eval(expr.children[0])
            right = self.eval(expr.children[1])
            return self.op(expr.op, [left, right], expr.ctype, expr)
        if kind in (ExprKind.LOGIC, ExprKind.COMMA):
            return self.nested(expr, need_value)
        if kind == ExprKind.CALL:
            args = tuple(self.eval(arg) for arg in expr.children)
            dest = None if expr.ctype is None or expr.ctype.is_void else self.fresh()
            self.add(MicroKind.CALL, dest, callee=expr.name, args=args, ctype=expr.ctype, loc=expr.loc)
            return dest
        if kind == ExprKind.ASSIGN:
            return self.assign(expr, need_value)
        raise UnsupportedConstruct(f"expression kind {kind.value} in the oracle", expr.loc)

    def op(self, op: str, args: List[Operand], ctype: Optional[CType], expr: Expr) -> Temp:
        dest = self.fresh()
        self.add(MicroKind.OP, dest, op=op, args=tuple(args), ctype=ctype, loc=expr.loc)
        return dest

    def nested(self, expr: Expr, need_value: bool) -> Optional[Temp]:
        subs = tuple(self.sub().value_dag(child) for child in expr.children)
        name = {"&&": "and", "||": "or"}.get(expr.op, "comma")
        dest = self.fresh() if need_value or name != "comma" else None
        self.add(MicroKind.NESTED, dest, nested=subs, op=name, ctype=expr.ctype, loc=expr.loc)
        return dest

    def assign(self, expr: Expr, need_value: bool) -> Optional[Operand]:
        target, rhs = expr.children
        place, ttype = self.place(target)
        if expr.read_write:
            old = self.load(place, ttype)
            other = self.eval(rhs.children[1])
            new = self.op(rhs.op, [old, other], rhs.ctype, rhs)
            self.store(place, new, ttype)
            result = old if expr.postfix else new
        else:
            result = self.eval(rhs)
            self.store(place, result, ttype)
        if not need_value:
            return None
        return self.convert(result, ttype.unqualified(), expr)

    def convert(self, value: Operand, ctype: CType, expr: Expr) -> Operand:
        if isinstance(value, int):
            return ctype.wrap(value) if ctype.is_integer else value
        if isinstance(value, Temp):
            current = self.types.get(value)
            if current is None or current.unqualified() == ctype:
                return value
        return self.op("cast", [value], ctype, expr)

    # -- memory --------------------------------------------------------

    def place(self, lvalue: Expr) -> Tuple[Place, CType]:
        kind = lvalue.kind
        if kind == ExprKind.VAR:
            return Place("var", decl=lvalue.decl, loc=lvalue.loc), lvalue.decl.ctype
        if kind == ExprKind.INDEX:
            base, index = lvalue.children
            if base.kind == ExprKind.VAR and base.decl.ctype.is_array:
                return Place("index", decl=base.decl, operand=self.eval(index), loc=lvalue.loc), lvalue.ctype
            pointer = self.eval(base)
            return Place("deref", operand=pointer, offset=self.eval(index), loc=lvalue.loc), lvalue.ctype
        if kind == ExprKind.DEREF:
            return Place("deref", operand=self.eval(lvalue.children[0]), loc=lvalue.loc), lvalue.ctype
        if kind == ExprKind.VCAST:
            place, _ = self.place(lvalue.children[0])
            return place, lvalue.ctype
        raise UnsupportedConstruct(f"{kind.value} is not an lvalue", lvalue.loc)

    def address(self, lvalue: Expr) -> Operand:
        if lvalue.kind == ExprKind.VAR:
            decl = lvalue.decl
            return Addr(MemLoc.of_decl(decl), 0 if decl.ctype.is_array else None)
        place, _ = self.place(lvalue)
        if place.kind == "index" and isinstance(place.operand, int):
            return Addr(MemLoc.of_decl(place.decl), place.operand)
        if place.kind == "deref" and place.offset is None:
            return place.operand
        dest = self.fresh()
        self.add(MicroKind.OP, dest, op="addr", place=place, loc=lvalue.loc)
        return dest

    def width_of(self, place: Place, ctype: CType) -> int:
        if place.kind == "var" and place.decl.bit is not None:
            return 1
        return ctype.bits

    def wide(self, ctype: CType, width: int) -> bool:
        return self.split and ctype.is_integer and width > self.unit

    def load(self, place: Place, ctype: CType) -> Temp:
        width = self.width_of(place, ctype)
        if not self.wide(ctype, width):
            dest = self.fresh()
            self.add(MicroKind.LOAD, dest, place=place, ctype=ctype, width=width, loc=place.loc)
            return dest
        parts: List[Temp] = []
        previous: Sequence[int] = ()
        for part in range(width // self.unit):
            temp = self.fresh()
            index = self.add(
                MicroKind.LOAD, temp, after=previous,
                place=place, ctype=ctype, width=self.unit, part=part, loc=place.loc,
            )
            previous = (index,)
            parts.append(temp)
        dest = self.fresh()
        self.add(MicroKind.OP, dest, op="join", args=tuple(parts), ctype=ctype, width=self.unit, loc=place.loc)
        return dest

    def store(self, place: Place, value: Operand, ctype: CType) -> None:
        width = self.width_of(place, ctype)
        if not self.wide(ctype, width):
            self.add(MicroKind.STORE, place=place, args=(value,), ctype=ctype, width=width, loc=place.loc)
            return
        previous: Sequence[int] = ()
        for part in range(width // self.unit):
            index = self.add(
                MicroKind.STORE, after=previous,
                place=place, args=(value,), ctype=ctype, width=self.unit, part=part, loc=place.loc,
            )
            previous = (index,)


def topological_orders(dag: Dag, cap: int = DEFAULT_CAP) -> List[Tuple[int, ...]]:
    """Every order of the DAG nodes that respects their dependencies, in lexicographic order."""
    size = len(dag.nodes)
    orders: List[Tuple[int, ...]] = []
    prefix: List[int] = []
    placed = set()

    def extend() -> None:
        if len(prefix) == size:
            orders.append(tuple(prefix))
            if len(orders) > cap:
                raise ScheduleExplosion(f"more than {cap} schedules for one full expression")
            return
        for index in range(size):
            if index not in placed and dag.nodes[index].deps <= placed:
                prefix.append(index)
                placed.add(index)
                extend()
                placed.discard(index)
                prefix.pop()

    extend()
    return orders


def compile_schedules(
    full_expr: Union[FullExpr, Expr, None],
    spec: HardwareSpec,
    cap: int = DEFAULT_CAP,
    split_wide_accesses: bool = True,
) -> List[Schedule]:
    """All instruction orders a compiler may emit for one full expression."""
    expr = full_expr.expr if isinstance(full_expr, FullExpr) else full_expr
    fe_id = full_expr.id if isinstance(full_expr, FullExpr) else None
    if expr is None:
        return [Schedule(())]
    dag = ExprCompiler(spec, split_wide_accesses, full_expr=fe_id).effect(expr)
    schedules = [Schedule(tuple(dag.nodes[i].instr for i in order)) for order in topological_orders(dag, cap)]
    logger.debug(f"{expr.loc}: {len(schedules)} schedules over {len(dag.nodes)} instructions")
    return schedules


# -- function code -----------------------------------------------------

@dataclass
class FunctionCode:
    """Micro-code of one function; every multi-schedule full expression starts with a CHOOSE."""

    name: str
    instrs: List[MicroInstr]
    variables: List[VarDecl]
    params: List[VarDecl]
    ret_type: CType
    is_isr: bool = False

    def schedules_of(self, full_expr: int) -> int:
        for instr in self.instrs:
            if instr.kind == MicroKind.CHOOSE and instr.full_expr == full_expr and instr.op == "top":
                return len(instr.targets)
        return 1

    def listing(self) -> List[str]:
        return [f"{self.name}.{pc:03d}  {instr}" for pc, instr in enumerate(self.instrs)]


@dataclass
class _Loop:
    breaks: List[int] = field(default_factory=list)
    continues: List[int] = field(default_factory=list)


class CodeGenerator:
    def __init__(self, fn: FunctionDef, spec: HardwareSpec, fe_ids: Dict[int, int],
                 cap: int = DEFAULT_CAP, split_wide_accesses: bool = True):
        self.fn = fn
        self.spec = spec
        self.fe_ids = fe_ids
        self.cap = cap
        self.split = split_wide_accesses
        self.temps = itertools.count(1)
        self.code: List[MicroInstr] = []
        self.loops: List[_Loop] = []

    @property
    def here(self) -> int:
        return len(self.code)

    def emit(self, kind: MicroKind, **fields) -> int:
        self.code.append(MicroInstr(kind, **fields))
        return self.here - 1

    def patch(self, pc: int, *targets: int) -> None:
        self.code[pc] = dataclasses.replace(self.code[pc], targets=tuple(targets))

    def compiler(self, fe: Optional[int]) -> ExprCompiler:
        return ExprCompiler(self.spec, self.split, self.temps, fe)

    def generate(self) -> FunctionCode:
        self.stmt(self.fn.body)
        self.emit(MicroKind.SEQPOINT, loc=self.fn.loc)
        self.emit(MicroKind.RET, ctype=self.fn.ret_type)
        return FunctionCode(
            self.fn.name, self.code, self.fn.params + self.fn.locals, self.fn.params,
            self.fn.ret_type, self.fn.is_isr,
        )

    # -- expressions ---------------------------------------------------

    def emit_dag(self, dag: Dag, fe: Optional[int], top: bool = False) -> None:
        orders = topological_orders(dag, self.cap)
        if len(orders) == 1:
            self.emit_order(dag, orders[0], fe)
            return
        choose = self.emit(MicroKind.CHOOSE, full_expr=fe, op="top" if top else None)
        starts, jumps = [], []
        for order in orders:
            starts.append(self.here)
            self.emit_order(dag, order, fe)
            jumps.append(self.emit(MicroKind.JUMP, full_expr=fe))
        self.patch(choose, *starts)
        for jump in jumps:
            self.patch(jump, self.here)

    def emit_order(self, dag: Dag, order: Tuple[int, ...], fe: Optional[int]) -> None:
        for index in order:
            node = dag.nodes[index]
            if node.instr.kind == MicroKind.NESTED:
                self.emit_nested(node, fe)
            else:
                self.code.append(node.instr)

    def emit_nested(self, node: DagNode, fe: Optional[int]) -> None:
        instr = node.instr
        left, right = node.nested
        if instr.op == "comma":
            self.emit_dag(left, fe)
            self.emit_dag(right, fe)
            if instr.dest is not None:
                self.emit(MicroKind.OP, dest=instr.dest, op="mov", args=(right.result,),
                          ctype=instr.ctype, full_expr=fe, loc=instr.loc)
            return
        self.emit_dag(left, fe)
        branch = self.emit(MicroKind.BRANCH, args=(left.result,), full_expr=fe, loc=instr.loc)
        evaluate_right = self.here
        self.emit_dag(right, fe)
        self.emit(MicroKind.OP, dest=instr.dest, op="truth", args=(right.result,),
                  ctype=instr.ctype, full_expr=fe, loc=instr.loc)
        done = self.emit(MicroKind.JUMP, full_expr=fe)
        short = self.here
        self.emit(MicroKind.OP, dest=instr.dest, op="mov", args=(0 if instr.op == "and" else 1,),
                  ctype=instr.ctype, full_expr=fe, loc=instr.loc)
        if instr.op == "and":
            self.patch(branch, evaluate_right, short)
        else:
            self.patch(branch, short, evaluate_right)
        self.patch(done, self.here)

    def full_expr_id(self, expr: Optional[Expr]) -> Optional[int]:
        return self.fe_ids.get(id(expr)) if expr is not None else None

    def condition(self, cond: Expr) -> int:
        """Evaluate `cond` as a full expression; returns the pc of the unpatched branch."""
        fe = self.full_expr_id(cond)
        self.emit(MicroKind.SEQPOINT, full_expr=fe, loc=cond.loc)
        dag = self.compiler(fe).value_dag(cond)
        self.emit_dag(dag, fe, top=True)
        return self.emit(MicroKind.BRANCH, args=(dag.result,), full_expr=fe, loc=cond.loc)

    def effect(self, expr: Expr) -> None:
        fe = self.full_expr_id(expr)
        self.emit(MicroKind.SEQPOINT, full_expr=fe, loc=expr.loc)
        self.emit_dag(self.compiler(fe).effect(expr), fe, top=True)

    # -- statements ----------------------------------------------------

    def stmt(self, stmt: Stmt) -> None:
        kind = stmt.kind
        if kind == StmtKind.BLOCK:
            for child in stmt.stmts:
                self.stmt(child)
        elif kind == StmtKind.DECL:
            decl = stmt.decl
            if decl.init is not None:
                fe = self.full_expr_id(decl.init)
                self.emit(MicroKind.SEQPOINT, full_expr=fe, loc=stmt.loc)
                self.emit_dag(self.compiler(fe).store_dag(decl, decl.init), fe, top=True)
        elif kind == StmtKind.EXPR:
            self.effect(stmt.expr)
        elif kind == StmtKind.EMPTY:
            self.emit(MicroKind.SEQPOINT, loc=stmt.loc)
        elif kind == StmtKind.IF:
            branch = self.condition(stmt.cond)
            then_start = self.here
            self.stmt(stmt.body)
            skip = self.emit(MicroKind.JUMP)
            else_start = self.here
            if stmt.orelse is not None:
                self.stmt(stmt.orelse)
            self.patch(branch, then_start, else_start)
            self.patch(skip, self.here)
        elif kind == StmtKind.WHILE:
            head = self.here
            branch = self.condition(stmt.cond)
            body = self.here
            loop = self.loop_body(stmt.body)
            self.emit(MicroKind.JUMP, targets=(head,))
            self.patch(branch, body, self.here)
            self.close_loop(loop, self.here, head)
        elif kind == StmtKind.DO:
            start = self.here
            loop = self.loop_body(stmt.body)
            check = self.here
            branch = self.condition(stmt.cond)
            self.patch(branch, start, self.here)
            self.close_loop(loop, self.here, check)
        elif kind == StmtKind.FOR:
            if stmt.init is not None:
                self.stmt(stmt.init)
            head = self.here
            branch = self.condition(stmt.cond) if stmt.cond is not None else None
            body = self.here
            loop = self.loop_body(stmt.body)
            step = self.here
            if stmt.step is not None:
                self.effect(stmt.step)
            self.emit(MicroKind.JUMP, targets=(head,))
            if branch is not None:
                self.patch(branch, body, self.here)
            self.close_loop(loop, self.here, step)
        elif kind == StmtKind.RETURN:
            fe = self.full_expr_id(stmt.expr)
            self.emit(MicroKind.SEQPOINT, full_expr=fe, loc=stmt.loc)
            if stmt.expr is None:
                self.emit(MicroKind.RET, ctype=self.fn.ret_type, loc=stmt.loc)
            else:
                dag = self.compiler(fe).value_dag(stmt.expr)
                self.emit_dag(dag, fe, top=True)
                self.emit(MicroKind.RET, args=(dag.result,), ctype=self.fn.ret_type, loc=stmt.loc)
        elif kind == StmtKind.BREAK:
            self.loops[-1].breaks.append(self.emit(MicroKind.JUMP))
        elif kind == StmtKind.CONTINUE:
            self.loops[-1].continues.append(self.emit(MicroKind.JUMP))
        else:
            raise UnsupportedConstruct(f"statement kind {kind.value} in the oracle", stmt.loc)

    def loop_body(self, body: Stmt) -> _Loop:
        loop = _Loop()
        self.loops.append(loop)
        self.stmt(body)
        self.loops.pop()
        return loop

    def close_loop(self, loop: _Loop, exit_pc: int, continue_pc: int) -> None:
        for pc in loop.breaks:
            self.patch(pc, exit_pc)
        for pc in loop.continues:
            self.patch(pc, continue_pc)


def full_expr_ids(cfg: ProgramCfg) -> Dict[int, int]:
    """Map from the identity of each full expression's AST to its id."""
    return {id(fe.expr): fe.id for fe in cfg.full_exprs.values() if fe.expr is not None}


def compile_program(
    program: Program,
    spec: HardwareSpec,
    cfg: ProgramCfg,
    cap: int = DEFAULT_CAP,
    split_wide_accesses: bool = True,
) -> Dict[str, FunctionCode]:
    fe_ids = full_expr_ids(cfg)
    code = {
        fn.name: CodeGenerator(fn, spec, fe_ids, cap, split_wide_accesses).generate()
        for fn in program.all_functions()
    }
    logger.info(
        f"compiled {len(code)} functions into {sum(len(c.instrs) for c in code.values())} micro-instructions"
    )
    return code
