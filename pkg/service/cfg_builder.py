import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from domain.ast import (
    COMPARISON_OPS, Expr, ExprKind, FunctionDef, Program, SourceLocation, Stmt, StmtKind, Storage, VarDecl,
)
from domain.c_types import UINT8, CType
from domain.cfg import CfgNode, FullExpr, FunctionCfg, NodeKind, ProgramCfg
from domain.exceptions import UnsupportedConstruct
from domain.memloc import MemLoc
from service.printer import format_expr
from service.resolver import BUILTINS


logger = logging.getLogger(__name__)

Pending = List[Tuple[int, int]]


def has_side_effects(expr: Expr) -> bool:
    return any(node.kind in (ExprKind.CALL, ExprKind.ASSIGN) for node in expr.walk())


def reads_memory(expr: Expr) -> bool:
    for node in expr.walk():
        if node.kind == ExprKind.VAR and not (node.decl and node.decl.temporary):
            return True
        if node.kind in (ExprKind.INDEX, ExprKind.DEREF, ExprKind.VCAST):
            return True
    return False


def const(value: int, loc: SourceLocation) -> Expr:
    return Expr(ExprKind.CONST, loc, value=value, ctype=UINT8)


@dataclass
class Loop:
    continue_target: int
    breaks: Pending = field(default_factory=list)


class FunctionLowerer:
    """
    Lowers one function body into CFG nodes. Control flow is threaded through
    `pending`: the (node, successor slot) pairs that the next node attaches to.
    """

    def __init__(self, cfg: ProgramCfg, fn: FunctionDef):
        self.cfg = cfg
        self.fn = fn
        self.pending: Pending = []
        self.current_fe: Optional[FullExpr] = None
        self.loops: List[Loop] = []
        self.temps: List[VarDecl] = []
        self.node_ids: List[int] = []

    # -- node plumbing -------------------------------------------------

    def new_node(self, kind: NodeKind, loc: Optional[SourceLocation], synthetic: bool = False, **fields) -> CfgNode:
        node = CfgNode(self.cfg.new_id(), kind, self.fn.name, loc, synthetic=synthetic, **fields)
        if kind == NodeKind.GUARD:
            node.successors = [None, None]
        if not synthetic and self.current_fe is not None:
            node.full_expr = self.current_fe.id
        node.label = node_label(node)
        self.cfg.nodes[node.id] = node
        self.node_ids.append(node.id)
        return node

    def connect(self, pending: Pending, target: int) -> None:
        for node_id, slot in pending:
            successors = self.cfg.nodes[node_id].successors
            while len(successors) <= slot:
                successors.append(None)
            successors[slot] = target

    def attach(self, node: CfgNode) -> CfgNode:
        self.connect(self.pending, node.id)
        self.pending = [(node.id, 0)] if node.kind != NodeKind.GUARD else []
        return node

    def emit(self, kind: NodeKind, loc: Optional[SourceLocation], **fields) -> CfgNode:
        return self.attach(self.new_node(kind, loc, **fields))

    def label_node(self, text: str, loc: Optional[SourceLocation]) -> CfgNode:
        return self.new_node(NodeKind.NOP, loc, synthetic=True, label=text)

    def new_temp(self, ctype: CType, loc: SourceLocation) -> Expr:
        name = f"$t{len(self.temps)}"
        decl = VarDecl(
            name, ctype.unqualified(), Storage.LOCAL, loc=loc, function=self.fn.name, temporary=True, key=name,
        )
        self.temps.append(decl)
        return Expr(ExprKind.VAR, loc, name=name, ctype=decl.ctype, decl=decl)

    def begin_full_expr(self, expr: Optional[Expr], loc: SourceLocation) -> FullExpr:
        fe = FullExpr(self.cfg.new_id(), self.fn.name, expr=expr, loc=loc)
        self.cfg.full_exprs[fe.id] = fe
        self.current_fe = fe
        return fe

    def end_full_expr(self) -> None:
        self.current_fe = None

    # -- functions -----------------------------------------------------

    def lower(self) -> FunctionCfg:
        entry = self.label_node("entry", self.fn.loc)
        exit_node = self.label_node("exit", self.fn.loc)
        self.exit_id = exit_node.id
        self.pending = [(entry.id, 0)]
        self.stmt(self.fn.body)
        self.connect(self.pending, exit_node.id)
        self.pending = []
        graph = FunctionCfg(self.fn.name, entry.id, exit_node.id, temps=self.temps, is_isr=self.fn.is_isr)
        graph.nodes = self.reachable(entry.id, exit_node.id)
        return graph

    def reachable(self, entry: int, exit_id: int) -> List[int]:
        seen = {entry}
        stack = [entry]
        while stack:
            for succ in self.cfg.nodes[stack.pop()].successors:
                if succ is not None and succ not in seen:
                    seen.add(succ)
                    stack.append(succ)
        seen.add(exit_id)
        for node_id in self.node_ids:
            if node_id not in seen:
                del self.cfg.nodes[node_id]
        return [node_id for node_id in self.node_ids if node_id in seen]

    # -- statements ----------------------------------------------------

    def stmt(self, stmt: Stmt) -> None:
        kind = stmt.kind
        if kind == StmtKind.BLOCK:
            for child in stmt.stmts:
                self.stmt(child)
        elif kind == StmtKind.DECL:
            decl = stmt.decl
            if decl.init is not None:
                self.begin_full_expr(decl.init, stmt.loc)
                target = Expr(ExprKind.VAR, decl.loc, name=decl.name, ctype=decl.ctype, decl=decl)
                self.store(target, decl.init, stmt.loc)
                self.end_full_expr()
        elif kind == StmtKind.EXPR:
            self.begin_full_expr(stmt.expr, stmt.expr.loc)
            self.effect(stmt.expr)
            self.end_full_expr()
        elif kind == StmtKind.EMPTY:
            self.begin_full_expr(None, stmt.loc)
            self.emit(NodeKind.NOP, stmt.loc, label=";")
            self.end_full_expr()
        elif kind == StmtKind.IF:
            on_true, on_false = self.full_condition(stmt.cond)
            self.pending = on_true
            self.stmt(stmt.body)
            after_body = self.pending
            self.pending = on_false
            if stmt.orelse is not None:
                self.stmt(stmt.orelse)
            self.pending = self.pending + after_body
        elif kind == StmtKind.WHILE:
            head = self.attach(self.label_node("while", stmt.loc))
            on_true, on_false = self.full_condition(stmt.cond)
            loop = Loop(head.id)
            self.loop_body(loop, on_true, stmt.body)
            self.connect(self.pending, head.id)
            self.pending = on_false + loop.breaks
        elif kind == StmtKind.DO:
            head = self.attach(self.label_node("do", stmt.loc))
            check = self.label_node("do-cond", stmt.cond.loc)
            loop = Loop(check.id)
            self.loop_body(loop, self.pending, stmt.body)
            self.attach(check)
            on_true, on_false = self.full_condition(stmt.cond)
            self.connect(on_true, head.id)
            self.pending = on_false + loop.breaks
        elif kind == StmtKind.FOR:
            if stmt.init is not None:
                self.stmt(stmt.init)
            head = self.attach(self.label_node("for", stmt.loc))
            if stmt.cond is not None:
                on_true, on_false = self.full_condition(stmt.cond)
            else:
                on_true, on_false = self.pending, []
            step = self.label_node("for-step", stmt.step.loc if stmt.step is not None else stmt.loc)
            loop = Loop(step.id)
            self.loop_body(loop, on_true, stmt.body)
            self.attach(step)
            if stmt.step is not None:
                self.begin_full_expr(stmt.step, stmt.step.loc)
                self.effect(stmt.step)
                self.end_full_expr()
            self.connect(self.pending, head.id)
            self.pending = on_false + loop.breaks
        elif kind == StmtKind.RETURN:
            self.begin_full_expr(stmt.expr, stmt.expr.loc if stmt.expr is not None else stmt.loc)
            value = self.value(stmt.expr) if stmt.expr is not None else None
            self.emit(NodeKind.RETURN, stmt.loc, value=value)
            self.connect(self.pending, self.exit_id)
            self.pending = []
            self.end_full_expr()
        elif kind == StmtKind.BREAK:
            self.loops[-1].breaks.extend(self.pending)
            self.pending = []
        elif kind == StmtKind.CONTINUE:
            self.connect(self.pending, self.loops[-1].continue_target)
            self.pending = []
        else:
            raise UnsupportedConstruct(f"statement kind {kind.value}", stmt.loc)

    def loop_body(self, loop: Loop, entry: Pending, body: Stmt) -> None:
        self.loops.append(loop)
        self.pending = entry
        self.stmt(body)
        self.loops.pop()

    def full_condition(self, cond: Expr) -> Tuple[Pending, Pending]:
        self.begin_full_expr(cond, cond.loc)
        result = self.condition(cond)
        self.end_full_expr()
        return result

    # -- expressions ---------------------------------------------------

    def rebuild(self, expr: Expr, children: List[Expr]) -> Expr:
        return Expr(
            expr.kind, expr.loc, children, op=expr.op, value=expr.value, name=expr.name,
            ctype=expr.ctype, decl=expr.decl,
        )

    def spill(self, expr: Expr) -> Expr:
        temp = self.new_temp(expr.ctype, expr.loc)
        self.emit(NodeKind.ASSIGN, expr.loc, target=temp, value=expr)
        return temp

    def value(self, expr: Expr) -> Optional[Expr]:
        """Emit nodes for the side effects of `expr`; return its pure remainder."""
        kind = expr.kind
        if kind in (ExprKind.CONST, ExprKind.VAR):
            return expr
        if kind in (ExprKind.UNARY, ExprKind.BINARY):
            children = []
            for position, child in enumerate(expr.children):
                lowered = self.value(child)
                later = expr.children[position + 1:]
                if any(has_side_effects(other) for other in later) and reads_memory(lowered):
                    lowered = self.spill(lowered)
                children.append(lowered)
            return self.rebuild(expr, children)
        if kind == ExprKind.LOGIC:
            dest = self.new_temp(UINT8, expr.loc)
            self.logic_into(expr, dest)
            return dest
        if kind == ExprKind.COMMA:
            self.effect(expr.children[0])
            return self.value(expr.children[1])
        if kind == ExprKind.CALL:
            return self.call(expr, keep_result=True)
        if kind == ExprKind.ASSIGN:
            return self.assign(expr, need_value=True)
        if kind in (ExprKind.INDEX, ExprKind.DEREF, ExprKind.VCAST, ExprKind.ADDR):
            if kind == ExprKind.INDEX:
                return self.rebuild(expr, [self.value(expr.children[0]), self.value(expr.children[1])])
            if kind == ExprKind.DEREF:
                return self.rebuild(expr, [self.value(expr.children[0])])
            return self.rebuild(expr, [self.lvalue(expr.children[0])])
        raise UnsupportedConstruct(f"expression kind {kind.value}", expr.loc)

    def lvalue(self, expr: Expr) -> Expr:
        if expr.kind == ExprKind.VAR:
            return expr
        if expr.kind == ExprKind.INDEX:
            return self.rebuild(expr, [self.value(expr.children[0]), self.value(expr.children[1])])
        if expr.kind == ExprKind.DEREF:
            return self.rebuild(expr, [self.value(expr.children[0])])
        if expr.kind == ExprKind.VCAST:
            return self.rebuild(expr, [self.lvalue(expr.children[0])])
        raise UnsupportedConstruct("not an lvalue", expr.loc)

    def call(self, expr: Expr, keep_result: bool) -> Optional[Expr]:
        args = [self.value(arg) for arg in expr.children]
        if expr.name in BUILTINS:
            self.emit(NodeKind.CALL, expr.loc, callee=expr.name, args=[])
            return None
        result = None
        if keep_result and expr.ctype is not None and not expr.ctype.is_void:
            result = self.new_temp(expr.ctype, expr.loc)
        self.emit(
            NodeKind.CALL, expr.loc, callee=expr.name, args=args, result=result.decl if result is not None else None,
        )
        return result

    def assign(self, expr: Expr, need_value: bool) -> Optional[Expr]:
        target = self.lvalue(expr.lvalue)
        if expr.read_write:
            operator = expr.rhs
            other = self.value(operator.children[1])
            if need_value and expr.postfix:
                old = self.spill(target)
                combined = Expr(ExprKind.BINARY, operator.loc, [old, other], op=operator.op, ctype=operator.ctype)
                self.emit(NodeKind.ASSIGN, expr.loc, target=target, value=combined)
                return old
            value = Expr(ExprKind.BINARY, operator.loc, [target, other], op=operator.op, ctype=operator.ctype)
        elif expr.rhs.kind == ExprKind.LOGIC and target.kind == ExprKind.VAR and not need_value:
            self.logic_into(expr.rhs, target)
            return None
        else:
            value = self.value(expr.rhs)
        if need_value and value.kind != ExprKind.CONST:
            temp = self.new_temp(target.ctype, expr.loc)
            self.emit(NodeKind.ASSIGN, expr.loc, target=temp, value=value)
            self.emit(NodeKind.ASSIGN, expr.loc, target=target, value=temp)
            return temp
        self.emit(NodeKind.ASSIGN, expr.loc, target=target, value=value)
        return value if need_value else None

    def store(self, target: Expr, value: Expr, loc: SourceLocation) -> None:
        if value.kind == ExprKind.LOGIC:
            self.logic_into(value, target)
            return
        self.emit(NodeKind.ASSIGN, loc, target=target, value=self.value(value))

    def effect(self, expr: Expr) -> None:
        kind = expr.kind
        if kind == ExprKind.ASSIGN:
            self.assign(expr, need_value=False)
        elif kind == ExprKind.CALL:
            self.call(expr, keep_result=False)
        elif kind == ExprKind.COMMA:
            self.effect(expr.children[0])
            self.effect(expr.children[1])
        elif kind == ExprKind.LOGIC:
            on_true, on_false = self.condition(expr)
            self.pending = on_true + on_false
        else:
            value = self.value(expr)
            self.emit(NodeKind.NOP, expr.loc, value=value)

    def truth_into(self, expr: Expr, dest: Expr) -> None:
        if expr.kind == ExprKind.LOGIC:
            self.logic_into(expr, dest)
            return
        value = self.value(expr)
        if not (value.kind == ExprKind.BINARY and value.op in COMPARISON_OPS) and not (
            value.kind == ExprKind.UNARY and value.op == "!"
        ):
            value = Expr(ExprKind.BINARY, expr.loc, [value, const(0, expr.loc)], op="!=", ctype=UINT8)
        self.emit(NodeKind.ASSIGN, expr.loc, target=dest, value=value)

    def logic_into(self, expr: Expr, dest: Expr) -> None:
        """dest := expr for && / ||, one branch per short-circuit outcome."""
        left, right = expr.children
        on_true, on_false = self.condition(left)
        short = on_false if expr.op == "&&" else on_true
        rest = on_true if expr.op == "&&" else on_false
        self.pending = short
        self.emit(NodeKind.ASSIGN, expr.loc, target=dest, value=const(0 if expr.op == "&&" else 1, expr.loc))
        after_short = self.pending
        self.pending = rest
        self.truth_into(right, dest)
        self.pending = self.pending + after_short

    def condition(self, expr: Expr) -> Tuple[Pending, Pending]:
        kind = expr.kind
        if kind == ExprKind.LOGIC:
            left_true, left_false = self.condition(expr.children[0])
            if expr.op == "&&":
                self.pending = left_true
                right_true, right_false = self.condition(expr.children[1])
                return right_true, left_false + right_false
            self.pending = left_false
            right_true, right_false = self.condition(expr.children[1])
            return left_true + right_true, right_false
        if kind == ExprKind.UNARY and expr.op == "!":
            on_true, on_false = self.condition(expr.children[0])
            return on_false, on_true
        if kind == ExprKind.COMMA:
            self.effect(expr.children[0])
            return self.condition(expr.children[1])
        value = self.value(expr)
        guard = self.emit(NodeKind.GUARD, expr.loc, cond=value)
        return [(guard.id, 0)], [(guard.id, 1)]


def node_label(node: CfgNode) -> str:
    if node.label:
        return node.label
    if node.kind == NodeKind.ASSIGN:
        return f"{format_expr(node.target)} := {format_expr(node.value)}"
    if node.kind == NodeKind.GUARD:
        return f"{format_expr(node.cond)} ?"
    if node.kind == NodeKind.CALL:
        call = f"{node.callee}({', '.join(format_expr(arg) for arg in node.args)})"
        return f"{node.result.name} := {call}" if node.result is not None else call
    if node.kind == NodeKind.RETURN:
        return "return" if node.value is None else f"return {format_expr(node.value)}"
    if node.kind == NodeKind.NOP and node.value is not None:
        return f"eval {format_expr(node.value)}"
    return node.kind.value


def lower_function(fn: FunctionDef, cfg: Optional[ProgramCfg] = None) -> FunctionCfg:
    cfg = cfg if cfg is not None else ProgramCfg()
    graph = FunctionLowerer(cfg, fn).lower()
    cfg.functions[fn.name] = graph
    return graph


def mark_full_expressions(cfg: ProgramCfg) -> List[FullExpr]:
    """Fill member lists, entries and exit edges of every full expression."""
    for fe in cfg.full_exprs.values():
        fe.nodes = []
    for name, graph in cfg.functions.items():
        for node_id in graph.nodes:
            node = cfg.nodes[node_id]
            if node.full_expr is not None:
                cfg.full_exprs[node.full_expr].nodes.append(node_id)
    for fe_id in [fe_id for fe_id, fe in cfg.full_exprs.items() if not fe.nodes]:
        del cfg.full_exprs[fe_id]
    for fe in cfg.full_exprs.values():
        fe.nodes.sort()
        fe.entry = fe.nodes[0]
        members = set(fe.nodes)
        exits = []
        for node_id in fe.nodes:
            for succ in cfg.nodes[node_id].successors:
                if succ not in members and succ not in exits:
                    exits.append(succ)
        fe.exits = tuple(exits)
    return sorted(cfg.full_exprs.values(), key=lambda fe: fe.id)


def build_program_cfg(program: Program) -> ProgramCfg:
    cfg = ProgramCfg()
    for decl in program.globals:
        cfg.locations.add_decl(decl)
    for fn in program.all_functions():
        graph = lower_function(fn, cfg)
        for decl in fn.params + fn.locals + graph.temps:
            cfg.locations.add_decl(decl)
        if not fn.ret_type.is_void:
            cfg.locations.add(MemLoc.return_slot(fn.name), fn.ret_type.unqualified())
    mark_full_expressions(cfg)
    logger.info(
        f"lowered {len(cfg.functions)} functions into {len(cfg.nodes)} nodes, "
        f"{len(cfg.full_exprs)} full expressions"
    )
    return cfg


def to_dot(cfg: ProgramCfg, names: Optional[List[str]] = None) -> str:
    """DOT text, one digraph per function."""
    graphs = []
    for name in names or list(cfg.functions):
        graph = cfg.functions[name]
        lines = [f'digraph "{name}" {{', "  node [shape=box];"]
        for node_id in graph.nodes:
            node = cfg.nodes[node_id]
            text = node.label.replace('"', '\\"')
            if node.full_expr is not None:
                text += f"\\nFE{node.full_expr}"
            shape = ' shape=diamond' if node.kind == NodeKind.GUARD else ""
            shape = ' shape=ellipse' if node.kind == NodeKind.ISR_FIXPOINT else shape
            lines.append(f'  n{node_id} [label="{text}"{shape}];')
        for node_id in graph.nodes:
            node = cfg.nodes[node_id]
            for slot, succ in enumerate(node.successors):
                label = ""
                if node.is_guard:
                    label = ' [label="T"]' if slot == 0 else ' [label="F"]'
                lines.append(f"  n{node_id} -> n{succ}{label};")
        lines.append("}")
        graphs.append("\n".join(lines))
    return "\n".join(graphs) + "\n"
