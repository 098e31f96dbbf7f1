import logging
from typing import Dict, List, Optional

import networkx as nx

from domain.ast import Expr, ExprKind, FunctionDef, Program, Stmt, StmtKind, Storage, VarDecl
from domain.c_types import INT8, INT16, UINT8, CType, literal_type, pointer_to, promote, BASE_TYPES
from domain.exceptions import (
    DuplicateDefinition, EntryPointError, RecursionUnsupported, TypeMismatch,
    UndeclaredIdentifier, UnsupportedConstruct,
)
from service.parser import VOLATILE_CASTS


logger = logging.getLogger(__name__)

BUILTINS = ("sei", "cli")


def fold_constant(expr: Expr) -> Optional[int]:
    """Value of a constant expression over literals, or None."""
    if expr.kind == ExprKind.CONST:
        return expr.value
    if expr.kind == ExprKind.UNARY:
        inner = fold_constant(expr.children[0])
        if inner is None:
            return None
        if expr.op == "-":
            return -inner
        if expr.op == "~":
            return ~inner
        return int(not inner)
    if expr.kind == ExprKind.BINARY:
        left, right = fold_constant(expr.children[0]), fold_constant(expr.children[1])
        if left is None or right is None:
            return None
        if expr.op in ("/", "%") and right == 0:
            return None
        return {
            "+": lambda: left + right, "-": lambda: left - right, "*": lambda: left * right,
            "/": lambda: int(left / right), "%": lambda: left - int(left / right) * right,
            "<<": lambda: left << right, ">>": lambda: left >> right,
            "|": lambda: left | right, "&": lambda: left & right, "^": lambda: left ^ right,
            "<": lambda: int(left < right), "<=": lambda: int(left <= right),
            ">": lambda: int(left > right), ">=": lambda: int(left >= right),
            "==": lambda: int(left == right), "!=": lambda: int(left != right),
        }[expr.op]()
    return None


class Scope:
    def __init__(self, parent: Optional["Scope"] = None):
        self.parent = parent
        self.names: Dict[str, VarDecl] = {}

    def lookup(self, name: str) -> Optional[VarDecl]:
        scope = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None


class Resolver:
    """
    Links identifiers to declarations and computes the static type of every
    expression. Types follow the Mini-C promotion rules (see c_types.promote).
    """

    def __init__(self, program: Program):
        self.program = program
        self.functions: Dict[str, FunctionDef] = {}
        self.current: Optional[FunctionDef] = None
        self.local_counts: Dict[str, int] = {}

    def resolve(self) -> Program:
        globals_scope = Scope()
        for decl in self.program.globals:
            if decl.name in globals_scope.names or decl.name in BUILTINS or decl.name in VOLATILE_CASTS:
                raise DuplicateDefinition(f"'{decl.name}' is already declared", decl.loc)
            globals_scope.names[decl.name] = decl
            decl.key = decl.name
            if decl.bit is not None and not decl.ctype.is_integer:
                raise TypeMismatch(f"register bit '{decl.name}' must have an integer type", decl.loc)
            if decl.init is not None:
                self.resolve_global_init(decl, globals_scope)

        for fn in self.program.all_functions():
            if fn.name in self.functions or fn.name in BUILTINS:
                what = "ISR" if fn.is_isr else "function"
                raise DuplicateDefinition(f"{what} '{fn.name}' is defined twice", fn.loc)
            if fn.name in globals_scope.names:
                raise DuplicateDefinition(f"'{fn.name}' is already declared as a variable", fn.loc)
            self.functions[fn.name] = fn

        for fn in self.program.all_functions():
            self.resolve_function(fn, globals_scope)

        check_recursion(self.program)
        self.check_isr_bodies()
        logger.debug(f"resolved {len(self.functions)} functions in {self.program.file}")
        return self.program

    def resolve_global_init(self, decl: VarDecl, scope: Scope) -> None:
        if decl.ctype.is_array or decl.ctype.is_pointer:
            raise UnsupportedConstruct("only integer globals take an initializer", decl.loc)
        self.expr(decl.init, scope)
        value = fold_constant(decl.init)
        if value is None:
            raise TypeMismatch("global initializer must be a constant", decl.init.loc)
        if not decl.value_type().contains(value):
            raise TypeMismatch(f"initializer {value} does not fit {decl.ctype}", decl.init.loc)

    # -- functions -----------------------------------------------------

    def declare_local(self, decl: VarDecl, scope: Scope) -> None:
        fn = self.current
        if decl.name in scope.names:
            raise DuplicateDefinition(f"'{decl.name}' is already declared in this scope", decl.loc)
        if decl.ctype.is_void:
            raise TypeMismatch(f"variable '{decl.name}' has type void", decl.loc)
        count = self.local_counts.get(decl.name, 0)
        self.local_counts[decl.name] = count + 1
        decl.key = decl.name if count == 0 else f"{decl.name}#{count}"
        decl.function = fn.name
        scope.names[decl.name] = decl
        fn.locals.append(decl)

    def resolve_function(self, fn: FunctionDef, globals_scope: Scope) -> None:
        self.current = fn
        self.local_counts = {}
        fn.locals = []
        scope = Scope(globals_scope)
        for param in fn.params:
            if param.ctype.is_void:
                raise TypeMismatch(f"parameter '{param.name}' has type void", param.loc)
            if param.name in scope.names:
                raise DuplicateDefinition(f"parameter '{param.name}' declared twice", param.loc)
            self.local_counts[param.name] = 1
            param.key = param.name
            param.function = fn.name
            scope.names[param.name] = param
        self.stmt(fn.body, Scope(scope), loop_depth=0)
        self.current = None

    def stmt(self, stmt: Stmt, scope: Scope, loop_depth: int) -> None:
        kind = stmt.kind
        if kind == StmtKind.BLOCK:
            inner = Scope(scope)
            for child in stmt.stmts:
                self.stmt(child, inner, loop_depth)
        elif kind == StmtKind.DECL:
            if stmt.decl.init is not None:
                if stmt.decl.ctype.is_array:
                    raise UnsupportedConstruct("array initializers are not part of Mini-C", stmt.decl.loc)
                self.value(stmt.decl.init, scope)
                self.check_assignable(stmt.decl.ctype, stmt.decl.init)
            self.declare_local(stmt.decl, scope)
        elif kind == StmtKind.EXPR:
            self.expr(stmt.expr, scope)
        elif kind == StmtKind.IF:
            self.condition(stmt.cond, scope)
            self.stmt(stmt.body, Scope(scope), loop_depth)
            if stmt.orelse is not None:
                self.stmt(stmt.orelse, Scope(scope), loop_depth)
        elif kind in (StmtKind.WHILE, StmtKind.DO):
            self.condition(stmt.cond, scope)
            self.stmt(stmt.body, Scope(scope), loop_depth + 1)
        elif kind == StmtKind.FOR:
            inner = Scope(scope)
            if stmt.init is not None:
                self.stmt(stmt.init, inner, loop_depth)
            if stmt.cond is not None:
                self.condition(stmt.cond, inner)
            if stmt.step is not None:
                self.expr(stmt.step, inner)
            self.stmt(stmt.body, Scope(inner), loop_depth + 1)
        elif kind == StmtKind.RETURN:
            ret = self.current.ret_type
            if stmt.expr is None:
                if not ret.is_void:
                    raise TypeMismatch(f"'{self.current.name}' must return a value", stmt.loc)
            else:
                if ret.is_void:
                    raise TypeMismatch(f"void function '{self.current.name}' returns a value", stmt.loc)
                self.value(stmt.expr, scope)
                self.check_assignable(ret, stmt.expr)
        elif kind in (StmtKind.BREAK, StmtKind.CONTINUE):
            if loop_depth == 0:
                raise UnsupportedConstruct(f"'{kind.value}' outside of a loop", stmt.loc)

    def condition(self, expr: Expr, scope: Scope) -> None:
        self.value(expr, scope)
        if not expr.ctype.is_scalar:
            raise TypeMismatch("condition must be a scalar", expr.loc)

    # -- expressions ---------------------------------------------------

    def value(self, expr: Expr, scope: Scope) -> CType:
        """Resolve an expression whose value is used; arrays decay to pointers."""
        ctype = self.expr(expr, scope)
        if ctype.is_void:
            raise TypeMismatch("void value used in an expression", expr.loc)
        if ctype.is_array:
            return pointer_to(ctype.elem)
        return ctype

    def integer(self, expr: Expr, scope: Scope) -> CType:
        ctype = self.value(expr, scope)
        if not ctype.is_integer:
            raise TypeMismatch(f"integer operand expected, found {ctype}", expr.loc)
        return ctype

    def check_assignable(self, target: CType, expr: Expr) -> None:
        source = expr.ctype
        if target.is_array or source.is_void:
            raise TypeMismatch(f"cannot assign {source} to {target}", expr.loc)
        if target.is_integer:
            if not source.is_integer:
                raise TypeMismatch(f"cannot assign {source} to {target}", expr.loc)
            return
        # pointer target
        if source.is_integer:
            if fold_constant(expr) == 0:
                return
            raise TypeMismatch(f"cannot assign {source} to {target}", expr.loc)
        elem = source.elem
        if elem is None or elem.unqualified() != target.elem.unqualified():
            raise TypeMismatch(f"cannot assign {source} to {target}", expr.loc)

    def expr(self, expr: Expr, scope: Scope) -> CType:
        handler = getattr(self, f"expr_{expr.kind.value}")
        expr.ctype = handler(expr, scope)
        return expr.ctype

    def expr_const(self, expr: Expr, scope: Scope) -> CType:
        return literal_type(expr.value)

    def expr_var(self, expr: Expr, scope: Scope) -> CType:
        decl = scope.lookup(expr.name)
        if decl is None:
            if expr.name in self.functions or expr.name in BUILTINS:
                raise UnsupportedConstruct(f"function '{expr.name}' used as a value", expr.loc)
            raise UndeclaredIdentifier(f"'{expr.name}' is not declared", expr.loc)
        expr.decl = decl
        return decl.ctype

    def expr_unary(self, expr: Expr, scope: Scope) -> CType:
        operand = expr.children[0]
        if expr.op == "!":
            self.condition(operand, scope)
            return UINT8
        ctype = self.integer(operand, scope)
        if expr.op == "-" and operand.kind == ExprKind.CONST:
            return INT8 if operand.value <= 128 else INT16
        return ctype.unqualified()

    def expr_binary(self, expr: Expr, scope: Scope) -> CType:
        left, right = expr.children
        if expr.op in ("==", "!="):
            lt, rt = self.value(left, scope), self.value(right, scope)
            if lt.is_pointer or rt.is_pointer:
                if lt.is_integer and fold_constant(left) != 0 or rt.is_integer and fold_constant(right) != 0:
                    raise TypeMismatch("pointer compared with a non-null integer", expr.loc)
                return UINT8
            return UINT8
        lt, rt = self.value(left, scope), self.value(right, scope)
        if lt.is_pointer or rt.is_pointer:
            raise UnsupportedConstruct("pointer arithmetic is not part of Mini-C", expr.loc)
        if expr.op in ("<", "<=", ">", ">="):
            return UINT8
        if expr.op in ("<<", ">>"):
            return lt.unqualified()
        return promote(lt, rt)

    def expr_logic(self, expr: Expr, scope: Scope) -> CType:
        for child in expr.children:
            self.condition(child, scope)
        return UINT8

    def expr_comma(self, expr: Expr, scope: Scope) -> CType:
        self.expr(expr.children[0], scope)
        return self.expr(expr.children[1], scope)

    def expr_call(self, expr: Expr, scope: Scope) -> CType:
        if expr.name in BUILTINS:
            if expr.children:
                raise TypeMismatch(f"{expr.name}() takes no arguments", expr.loc)
            return BASE_TYPES["void"]
        if scope.lookup(expr.name) is not None and expr.name not in self.functions:
            raise UnsupportedConstruct(f"'{expr.name}' is not a function", expr.loc)
        callee = self.functions.get(expr.name)
        if callee is None:
            raise UndeclaredIdentifier(f"function '{expr.name}' is not defined", expr.loc)
        if callee.is_isr:
            raise UnsupportedConstruct(f"ISR '{expr.name}' cannot be called", expr.loc)
        if len(expr.children) != len(callee.params):
            raise TypeMismatch(
                f"'{expr.name}' expects {len(callee.params)} arguments, got {len(expr.children)}", expr.loc
            )
        for arg, param in zip(expr.children, callee.params):
            self.value(arg, scope)
            self.check_assignable(param.ctype, arg)
        return callee.ret_type

    def expr_assign(self, expr: Expr, scope: Scope) -> CType:
        target, rhs = expr.children
        ttype = self.expr(target, scope)
        if ttype.is_array:
            raise TypeMismatch("cannot assign to an array", target.loc)
        if expr.read_write and not ttype.is_integer:
            raise UnsupportedConstruct(f"'{expr.op}' needs an integer operand", expr.loc)
        if expr.read_write:
            # the shared lvalue is already typed; only the operator node remains
            other = rhs.children[1]
            self.integer(other, scope)
            rhs.ctype = ttype.unqualified() if rhs.op in ("<<", ">>") else promote(ttype, other.ctype)
        else:
            self.value(rhs, scope)
        self.check_assignable(ttype, rhs)
        return ttype.unqualified()

    def expr_index(self, expr: Expr, scope: Scope) -> CType:
        base, index = expr.children
        btype = self.expr(base, scope)
        if not (btype.is_array or btype.is_pointer):
            raise TypeMismatch(f"subscripted value of type {btype} is not an array", base.loc)
        self.integer(index, scope)
        return btype.elem

    def expr_addr(self, expr: Expr, scope: Scope) -> CType:
        operand = expr.children[0]
        if operand.kind == ExprKind.VCAST:
            raise UnsupportedConstruct("address of a volatile cast", expr.loc)
        otype = self.expr(operand, scope)
        if operand.kind == ExprKind.VAR and operand.decl.bit is not None:
            raise UnsupportedConstruct("address of a register bit", expr.loc)
        if otype.is_array:
            return pointer_to(otype.elem)
        return pointer_to(otype)

    def expr_deref(self, expr: Expr, scope: Scope) -> CType:
        ptype = self.value(expr.children[0], scope)
        if not ptype.is_pointer:
            raise TypeMismatch(f"dereference of non-pointer type {ptype}", expr.loc)
        return ptype.elem

    def expr_vcast(self, expr: Expr, scope: Scope) -> CType:
        inner = expr.children[0]
        itype = self.expr(inner, scope)
        target = BASE_TYPES[VOLATILE_CASTS[expr.op]]
        if not itype.is_integer or itype.bits != target.bits:
            raise TypeMismatch(f"{expr.op}() applied to an lvalue of type {itype}", expr.loc)
        return target.qualified(True)

    # -- program-level checks ------------------------------------------

    def check_isr_bodies(self) -> None:
        graph = call_graph(self.program)
        for isr in self.program.isrs:
            reachable = {isr.name} | nx.descendants(graph, isr.name)
            for name in sorted(reachable):
                if graph.nodes[name].get("enables"):
                    raise UnsupportedConstruct(
                        f"ISR '{isr.name}' re-enables interrupts (nested interrupts are not supported)",
                        graph.nodes[name]["enables"],
                    )


def called_functions(stmt: Stmt) -> List[Expr]:
    calls = []

    def visit_expr(expr: Optional[Expr]) -> None:
        if expr is None:
            return
        calls.extend(node for node in expr.walk() if node.kind == ExprKind.CALL)

    def visit(node: Optional[Stmt]) -> None:
        if node is None:
            return
        for expr in (node.expr, node.cond, node.step):
            visit_expr(expr)
        if node.decl is not None:
            visit_expr(node.decl.init)
        for child in (node.init, node.body, node.orelse, *node.stmts):
            visit(child)

    visit(stmt)
    return calls


def call_graph(program: Program) -> nx.DiGraph:
    """Static call graph; builtins are recorded as node attributes, not nodes."""
    graph = nx.DiGraph()
    for fn in program.all_functions():
        graph.add_node(fn.name, isr=fn.is_isr, enables=None)
    for fn in program.all_functions():
        for call in called_functions(fn.body):
            if call.name == "sei":
                graph.nodes[fn.name]["enables"] = call.loc
            elif call.name not in BUILTINS and call.name in graph:
                graph.add_edge(fn.name, call.name)
    return graph


def check_recursion(program: Program) -> None:
    graph = call_graph(program)
    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        return
    names = " -> ".join([edge[0] for edge in cycle] + [cycle[-1][1]])
    fn = program.function(cycle[0][0])
    raise RecursionUnsupported(f"recursive call chain {names}", fn.loc if fn else None)


def check_entry(program: Program) -> FunctionDef:
    entries = [fn for fn in program.functions if fn.name == program.entry]
    if not entries:
        raise EntryPointError(f"no entry function '{program.entry}' in {program.file}")
    entry = entries[0]
    if entry.params:
        raise EntryPointError(f"entry function '{program.entry}' must not take parameters", entry.loc)
    return entry


def resolve_symbols(program: Program) -> Program:
    return Resolver(program).resolve()
