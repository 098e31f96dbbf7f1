from typing import List

from domain.ast import Expr, ExprKind, FunctionDef, Program, Stmt, StmtKind, VarDecl
from domain.c_types import CType


INDENT = "    "


def format_type(ctype: CType, name: str) -> str:
    """Declarator text for `name`; arrays put their length after the name."""
    if ctype.is_array:
        return f"{format_type(ctype.elem, name)}[{ctype.length}]"
    stars = ""
    while ctype.is_pointer:
        stars += "*"
        ctype = ctype.elem
    base = f"{'int' if ctype.signed else 'uint'}{ctype.bits}" if ctype.is_integer else "void"
    if ctype.volatile:
        base = f"volatile {base}"
    return f"{base}{stars} {name}"


def format_expr(expr: Expr) -> str:
    kind = expr.kind
    if kind == ExprKind.CONST:
        return str(expr.value)
    if kind == ExprKind.VAR:
        return expr.name
    if kind == ExprKind.UNARY:
        return f"{expr.op}({format_expr(expr.children[0])})"
    if kind in (ExprKind.BINARY, ExprKind.LOGIC):
        left, right = expr.children
        return f"({format_expr(left)} {expr.op} {format_expr(right)})"
    if kind == ExprKind.COMMA:
        return f"({format_expr(expr.children[0])}, {format_expr(expr.children[1])})"
    if kind == ExprKind.CALL:
        return f"{expr.name}({', '.join(format_expr(arg) for arg in expr.children)})"
    if kind == ExprKind.ASSIGN:
        target = format_expr(expr.lvalue)
        if expr.op in ("++", "--"):
            return f"({target}{expr.op})" if expr.postfix else f"({expr.op}{target})"
        value = expr.rhs.children[1] if expr.read_write else expr.rhs
        return f"({target} {expr.op} {format_expr(value)})"
    if kind == ExprKind.INDEX:
        return f"{format_expr(expr.children[0])}[{format_expr(expr.children[1])}]"
    if kind == ExprKind.ADDR:
        return f"&({format_expr(expr.children[0])})"
    if kind == ExprKind.DEREF:
        return f"*({format_expr(expr.children[0])})"
    if kind == ExprKind.VCAST:
        return f"{expr.op}({format_expr(expr.children[0])})"
    raise ValueError(f"unknown expression kind {kind}")


def format_decl(decl: VarDecl) -> str:
    text = format_type(decl.ctype, decl.name)
    if decl.absolute_address is not None:
        text += f" @ 0x{decl.absolute_address:02X}"
        if decl.bit is not None:
            text += f" : {decl.bit}"
    if decl.init is not None:
        text += f" = {format_expr(decl.init)}"
    return text + ";"


def format_stmt(stmt: Stmt, depth: int) -> List[str]:
    pad = INDENT * depth
    kind = stmt.kind
    if kind == StmtKind.BLOCK:
        lines = [pad + "{"]
        for child in stmt.stmts:
            lines.extend(format_stmt(child, depth + 1))
        return lines + [pad + "}"]
    if kind == StmtKind.DECL:
        return [pad + format_decl(stmt.decl)]
    if kind == StmtKind.EXPR:
        return [pad + format_expr(stmt.expr) + ";"]
    if kind == StmtKind.EMPTY:
        return [pad + ";"]
    if kind == StmtKind.IF:
        lines = [pad + f"if ({format_expr(stmt.cond)})"] + format_stmt(stmt.body, depth + 1)
        if stmt.orelse is not None:
            lines += [pad + "else"] + format_stmt(stmt.orelse, depth + 1)
        return lines
    if kind == StmtKind.WHILE:
        return [pad + f"while ({format_expr(stmt.cond)})"] + format_stmt(stmt.body, depth + 1)
    if kind == StmtKind.DO:
        return [pad + "do"] + format_stmt(stmt.body, depth + 1) + [pad + f"while ({format_expr(stmt.cond)});"]
    if kind == StmtKind.FOR:
        init = format_stmt(stmt.init, 0)[0] if stmt.init is not None else ";"
        cond = format_expr(stmt.cond) if stmt.cond is not None else ""
        step = format_expr(stmt.step) if stmt.step is not None else ""
        return [pad + f"for ({init} {cond}; {step})"] + format_stmt(stmt.body, depth + 1)
    if kind == StmtKind.RETURN:
        return [pad + ("return;" if stmt.expr is None else f"return {format_expr(stmt.expr)};")]
    return [pad + f"{kind.value};"]


def format_function(fn: FunctionDef) -> List[str]:
    if fn.is_isr:
        header = f"ISR({fn.isr_vector})"
    else:
        params = ", ".join(format_type(p.ctype, p.name) for p in fn.params) or "void"
        header = f"{format_type(fn.ret_type, fn.name)}({params})"
    return [header] + format_stmt(fn.body, 0)


def format_program(program: Program) -> str:
    """Render a parsed program back to Mini-C; re-parsing yields the same shape."""
    lines = [format_decl(decl) for decl in program.globals]
    for fn in program.functions + program.isrs:
        lines.append("")
        lines.extend(format_function(fn))
    return "\n".join(lines) + "\n"
