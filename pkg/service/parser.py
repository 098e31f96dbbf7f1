import logging
from typing import List, Optional

from domain.ast import (
    Expr, ExprKind, FunctionDef, Program, SourceLocation, Stmt, StmtKind, Storage, VarDecl,
)
from domain.c_types import BASE_TYPES, CType, array_of, pointer_to
from domain.exceptions import ParseError, UnsupportedConstruct
from service.lexer import Token, tokenize


logger = logging.getLogger(__name__)

VOLATILE_CASTS = {"vu8": "uint8", "vu16": "uint16", "vs8": "int8", "vs16": "int16"}

ASSIGN_OPS = {
    "=": None, "+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%",
    "<<=": "<<", ">>=": ">>", "&=": "&", "|=": "|", "^=": "^",
}

# binary precedence levels, loosest first
BINARY_LEVELS = [
    ("logic", ("||",)),
    ("logic", ("&&",)),
    ("binary", ("|",)),
    ("binary", ("^",)),
    ("binary", ("&",)),
    ("binary", ("==", "!=")),
    ("binary", ("<", "<=", ">", ">=")),
    ("binary", ("<<", ">>")),
    ("binary", ("+", "-")),
    ("binary", ("*", "/", "%")),
]


class Parser:
    """Recursive-descent parser for Mini-C; see docs/mini_c.md for the grammar."""

    def __init__(self, tokens: List[Token], file: str = "<input>", source: str = ""):
        self.tokens = tokens
        self.file = file
        self.source = source
        self.pos = 0
        self.prev_end = 0

    # -- token helpers -------------------------------------------------

    def peek(self, ahead: int = 0) -> Optional[Token]:
        index = self.pos + ahead
        return self.tokens[index] if index < len(self.tokens) else None

    def at(self, text: str, ahead: int = 0) -> bool:
        token = self.peek(ahead)
        return token is not None and token.text == text and token.kind in ("op", "semi", "keyword")

    def here(self) -> SourceLocation:
        token = self.peek()
        if token is not None:
            return token.loc
        if self.tokens:
            last = self.tokens[-1].loc
            return SourceLocation(last.line, last.column + (last.end - last.offset), last.end, last.end, self.file)
        return SourceLocation(1, 1, 0, 0, self.file)

    def advance(self) -> Token:
        token = self.peek()
        if token is None:
            raise ParseError("unexpected end of input", self.here())
        self.pos += 1
        self.prev_end = token.loc.end
        return token

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.peek()
            what = f"'{found.text}'" if found else "end of input"
            raise ParseError(f"unexpected {what}", self.here(), expected=[text])
        return self.advance()

    def expect_ident(self) -> Token:
        token = self.peek()
        if token is None or token.kind != "ident":
            what = f"'{token.text}'" if token else "end of input"
            raise ParseError(f"unexpected {what}", self.here(), expected=["identifier"])
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def span(self, start: SourceLocation) -> SourceLocation:
        return start.with_end(self.prev_end)

    # -- declarations --------------------------------------------------

    def starts_type(self) -> bool:
        token = self.peek()
        return token is not None and token.kind == "keyword" and (
            token.text == "volatile" or token.text in BASE_TYPES
        )

    def parse_type(self) -> CType:
        volatile = self.accept("volatile")
        token = self.peek()
        if token is None or token.kind != "keyword" or token.text not in BASE_TYPES:
            raise ParseError("expected a type", self.here(), expected=sorted(BASE_TYPES))
        self.advance()
        volatile = self.accept("volatile") or volatile
        ctype = BASE_TYPES[token.text].qualified(volatile)
        while self.accept("*"):
            ctype = pointer_to(ctype)
        return ctype

    def parse_array_suffix(self, ctype: CType) -> CType:
        if not self.accept("["):
            return ctype
        token = self.peek()
        if token is None or token.kind != "int":
            raise ParseError("array length must be an integer constant", self.here(), expected=["integer"])
        self.advance()
        self.expect("]")
        if token.value <= 0:
            raise ParseError("array length must be positive", token.loc)
        return array_of(ctype, token.value)

    def parse_program(self) -> Program:
        program = Program(file=self.file, source=self.source)
        while self.peek() is not None:
            if self.at("ISR"):
                program.isrs.append(self.parse_isr())
                continue
            start = self.here()
            ctype = self.parse_type()
            name = self.expect_ident()
            if self.at("("):
                program.functions.append(self.parse_function(ctype, name, start))
            else:
                program.globals.append(self.parse_global(ctype, name, start))
        logger.debug(
            f"parsed {self.file}: {len(program.globals)} globals, "
            f"{len(program.functions)} functions, {len(program.isrs)} ISRs"
        )
        return program

    def parse_global(self, ctype: CType, name: Token, start: SourceLocation) -> VarDecl:
        ctype = self.parse_array_suffix(ctype)
        decl = VarDecl(name.text, ctype, Storage.GLOBAL, loc=name.loc)
        if self.accept("@"):
            token = self.peek()
            if token is None or token.kind != "int":
                raise ParseError("expected an absolute address", self.here(), expected=["integer"])
            self.advance()
            decl.absolute_address = token.value
            if self.accept(":"):
                bit = self.peek()
                if bit is None or bit.kind != "int" or bit.value > 15:
                    raise ParseError("expected a bit index", self.here(), expected=["integer"])
                self.advance()
                decl.bit = bit.value
        if self.accept("="):
            decl.init = self.parse_assignment()
        self.expect(";")
        return decl

    def parse_params(self, function: str) -> List[VarDecl]:
        self.expect("(")
        params: List[VarDecl] = []
        if self.at("void") and self.at(")", 1):
            self.advance()
        if not self.at(")"):
            while True:
                ctype = self.parse_type()
                name = self.expect_ident()
                if self.at("["):
                    raise UnsupportedConstruct("array parameters are not part of Mini-C", name.loc)
                params.append(VarDecl(name.text, ctype, Storage.PARAM, loc=name.loc, function=function))
                if not self.accept(","):
                    break
        self.expect(")")
        return params

    def parse_function(self, ret_type: CType, name: Token, start: SourceLocation) -> FunctionDef:
        params = self.parse_params(name.text)
        if self.at(";"):
            raise UnsupportedConstruct("function prototypes are not part of Mini-C", name.loc)
        body = self.parse_block()
        return FunctionDef(name.text, ret_type, params, body, self.span(start))

    def parse_isr(self) -> FunctionDef:
        start = self.here()
        self.expect("ISR")
        self.expect("(")
        vector = self.expect_ident()
        self.expect(")")
        body = self.parse_block()
        return FunctionDef(vector.text, BASE_TYPES["void"], [], body, self.span(start), isr_vector=vector.text)

    # -- statements ----------------------------------------------------

    def parse_block(self) -> Stmt:
        start = self.here()
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                raise ParseError("unterminated block", self.here(), expected=["}"])
            stmts.append(self.parse_statement())
        self.expect("}")
        return Stmt(StmtKind.BLOCK, self.span(start), stmts=stmts)

    def parse_local(self) -> Stmt:
        start = self.here()
        ctype = self.parse_type()
        name = self.expect_ident()
        ctype = self.parse_array_suffix(ctype)
        decl = VarDecl(name.text, ctype, Storage.LOCAL, loc=name.loc)
        if self.at("@"):
            raise UnsupportedConstruct("absolute addresses are only allowed on globals", self.here())
        if self.accept("="):
            decl.init = self.parse_assignment()
        self.expect(";")
        return Stmt(StmtKind.DECL, self.span(start), decl=decl)

    def parse_statement(self) -> Stmt:
        start = self.here()
        if self.starts_type():
            return self.parse_local()
        if self.at("{"):
            return self.parse_block()
        if self.accept(";"):
            return Stmt(StmtKind.EMPTY, self.span(start))
        if self.accept("if"):
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            body = self.parse_statement()
            orelse = self.parse_statement() if self.accept("else") else None
            return Stmt(StmtKind.IF, self.span(start), cond=cond, body=body, orelse=orelse)
        if self.accept("while"):
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            body = self.parse_statement()
            return Stmt(StmtKind.WHILE, self.span(start), cond=cond, body=body)
        if self.accept("do"):
            body = self.parse_statement()
            self.expect("while")
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            self.expect(";")
            return Stmt(StmtKind.DO, self.span(start), cond=cond, body=body)
        if self.accept("for"):
            return self.parse_for(start)
        if self.accept("return"):
            expr = None if self.at(";") else self.parse_expression()
            self.expect(";")
            return Stmt(StmtKind.RETURN, self.span(start), expr=expr)
        if self.accept("break"):
            self.expect(";")
            return Stmt(StmtKind.BREAK, self.span(start))
        if self.accept("continue"):
            self.expect(";")
            return Stmt(StmtKind.CONTINUE, self.span(start))
        expr = self.parse_expression()
        self.expect(";")
        return Stmt(StmtKind.EXPR, self.span(start), expr=expr)

    def parse_for(self, start: SourceLocation) -> Stmt:
        self.expect("(")
        init = None
        if self.starts_type():
            init = self.parse_local()
        elif not self.accept(";"):
            init_start = self.here()
            expr = self.parse_expression()
            self.expect(";")
            init = Stmt(StmtKind.EXPR, self.span(init_start), expr=expr)
        cond = None if self.at(";") else self.parse_expression()
        self.expect(";")
        step = None if self.at(")") else self.parse_expression()
        self.expect(")")
        body = self.parse_statement()
        return Stmt(StmtKind.FOR, self.span(start), cond=cond, step=step, init=init, body=body)

    # -- expressions ---------------------------------------------------

    def parse_expression(self) -> Expr:
        start = self.here()
        expr = self.parse_assignment()
        while self.accept(","):
            right = self.parse_assignment()
            expr = Expr(ExprKind.COMMA, self.span(start), [expr, right], op=",")
        return expr

    def parse_assignment(self) -> Expr:
        start = self.here()
        left = self.parse_binary(0)
        if self.at("?"):
            raise UnsupportedConstruct("the conditional operator is not part of Mini-C", self.here())
        token = self.peek()
        if token is not None and token.kind == "op" and token.text in ASSIGN_OPS:
            if not left.is_lvalue:
                raise ParseError("assignment target is not an lvalue", left.loc)
            self.advance()
            right = self.parse_assignment()
            op = ASSIGN_OPS[token.text]
            if op is None:
                return Expr(ExprKind.ASSIGN, self.span(start), [left, right], op="=")
            combined = Expr(ExprKind.BINARY, self.span(start), [left, right], op=op)
            return Expr(ExprKind.ASSIGN, self.span(start), [left, combined], op=token.text, read_write=True)
        return left

    def parse_binary(self, level: int) -> Expr:
        if level == len(BINARY_LEVELS):
            return self.parse_unary()
        start = self.here()
        kind, ops = BINARY_LEVELS[level]
        left = self.parse_binary(level + 1)
        while True:
            token = self.peek()
            if token is None or token.kind != "op" or token.text not in ops:
                return left
            self.advance()
            right = self.parse_binary(level + 1)
            node_kind = ExprKind.LOGIC if kind == "logic" else ExprKind.BINARY
            left = Expr(node_kind, self.span(start), [left, right], op=token.text)

    def increment(self, target: Expr, op: str, start: SourceLocation, postfix: bool) -> Expr:
        if not target.is_lvalue:
            raise ParseError(f"operand of {op} is not an lvalue", target.loc)
        loc = self.span(start)
        one = Expr(ExprKind.CONST, loc, value=1)
        combined = Expr(ExprKind.BINARY, loc, [target, one], op=op[0])
        return Expr(ExprKind.ASSIGN, loc, [target, combined], op=op, read_write=True, postfix=postfix)

    def parse_unary(self) -> Expr:
        start = self.here()
        token = self.peek()
        if token is not None and token.kind == "op":
            if token.text in ("-", "!", "~"):
                self.advance()
                operand = self.parse_unary()
                return Expr(ExprKind.UNARY, self.span(start), [operand], op=token.text)
            if token.text == "&":
                self.advance()
                operand = self.parse_unary()
                if not operand.is_lvalue:
                    raise ParseError("address-of needs an lvalue", operand.loc)
                return Expr(ExprKind.ADDR, self.span(start), [operand], op="&")
            if token.text == "*":
                self.advance()
                operand = self.parse_unary()
                return Expr(ExprKind.DEREF, self.span(start), [operand], op="*")
            if token.text in ("++", "--"):
                self.advance()
                operand = self.parse_unary()
                return self.increment(operand, token.text, start, postfix=False)
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        start = self.here()
        expr = self.parse_primary()
        while True:
            if self.accept("["):
                index = self.parse_expression()
                self.expect("]")
                expr = Expr(ExprKind.INDEX, self.span(start), [expr, index])
            elif self.at("("):
                if expr.kind != ExprKind.VAR:
                    raise UnsupportedConstruct("calls through expressions are not part of Mini-C", expr.loc)
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.parse_assignment())
                    while self.accept(","):
                        args.append(self.parse_assignment())
                self.expect(")")
                expr = Expr(ExprKind.CALL, self.span(start), args, name=expr.name)
            elif self.at("++") or self.at("--"):
                op = self.advance().text
                expr = self.increment(expr, op, start, postfix=True)
            else:
                return expr

    def parse_primary(self) -> Expr:
        start = self.here()
        token = self.peek()
        if token is None:
            raise ParseError("unexpected end of input", start, expected=["expression"])
        if token.kind == "int":
            self.advance()
            return Expr(ExprKind.CONST, self.span(start), value=token.value)
        if token.kind == "ident":
            self.advance()
            if token.text in VOLATILE_CASTS and self.at("("):
                self.advance()
                inner = self.parse_expression()
                self.expect(")")
                if not inner.is_lvalue:
                    raise ParseError(f"{token.text}() needs an lvalue", inner.loc)
                return Expr(ExprKind.VCAST, self.span(start), [inner], op=token.text)
            return Expr(ExprKind.VAR, self.span(start), name=token.text)
        if self.accept("("):
            expr = self.parse_expression()
            self.expect(")")
            return expr
        raise ParseError(f"unexpected '{token.text}'", token.loc, expected=["expression"])


def parse_program(tokens: List[Token], file: str = "<input>", source: str = "") -> Program:
    return Parser(tokens, file, source).parse_program()


def parse_source(source: str, file: str = "<input>") -> Program:
    """Tokenize and parse in one step (no symbol resolution)."""
    return parse_program(tokenize(source, file), file, source)
