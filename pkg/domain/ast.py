from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional

from domain.c_types import CType


@dataclass(frozen=True)
class SourceLocation:
    """Position of a construct; `offset`/`end` delimit its source span."""

    line: int
    column: int
    offset: int = 0
    end: int = 0
    file: str = "<input>"

    def with_end(self, end: int) -> "SourceLocation":
        return SourceLocation(self.line, self.column, self.offset, end, self.file)

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class Storage(str, Enum):
    GLOBAL = "global"
    LOCAL = "local"
    PARAM = "param"


@dataclass(eq=False)
class VarDecl:
    """
    Variable declaration. `absolute_address` binds a global to a memory-mapped
    register; `bit` narrows the binding to a single register bit.
    """

    name: str
    ctype: CType
    storage: Storage
    loc: Optional[SourceLocation] = None
    absolute_address: Optional[int] = None
    bit: Optional[int] = None
    init: Optional["Expr"] = None
    function: Optional[str] = None
    temporary: bool = False
    key: Optional[str] = None

    @property
    def ident(self) -> str:
        """Function-unique name; shadowed locals get a `#n` suffix."""
        return self.key or self.name

    @property
    def volatile(self) -> bool:
        if self.ctype.is_array:
            return bool(self.ctype.elem and self.ctype.elem.volatile)
        return self.ctype.volatile

    @property
    def is_register(self) -> bool:
        return self.absolute_address is not None

    @property
    def is_numeric(self) -> bool:
        """Tracked by the octagon: integers and arrays of integers."""
        if self.ctype.is_array:
            return self.ctype.elem.is_integer
        return self.ctype.is_integer

    def value_type(self) -> CType:
        """Type of one stored value (the element type for arrays)."""
        return self.ctype.elem if self.ctype.is_array else self.ctype

    def value_bounds(self):
        if self.bit is not None:
            return 0, 1
        return self.value_type().bounds()

    def __repr__(self) -> str:
        return f"VarDecl({self.name}: {self.ctype})"


class ExprKind(str, Enum):
    CONST = "const"
    VAR = "var"
    UNARY = "unary"
    BINARY = "binary"
    LOGIC = "logic"
    COMMA = "comma"
    CALL = "call"
    ASSIGN = "assign"
    INDEX = "index"
    ADDR = "addr"
    DEREF = "deref"
    VCAST = "vcast"


COMPARISON_OPS = ("<", "<=", ">", ">=", "==", "!=")
ARITHMETIC_OPS = ("+", "-", "*", "/", "%", "<<", ">>", "|", "&", "^")
COMMUTATIVE_OPS = ("+", "*", "|", "&", "^", "==", "!=")


@dataclass(eq=False)
class Expr:
    """
    Mini-C expression node.

    `op` holds the operator for unary/binary/logic nodes and the spelling of
    an assignment ("=", "+=", "++", "--"). Increments and compound assignments
    are desugared into ASSIGN(lvalue, BINARY(op, lvalue, rhs)) with
    `read_write` set; the lvalue object is shared between both positions.
    `postfix` marks x++/x-- whose value is the old one.
    """

    kind: ExprKind
    loc: SourceLocation
    children: List["Expr"] = field(default_factory=list)
    op: Optional[str] = None
    value: Optional[int] = None
    name: Optional[str] = None
    ctype: Optional[CType] = None
    decl: Optional[VarDecl] = None
    read_write: bool = False
    postfix: bool = False

    @property
    def lvalue(self) -> "Expr":
        return self.children[0]

    @property
    def rhs(self) -> "Expr":
        return self.children[1]

    @property
    def is_lvalue(self) -> bool:
        if self.kind in (ExprKind.VAR, ExprKind.INDEX, ExprKind.DEREF):
            return True
        return self.kind == ExprKind.VCAST and self.children[0].is_lvalue

    @property
    def volatile_access(self) -> bool:
        """True if evaluating this lvalue node touches volatile memory."""
        if self.kind == ExprKind.VCAST:
            return True
        if self.kind == ExprKind.VAR and self.decl is not None:
            return not self.decl.ctype.is_array and self.decl.volatile
        if self.kind == ExprKind.INDEX:
            base = self.children[0].ctype
            elem = base.elem if base is not None else None
            return bool(elem and elem.volatile)
        if self.kind == ExprKind.DEREF:
            ptr = self.children[0].ctype
            return bool(ptr and ptr.elem and ptr.elem.volatile)
        return False

    def walk(self) -> Iterator["Expr"]:
        """Pre-order traversal; a shared read-write lvalue is visited once."""
        seen = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            yield node
            stack.extend(reversed(node.children))

    def shape(self):
        """Location-free structure, used to compare parses."""
        return (
            self.kind.value,
            self.op,
            self.value,
            self.name,
            self.read_write,
            self.postfix,
            tuple(child.shape() for child in self.children),
        )


class StmtKind(str, Enum):
    BLOCK = "block"
    DECL = "decl"
    EXPR = "expr"
    IF = "if"
    WHILE = "while"
    DO = "do"
    FOR = "for"
    RETURN = "return"
    BREAK = "break"
    CONTINUE = "continue"
    EMPTY = "empty"


@dataclass(eq=False)
class Stmt:
    kind: StmtKind
    loc: SourceLocation
    expr: Optional[Expr] = None
    cond: Optional[Expr] = None
    step: Optional[Expr] = None
    init: Optional["Stmt"] = None
    body: Optional["Stmt"] = None
    orelse: Optional["Stmt"] = None
    stmts: List["Stmt"] = field(default_factory=list)
    decl: Optional[VarDecl] = None

    def shape(self):
        def opt(node):
            return node.shape() if node is not None else None

        decl = None
        if self.decl is not None:
            decl = (self.decl.name, str(self.decl.ctype))
        return (
            self.kind.value,
            opt(self.expr),
            opt(self.cond),
            opt(self.step),
            opt(self.init),
            opt(self.body),
            opt(self.orelse),
            tuple(s.shape() for s in self.stmts),
            decl,
        )


@dataclass(eq=False)
class FunctionDef:
    name: str
    ret_type: CType
    params: List[VarDecl]
    body: Stmt
    loc: SourceLocation
    isr_vector: Optional[str] = None
    locals: List[VarDecl] = field(default_factory=list)

    @property
    def is_isr(self) -> bool:
        return self.isr_vector is not None

    def shape(self):
        params = tuple((p.name, str(p.ctype)) for p in self.params)
        return (self.name, str(self.ret_type), params, self.isr_vector, self.body.shape())


@dataclass(eq=False)
class Program:
    globals: List[VarDecl] = field(default_factory=list)
    functions: List[FunctionDef] = field(default_factory=list)
    isrs: List[FunctionDef] = field(default_factory=list)
    entry: str = "main"
    file: str = "<input>"
    source: str = ""

    def function(self, name: str) -> Optional[FunctionDef]:
        for fn in self.functions + self.isrs:
            if fn.name == name:
                return fn
        return None

    def all_functions(self) -> List[FunctionDef]:
        return self.functions + self.isrs

    def global_decl(self, name: str) -> Optional[VarDecl]:
        for decl in self.globals:
            if decl.name == name:
                return decl
        return None

    def shape(self):
        globals_ = tuple(
            (g.name, str(g.ctype), g.absolute_address, g.bit, g.init.shape() if g.init else None)
            for g in self.globals
        )
        return (globals_, tuple(f.shape() for f in self.functions), tuple(f.shape() for f in self.isrs))
