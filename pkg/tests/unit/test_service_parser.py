import pytest

from domain.ast import ExprKind, StmtKind
from domain.exceptions import ParseError, UnsupportedConstruct
from service.parser import parse_source


def body_of(source: str, function: str = "main"):
    program = parse_source(source)
    return next(fn for fn in program.functions if fn.name == function).body.stmts


def test_register_bindings_on_globals():
    program = parse_source("volatile uint8 IEN @ 0xC1 : 7;\nvolatile uint8 UDR @ 0xC6;\nuint8 buf[16];")
    ien, udr, buf = program.globals
    assert (ien.absolute_address, ien.bit) == (0xC1, 7)
    assert (udr.absolute_address, udr.bit) == (0xC6, None)
    assert buf.ctype.is_array and buf.ctype.length == 16
    assert ien.volatile and not buf.volatile


def test_isr_definition_uses_vector_name():
    program = parse_source("ISR(USART0_RX_vect) { }\nvoid main() { }")
    assert [isr.name for isr in program.isrs] == ["USART0_RX_vect"]
    assert program.isrs[0].isr_vector == "USART0_RX_vect"
    assert [fn.name for fn in program.functions] == ["main"]


def test_binary_precedence():
    """`a + b * c << 1` groups as ((a + (b * c)) << 1)."""
    stmt, = body_of("void main() { x = a + b * c << 1; }")
    value = stmt.expr.rhs
    assert value.op == "<<"
    assert value.children[0].op == "+"
    assert value.children[0].children[1].op == "*"


def test_logic_operators_build_logic_nodes():
    stmt, = body_of("void main() { x = a && b || c; }")
    value = stmt.expr.rhs
    assert value.kind == ExprKind.LOGIC and value.op == "||"
    assert value.children[0].kind == ExprKind.LOGIC and value.children[0].op == "&&"


def test_compound_assignment_is_desugared():
    stmt, = body_of("void main() { x += 2; }")
    assign = stmt.expr
    assert assign.kind == ExprKind.ASSIGN and assign.op == "+=" and assign.read_write
    assert assign.rhs.op == "+"
    assert assign.rhs.children[0] is assign.lvalue


def test_prefix_and_postfix_increment():
    pre, post = body_of("void main() { ++x; x--; }")
    assert pre.expr.op == "++" and not pre.expr.postfix
    assert post.expr.op == "--" and post.expr.postfix
    assert post.expr.rhs.children[1].value == 1


def test_statements():
    stmts = body_of(
        "void main() { uint8 i = 0; if (i) ; else i = 1; while (i) break; "
        "do { continue; } while (0); for (i = 0; i < 3; i++) { } return; }"
    )
    assert [s.kind for s in stmts] == [
        StmtKind.DECL, StmtKind.IF, StmtKind.WHILE, StmtKind.DO, StmtKind.FOR, StmtKind.RETURN,
    ]
    assert stmts[1].orelse is not None
    assert stmts[4].init.kind == StmtKind.EXPR


def test_volatile_cast_pointer_and_address():
    stmt, = body_of("void main() { *p = vu8(x) + a[2] + *(&y); }")
    target = stmt.expr.lvalue
    assert target.kind == ExprKind.DEREF
    kinds = {node.kind for node in stmt.expr.rhs.walk()}
    assert {ExprKind.VCAST, ExprKind.INDEX, ExprKind.DEREF, ExprKind.ADDR} <= kinds


def test_parse_error_lists_expected_tokens():
    with pytest.raises(ParseError) as exc:
        parse_source("void main() { x = 1 }")
    assert ";" in exc.value.expected
    assert exc.value.location.line == 1


def test_assignment_to_non_lvalue_is_rejected():
    with pytest.raises(ParseError):
        parse_source("void main() { 1 = x; }")


@pytest.mark.parametrize("source", [
    "void main() { x = a ? b : c; }",
    "void f(uint8 a[4]) { }",
    "void f();",
    "void main() { uint8 r @ 0x20; }",
])
def test_constructs_outside_mini_c(source):
    with pytest.raises(UnsupportedConstruct):
        parse_source(source)


def test_unterminated_block():
    with pytest.raises(ParseError) as exc:
        parse_source("void main() { x = 1;")
    assert "unterminated block" in str(exc.value)
