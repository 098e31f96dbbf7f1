import pytest

from domain.c_types import INT16, UINT8, UINT16
from domain.exceptions import (
    DuplicateDefinition, EntryPointError, RecursionUnsupported, TypeMismatch,
    UndeclaredIdentifier, UnsupportedConstruct,
)
from service.frontend import load_program
from service.parser import parse_source
from service.resolver import fold_constant


def test_identifiers_link_to_declarations():
    program = load_program("uint8 g;\nvoid main() { uint8 l = 0; g = l; }")
    assign = program.function("main").body.stmts[1].expr
    assert assign.lvalue.decl is program.global_decl("g")
    assert assign.rhs.decl.function == "main"


def test_shadowed_locals_get_unique_keys():
    program = load_program("void main() { uint8 x = 0; { uint8 x = 1; } }")
    keys = [decl.ident for decl in program.function("main").locals]
    assert keys == ["x", "x#1"]


def test_promotion_without_int_widening():
    """uint8 + uint8 stays uint8; uint8 + uint16 is uint16; comparisons are uint8."""
    program = load_program(
        "uint8 a; uint8 b; uint16 w;\n"
        "void main() { a = a + b; w = a + w; a = w < 3; }"
    )
    stmts = program.function("main").body.stmts
    assert stmts[0].expr.rhs.ctype == UINT8
    assert stmts[1].expr.rhs.ctype == UINT16
    assert stmts[2].expr.rhs.ctype == UINT8


def test_negative_literal_type():
    program = load_program("int16 v;\nvoid main() { v = -200; }")
    assert program.function("main").body.stmts[0].expr.rhs.ctype == INT16


def test_fold_constant():
    program = parse_source("uint8 a = (3 + 4) * 2 - 10 / 3;\nuint8 b = 1 << 3 | 1;\nuint8 c = 5 / 0;")
    a, b, c = program.globals
    assert fold_constant(a.init) == 11
    assert fold_constant(b.init) == 9
    assert fold_constant(c.init) is None


@pytest.mark.parametrize("source, error", [
    ("void main() { x = 1; }", UndeclaredIdentifier),
    ("void main() { f(); }", UndeclaredIdentifier),
    ("uint8 a; uint8 a; void main() { }", DuplicateDefinition),
    ("void main() { } void main() { }", DuplicateDefinition),
    ("ISR(T_vect) { } ISR(T_vect) { } void main() { }", DuplicateDefinition),
    ("uint8 a = 300; void main() { }", TypeMismatch),
    ("uint8 *p; void main() { p = 5; }", TypeMismatch),
    ("void f() { } void main() { uint8 x = f(); }", TypeMismatch),
    ("uint8 f(uint8 v) { return v; } void main() { f(); }", TypeMismatch),
    ("uint8 a[2]; void main() { a = 1; }", TypeMismatch),
    ("uint8 *p; uint8 x; void main() { x = p + 1; }", UnsupportedConstruct),
    ("void main() { break; }", UnsupportedConstruct),
    ("ISR(T_vect) { } void main() { T_vect(); }", UnsupportedConstruct),
    ("ISR(T_vect) { sei(); } void main() { }", UnsupportedConstruct),
    ("volatile uint8 R @ 0x20 : 1; uint8 *p; void main() { p = &R; }", UnsupportedConstruct),
])
def test_semantic_errors(source, error):
    with pytest.raises(error):
        load_program(source)


def test_recursion_is_rejected():
    source = "void f() { g(); } void g() { f(); } void main() { f(); }"
    with pytest.raises(RecursionUnsupported) as exc:
        load_program(source)
    assert "->" in str(exc.value)


def test_missing_entry_point():
    with pytest.raises(EntryPointError):
        load_program("void helper() { }")
    program = load_program("void helper() { }", require_entry=False)
    assert program.function("helper") is not None


def test_entry_point_without_parameters():
    with pytest.raises(EntryPointError):
        load_program("void main(uint8 a) { }")


def test_null_pointer_constant_is_assignable():
    program = load_program("uint8 *p;\nvoid main() { p = 0; }")
    assert program.function("main").body.stmts[0].expr.lvalue.decl.ctype.is_pointer
