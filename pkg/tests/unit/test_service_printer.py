import pytest

from service.parser import parse_source
from service.printer import format_expr, format_program
from tests.conftest import program_path, read_fixture


@pytest.mark.parametrize("name", [
    "uart.c", "rgb_led.c", "traffic_light.c", "calls.c", "pointers.c", "nested_logic.c", "seq_counter.c",
])
def test_printed_program_parses_to_the_same_tree(name):
    program = parse_source(read_fixture(program_path(name)), name)
    printed = format_program(program)
    assert parse_source(printed, name).shape() == program.shape()


def test_printing_is_stable():
    program = parse_source(read_fixture(program_path("uart.c")))
    once = format_program(program)
    assert format_program(parse_source(once)) == once


def test_expressions_are_fully_parenthesized():
    program = parse_source("void main() { x = a + b * c; y += 2; z = -w; p = &q[1]; v = vu16(t); }")
    texts = [format_expr(stmt.expr) for stmt in program.functions[0].body.stmts]
    assert texts == [
        "(x = (a + (b * c)))",
        "(y += 2)",
        "(z = -(w))",
        "(p = &(q[1]))",
        "(v = vu16(t))",
    ]


def test_register_declaration_round_trip():
    program = parse_source("volatile uint8 IEN @ 0xC1 : 7;")
    assert format_program(program).strip() == "volatile uint8 IEN @ 0xC1 : 7;"
