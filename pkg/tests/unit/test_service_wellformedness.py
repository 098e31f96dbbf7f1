import pytest

from service.wellformedness import (
    SharedInfo, annotate_full_expressions, classify_competing, explain, full_exprs_at, is_well_formed,
)
from tests.conftest import full_expr_at, shared_info


SOURCE = """volatile uint8 a;
volatile uint8 b;
volatile uint8 c;
uint8 p;
uint8 f(void) { return c; }
uint8 g(void) { return c; }
void main(void) {
    a = ++b;
    a = f() + g();
    a = f() + 1;
    a = b = 0;
    a = p;
    a = g() + f();
    p = (a = 1, b = 2);
}
ISR(TIMER0_OVF_vect) { a = 1; b = 2; c = 3; }
"""


@pytest.fixture(scope="module")
def analyzed():
    return shared_info(SOURCE, ["TIMER0_OVF_vect"])


def verdict_at(analyzed, line):
    _, cfg, info = analyzed
    return is_well_formed(full_expr_at(cfg, line, "main"), info)


def test_shared_info(analyzed):
    _, _, info = analyzed
    assert {str(loc) for loc in info.shared} == {"a", "b", "c"}
    assert {"f", "g"} <= info.competing_functions
    assert "f" not in info.shared_writers
    assert "TIMER0_OVF_vect" in info.shared_writers


def test_competing_lvalue_with_writing_right_side(analyzed):
    """`a = ++b`: both sides write shared data and the target is volatile."""
    verdict = verdict_at(analyzed, 8)
    assert not verdict.well_formed
    assert verdict.reason == "6"
    assert verdict.loc.line == 8


@pytest.mark.parametrize("line", [9, 13])
def test_two_competing_operands(analyzed, line):
    """Calls to competing functions on both sides of `+`, in either order."""
    verdict = verdict_at(analyzed, line)
    assert not verdict.well_formed
    assert verdict.reason == "3b"


def test_one_competing_operand_is_well_formed(analyzed):
    verdict = verdict_at(analyzed, 10)
    assert verdict.well_formed
    assert verdict.competing
    assert verdict.writes_shared == 1
    assert verdict.reason is None and verdict.loc is None


def test_chained_assignment(analyzed):
    verdict = verdict_at(analyzed, 11)
    assert not verdict.well_formed
    assert verdict.reason == "6"


def test_non_volatile_right_side(analyzed):
    verdict = verdict_at(analyzed, 12)
    assert verdict.well_formed
    assert verdict.writes_shared == 1


def test_two_shared_writes_in_one_full_expression(analyzed):
    verdict = verdict_at(analyzed, 14)
    assert not verdict.well_formed
    assert verdict.reason == "single-write"
    assert verdict.writes_shared == 2


def test_classify_competing(analyzed):
    _, cfg, info = analyzed
    assert classify_competing(full_expr_at(cfg, 10).expr.rhs, info)
    assert not classify_competing(full_expr_at(cfg, 12).expr.rhs, info)


def test_without_shared_data_everything_is_well_formed(analyzed):
    _, cfg, _ = analyzed
    verdict = is_well_formed(full_expr_at(cfg, 8), SharedInfo.empty())
    assert verdict.competing
    assert verdict.well_formed
    assert is_well_formed(full_expr_at(cfg, 9), SharedInfo.empty()).well_formed


def test_empty_statement_is_well_formed():
    verdict = is_well_formed(None, SharedInfo.empty())
    assert verdict.well_formed and not verdict.competing


def test_annotate_and_explain():
    _, cfg, info = shared_info(SOURCE, ["TIMER0_OVF_vect"])
    verdicts = annotate_full_expressions(cfg, info)
    bad = sorted(cfg.full_exprs[fe_id].loc.line for fe_id, v in verdicts.items() if not v.well_formed)
    assert bad == [8, 9, 11, 13, 14]
    assert all(fe.well_formed is not None for fe in full_exprs_at(cfg, 8))

    lines = explain(cfg, 8)
    assert ": (a = " in lines[0]
    assert any("not well-formed (rule 6)" in line for line in lines)
    assert any("-> FAILS" in line for line in lines)
    assert explain(cfg, 1) == []
