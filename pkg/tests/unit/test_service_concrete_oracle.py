import pytest

from domain.exceptions import StateBudgetExceeded
from domain.interval import Interval
from domain.memloc import MemLoc
from domain.oracle import BoundsViolation, OracleBounds
from service.concrete_oracle import check_containment, check_schedule_independence, enumerate_executions
from tests.conftest import analyze_fixture, full_expr_at, hardware_path, read_fixture


AVR8 = read_fixture(hardware_path("avr8.hw"))


def values_at(executions, fe):
    """Value sets per location at the sequence point of `fe`."""
    found = {}
    for snap in executions.seqpoints[fe.id]:
        for loc, value in snap:
            found.setdefault(loc, set()).add(value)
    return found


def test_sequential_program_has_one_state_per_point(service):
    run = analyze_fixture("seq_counter.c")
    executions = service.enumerate(run)
    fe = full_expr_at(run.cfg, 11)
    assert len(executions.seqpoints[fe.id]) == 1
    assert values_at(executions, fe) == {
        MemLoc.global_("total"): {10},
        MemLoc.global_("balance"): {7},
        MemLoc.local("main", "i"): {5},
    }
    assert executions.undefined == set()
    assert service.check_containment(run, executions).holds


def test_split_wide_store_writes_each_byte(service):
    """A sequential 16-bit store moves the low byte, then the high byte, of the value."""
    source = (
        "uint16 w = 0;\n"
        "void main() {\n"
        "    w = 300;\n"
        "    w = 511;\n"
        "    w = w;\n"
        "}\n"
    )
    run = service.analyze_source(source, "wide.c", AVR8)
    executions = service.enumerate(run)
    w = MemLoc.global_("w")
    assert values_at(executions, full_expr_at(run.cfg, 4))[w] == {300}
    assert values_at(executions, full_expr_at(run.cfg, 5))[w] == {511}
    assert service.check_containment(run, executions).holds


def test_stores_through_pointers(service):
    run = analyze_fixture("pointers.c")
    executions = service.enumerate(run)
    found = values_at(executions, full_expr_at(run.cfg, 12))
    assert found[MemLoc.global_("a")] == {5}
    assert found[MemLoc.global_("b")] == {2}
    assert found[MemLoc.local("main", "x")] == {2}
    assert MemLoc.global_("p") not in found


def test_isr_entries_see_every_interleaving(service):
    source = (
        "volatile uint8 flag;\n"
        "void main() { sei(); flag = 2; }\n"
        "ISR(TIMER0_OVF_vect) { flag = 1; }\n"
    )
    run = service.analyze_source(source, "flag.c", AVR8)
    executions = service.enumerate(run)
    entries = executions.isr_entries["TIMER0_OVF_vect"]
    assert {dict(snap)[MemLoc.global_("flag")] for snap in entries} == {0, 1, 2}

    once = service.enumerate(run, OracleBounds(isr_fires_max=1))
    assert {dict(snap)[MemLoc.global_("flag")] for snap in once.isr_entries["TIMER0_OVF_vect"]} == {0, 2}
    assert service.check_containment(run, executions).holds


def test_no_interrupt_before_sei(service):
    source = (
        "volatile uint8 flag;\n"
        "void main() { flag = 2; }\n"
        "ISR(TIMER0_OVF_vect) { flag = 1; }\n"
    )
    run = service.analyze_source(source, "flag.c", AVR8)
    assert service.enumerate(run).isr_entries == {}


def test_division_by_zero_is_undefined(service):
    source = "uint8 z = 0;\nuint8 r;\nvoid main() { r = 10 / z; }\n"
    run = service.analyze_source(source, "div.c")
    executions = service.enumerate(run)
    assert any(text.endswith("division by zero") for text in executions.undefined)


def test_out_of_bounds_access_is_recorded(service):
    source = "uint8 buf[2];\nuint8 i = 2;\nvoid main() { buf[i] = 1; }\n"
    run = service.analyze_source(source, "oob.c")
    executions = service.enumerate(run)
    [violation] = executions.bound_violations
    assert isinstance(violation, BoundsViolation)
    assert violation.array == MemLoc.array("buf")
    assert violation.index == 2
    assert violation.loc.line == 3
    # the analysis flagged the access, so the concrete overflow is expected
    assert service.check_containment(run, executions).holds
    assert any(line.endswith("buf[*] indexed with 2") for line in service.describe_executions(run, executions))


def test_containment_catches_an_understated_interval(service):
    run = analyze_fixture("seq_counter.c")
    executions = service.enumerate(run)
    fe = full_expr_at(run.cfg, 11)
    total = MemLoc.global_("total")
    for key, state in list(run.result.states.items()):
        if key[0] in fe.nodes:
            run.result.states[key] = state.with_oct(state.oct.havoc(total, Interval(0, 9)))
    report = check_containment(executions, run.result, run.cfg)
    assert not report.holds
    violation = report.violations[0]
    assert violation.memloc == total
    assert violation.value == 10
    assert violation.trace


def test_state_budget(service):
    run = analyze_fixture("seq_counter.c")
    with pytest.raises(StateBudgetExceeded):
        enumerate_executions(run.program, run.spec, OracleBounds(state_budget=5), run.cfg)


def test_describe_executions(service):
    run = analyze_fixture("seq_counter.c")
    lines = service.describe_executions(run, service.enumerate(run))
    fe = full_expr_at(run.cfg, 11)
    header = lines.index(f"{fe.loc} [main] full expression {fe.id}")
    assert set(lines[header + 1:header + 4]) == {"  balance in {7}", "  main.i in {5}", "  total in {10}"}


def test_sequential_code_is_schedule_independent(service):
    source = "uint8 a;\nuint8 b;\nvoid main() { a = ++b; }\n"
    run = service.analyze_source(source, "inc.c")
    [report] = check_schedule_independence(run.program, run.spec, cfg=run.cfg)
    assert report.schedules == 2
    assert report.independent
