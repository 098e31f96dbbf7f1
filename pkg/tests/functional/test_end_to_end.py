import io
import os

import pytest
from fastapi import status
from fastapi.testclient import TestClient

from controller.cli_controller import main
from domain.memloc import MemLoc
from domain.oracle import OracleBounds
from domain.warning import WarningKind
from service.analysis_service import AnalysisService
from service.concrete_oracle import check_isr_coverage, check_schedule_independence
from service.interrupt_engine import InterruptEngine
from main import app
from tests.conftest import PROGRAMS, analyze_fixture, full_expr_at, hardware_path, program_path, read_fixture


def kinds(run):
    return [w.kind for w in run.report.warnings]


def test_uart_receiver():
    """The ring buffer indices stay in range; the only finding is about the shared state."""
    run = analyze_fixture("uart.c")
    assert len(run.report.warnings) == 1
    assert WarningKind.ARRAY_OUT_OF_BOUNDS not in kinds(run)
    assert all(access.safe for access in run.report.array_accesses)
    assert run.report.exit_code == 1


def test_uart_receiver_without_hardware_model():
    run = analyze_fixture("uart.c", hardware=None, isrs=["USART0_RX_vect"])
    out_of_bounds = [w for w in run.report.warnings if w.kind == WarningKind.ARRAY_OUT_OF_BOUNDS]
    assert [(w.loc.line, w.memlocs) for w in out_of_bounds] == [
        (31, (MemLoc.array("rx_buff"),)),
        (45, (MemLoc.array("rx_buff"),)),
    ]


def test_rgb_led_controller():
    run = analyze_fixture("rgb_led.c")
    assert [(w.kind, w.loc.line) for w in run.report.warnings] == [(WarningKind.NON_ATOMIC_ACCESS, 84)]
    assert run.report.warnings[0].memlocs == (MemLoc.global_("ticks"),)


def test_traffic_light_controller():
    run = analyze_fixture("traffic_light.c")
    assert run.report.warnings == []
    assert run.report.exit_code == 0


CONTAINMENT_CASES = [
    ("a_inc_b.c", "avr8.hw", 2),
    ("atomic_fn.c", "avr8_atomic.hw", 2),
    ("calls.c", "avr8.hw", 2),
    ("enable_toggle.c", "avr8.hw", 2),
    ("guard_loop.c", "avr8.hw", 2),
    ("inputs.c", "avr8.hw", 2),
    ("nested_logic.c", "avr8.hw", 2),
    ("pointer_index.c", "avr8.hw", 2),
    ("pointers.c", "avr8.hw", 2),
    ("seq_counter.c", "avr8.hw", 2),
    ("torn_index.c", "avr8.hw", 2),
    ("torn_read.c", "avr8.hw", 2),
    ("two_isrs.c", "avr8.hw", 2),
    ("uart_small.c", "avr8.hw", 6),
]


@pytest.mark.parametrize("program, hardware, isr_fires_max", CONTAINMENT_CASES)
def test_analysis_contains_every_concrete_execution(program, hardware, isr_fires_max):
    """Every value a concrete execution produces lies inside the computed bounds."""
    service = AnalysisService()
    run = analyze_fixture(program, hardware)
    executions = service.enumerate(run, service.oracle_bounds(isr_fires_max))
    assert executions.seqpoints
    report = service.check_containment(run, executions)
    assert report.checked > 0
    assert report.holds, "\n".join(str(v) for v in report.violations)


def warning_keys(report):
    """Locations for NonVolatileShared, source lines for every other finding."""
    keys = set()
    for warning in report.warnings:
        if warning.kind == WarningKind.NON_VOLATILE_SHARED:
            keys.update(("location", str(memloc)) for memloc in warning.memlocs)
        else:
            keys.add(("line", warning.loc.line))
    return keys


@pytest.mark.parametrize("program", sorted(os.listdir(PROGRAMS)))
def test_agnostic_warnings_cover_aware_warnings(program):
    hardware = "avr8_atomic.hw" if program == "atomic_fn.c" else "avr8.hw"
    aware = analyze_fixture(program, hardware)
    agnostic = analyze_fixture(program, hardware=None, isrs=list(aware.isr_map))
    missing = warning_keys(aware.report) - warning_keys(agnostic.report)
    assert not missing, [str(w) for w in aware.report.warnings]


def test_containment_detects_a_missing_torn_read(monkeypatch):
    """With the shared-access handling disabled, the torn 16-bit read escapes the analysis."""
    monkeypatch.setattr(InterruptEngine, "handle_shared_access", lambda self, state, node, fe: state)
    service = AnalysisService()
    run = analyze_fixture("torn_read.c")
    assert run.report.warnings == []
    report = service.check_containment(run, service.enumerate(run))
    assert not report.holds
    violation = next(v for v in report.violations if v.memloc == MemLoc.local("main", "seen"))
    assert violation.value == 511
    assert violation.trace
    assert any(step.startswith("interrupt TIMER0_OVF_vect") for step in violation.trace)


@pytest.mark.parametrize("program", ["two_isrs.c", "guard_loop.c", "enable_toggle.c"])
def test_isrs_at_sequence_points_cover_well_formed_programs(program):
    run = analyze_fixture(program)
    reports = check_isr_coverage(run.program, run.spec, bounds=OracleBounds(split_wide_accesses=False), cfg=run.cfg)
    assert reports
    assert all(report.covered for report in reports), [r.uncovered for r in reports if not r.covered]


def test_not_well_formed_expression_needs_isrs_inside_it():
    run = analyze_fixture("a_inc_b.c")
    fe = full_expr_at(run.cfg, 8)
    [coverage] = check_isr_coverage(run.program, run.spec, [fe.id], cfg=run.cfg)
    assert not coverage.covered
    assert any("seen=1" in line for line in coverage.uncovered)

    [schedules] = check_schedule_independence(run.program, run.spec, [fe.id], cfg=run.cfg)
    assert schedules.schedules == 2
    assert not schedules.independent


def test_command_line_end_to_end():
    out = io.StringIO()
    code = main(["analyze", program_path("rgb_led.c"), "--hw", hardware_path("avr8.hw")], out=out, err=io.StringIO())
    assert code == 1
    assert out.getvalue().splitlines()[-1] == "1 warning"


def test_http_end_to_end():
    payload = {
        "source": read_fixture(program_path("traffic_light.c")),
        "file_name": "traffic_light.c",
        "hardware": read_fixture(hardware_path("avr8.hw")),
    }
    response = TestClient(app).post("/analyses", json=payload)
    assert response.status_code == status.HTTP_200_OK
    assert response.json()["warnings"] == []
