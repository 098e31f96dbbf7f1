import pytest

from domain.warning import WarningKind
from repository.exceptions import HardwareSpecNotFoundError, SourceNotFoundError
from repository.hardware_repository import HardwareRepository
from repository.source_repository import SourceRepository
from service.analysis_service import AnalysisService
from tests.conftest import HARDWARE, PROGRAMS


@pytest.fixture
def fixture_service():
    """
    AnalysisService reading programs and hardware descriptions from the
    fixture directories, so that bare file names resolve.
    """
    return AnalysisService(SourceRepository(PROGRAMS), HardwareRepository(HARDWARE))


def test_analyze_file_by_name(fixture_service):
    run = fixture_service.analyze_file("torn_read.c", "avr8.hw")
    assert [w.kind for w in run.report.warnings] == [WarningKind.NON_ATOMIC_ACCESS]
    assert run.report.file == "torn_read.c"
    assert run.spec.atomic_bits == 8


def test_agnostic_mode_reads_no_description(fixture_service):
    run = fixture_service.analyze_file("two_isrs.c", "none", ["USART0_RX_vect", "TIMER0_OVF_vect"])
    assert run.spec.agnostic
    assert set(run.isr_map) == {"USART0_RX_vect", "TIMER0_OVF_vect"}


def test_missing_source(fixture_service):
    with pytest.raises(SourceNotFoundError):
        fixture_service.analyze_file("missing.c", "avr8.hw")


def test_missing_hardware_description(fixture_service):
    with pytest.raises(HardwareSpecNotFoundError):
        fixture_service.analyze_file("uart.c", "missing.hw")


def test_program_written_to_disk(tmp_path):
    """A translation unit created on disk goes through the whole pipeline."""
    (tmp_path / "counter.c").write_text(
        "volatile uint16 count;\n"
        "void main() { uint16 c; sei(); c = count; }\n"
        "ISR(TIMER0_OVF_vect) { count = count + 1; }\n",
        encoding="utf-8",
    )
    service = AnalysisService(SourceRepository(str(tmp_path)), HardwareRepository(HARDWARE))
    run = service.analyze_file("counter.c", "avr8.hw")
    assert [(w.kind, w.loc.line) for w in run.report.warnings] == [(WarningKind.NON_ATOMIC_ACCESS, 2)]
    assert run.report.exit_code == 1
