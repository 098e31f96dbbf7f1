import os
from typing import Iterable, Optional

import pytest

from domain.cfg import FullExpr, ProgramCfg
from service.analysis_service import AnalysisRun, AnalysisService
from service.cfg_builder import build_program_cfg
from service.frontend import load_program
from service.hardware_model import parse_hw_spec
from service.pointer_prepass import compute_access_sets, compute_points_to, compute_shared_set
from service.wellformedness import SharedInfo


FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
PROGRAMS = os.path.join(FIXTURES, "programs")
HARDWARE = os.path.join(FIXTURES, "hardware")


def program_path(name: str) -> str:
    return os.path.join(PROGRAMS, name)


def hardware_path(name: str) -> str:
    return os.path.join(HARDWARE, name)


def read_fixture(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def load_fixture_program(name: str):
    return load_program(read_fixture(program_path(name)), name)


def hardware_spec(name: str = "avr8.hw"):
    return parse_hw_spec(read_fixture(hardware_path(name)), name)


def analyze_fixture(name: str, hardware: Optional[str] = "avr8.hw", isrs: Iterable[str] = (), options=None) -> AnalysisRun:
    """Full pipeline run over a fixture; hardware None selects the agnostic mode."""
    service = AnalysisService()
    path = program_path(name)
    hw = hardware_path(hardware) if hardware is not None else "none"
    return service.analyze_file(path, hw, list(isrs), options)


def shared_info(source: str, isrs: Iterable[str]):
    """Program, CFG and well-formedness context of a source text, without hardware."""
    program = load_program(source)
    cfg = build_program_cfg(program)
    pts = compute_points_to(program, cfg)
    access = compute_access_sets(program, cfg, pts)
    shared = compute_shared_set(program, cfg, access, isrs)
    return program, cfg, SharedInfo.build(cfg, access, shared, pts)


def full_expr_at(cfg: ProgramCfg, line: int, function: Optional[str] = None) -> FullExpr:
    found = [
        fe for fe in sorted(cfg.full_exprs.values(), key=lambda fe: fe.id)
        if fe.expr is not None and fe.loc.line == line and (function is None or fe.function == function)
    ]
    assert found, f"no full expression on line {line}"
    return found[0]


@pytest.fixture
def service():
    return AnalysisService()


@pytest.fixture
def avr8():
    return hardware_spec("avr8.hw")
