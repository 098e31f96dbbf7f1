import pytest

from domain.exceptions import ScheduleExplosion
from domain.oracle import MicroKind
from service.cfg_builder import build_program_cfg
from service.frontend import load_program
from service.oracle_schedules import compile_program, compile_schedules
from tests.conftest import full_expr_at


SOURCE = (
    "uint8 a; uint8 b; uint8 c; uint8 d; uint8 e; uint8 f; uint8 g;\n"
    "uint16 w; uint16 t;\n"
    "void main() {\n"
    "    a = 1;\n"
    "    a = b + c;\n"
    "    a = ++b;\n"
    "    a = b + c + d;\n"
    "    t = w;\n"
    "    if (a && b) c = 1;\n"
    "}\n"
)


@pytest.fixture
def program_cfg():
    program = load_program(SOURCE, "sched.c")
    return program, build_program_cfg(program)


def schedules_on(cfg, line, spec, **kwargs):
    return compile_schedules(full_expr_at(cfg, line), spec, **kwargs)


def kinds_of(schedule):
    return [instr.kind for instr in schedule.instrs]


def test_constant_store_has_one_schedule(program_cfg, avr8):
    _, cfg = program_cfg
    [schedule] = schedules_on(cfg, 4, avr8)
    assert kinds_of(schedule) == [MicroKind.STORE]


def test_independent_loads_can_be_swapped(program_cfg, avr8):
    _, cfg = program_cfg
    first, second = schedules_on(cfg, 5, avr8)
    assert [str(instr.place) for instr in first.instrs[:2]] == ["b", "c"]
    assert [str(instr.place) for instr in second.instrs[:2]] == ["c", "b"]
    assert kinds_of(first)[2:] == [MicroKind.OP, MicroKind.STORE]


def test_increment_stores_are_unordered(program_cfg, avr8):
    _, cfg = program_cfg
    schedules = schedules_on(cfg, 6, avr8)
    assert len(schedules) == 2
    stores = [[str(i.place) for i in s.instrs if i.kind == MicroKind.STORE] for s in schedules]
    assert sorted(stores) == [["a", "b"], ["b", "a"]]


def test_three_loads_have_eight_orders(program_cfg, avr8):
    _, cfg = program_cfg
    assert len(schedules_on(cfg, 7, avr8)) == 8


def test_schedule_explosion(avr8):
    program = load_program("uint8 a; uint8 b; uint8 c; uint8 d; uint8 e; uint8 f; uint8 g;\nvoid main() { a = b + c + d + e + f + g; }\n")
    cfg = build_program_cfg(program)
    with pytest.raises(ScheduleExplosion):
        schedules_on(cfg, 2, avr8)


def test_wide_access_is_split_low_byte_first(program_cfg, avr8):
    _, cfg = program_cfg
    [split] = schedules_on(cfg, 8, avr8)
    assert [(i.kind, i.part) for i in split.instrs] == [
        (MicroKind.LOAD, 0), (MicroKind.LOAD, 1), (MicroKind.OP, None), (MicroKind.STORE, 0), (MicroKind.STORE, 1),
    ]
    assert not split.instrs[0].atomic
    assert str(split.instrs[0]).startswith("LOAD.0")

    [whole] = schedules_on(cfg, 8, avr8, split_wide_accesses=False)
    assert kinds_of(whole) == [MicroKind.LOAD, MicroKind.STORE]
    assert all(instr.atomic and instr.width == 16 for instr in whole.instrs)


def test_short_circuit_is_one_nested_step(program_cfg, avr8):
    _, cfg = program_cfg
    [schedule] = schedules_on(cfg, 9, avr8)
    assert kinds_of(schedule) == [MicroKind.NESTED]


def test_compile_program_chooses_between_schedules(program_cfg, avr8):
    program, cfg = program_cfg
    code = compile_program(program, avr8, cfg)
    main = code["main"]
    assert main.schedules_of(full_expr_at(cfg, 5).id) == 2
    assert main.schedules_of(full_expr_at(cfg, 4).id) == 1
    assert main.instrs[-1].kind == MicroKind.RET
    assert main.listing()[0].startswith("main.000  SEQ")


def test_compile_program_rejects_too_many_schedules(program_cfg, avr8):
    program, cfg = program_cfg
    with pytest.raises(ScheduleExplosion):
        compile_program(program, avr8, cfg, cap=1)
