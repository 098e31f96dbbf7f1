from domain.cfg import NodeKind
from domain.interrupts import Flag
from service.cfg_builder import build_program_cfg
from service.frontend import load_program
from service.hardware_model import isr_sources
from service.isr_scheduler import ISR_LABEL, flag_writers, global_flag_flow, schedule_isr_nodes
from service.pointer_prepass import compute_access_sets, compute_points_to, compute_shared_set
from tests.conftest import hardware_spec, load_fixture_program


def schedule(program, spec):
    cfg = build_program_cfg(program)
    access = compute_access_sets(program, cfg, compute_points_to(program, cfg))
    shared = compute_shared_set(program, cfg, access, isr_sources(program, spec))
    return cfg, schedule_isr_nodes(cfg, shared, spec, program.entry)


def site_functions(cfg, sites):
    return {cfg.nodes[site].function for site in sites}


def test_fixpoint_nodes_are_grafted_after_enabling_calls(avr8):
    cfg, sites = schedule(load_fixture_program("torn_read.c"), avr8)
    assert sites
    for site in sites:
        node = cfg.nodes[site]
        assert node.kind == NodeKind.ISR_FIXPOINT
        assert node.label == ISR_LABEL and node.synthetic
        assert len(node.successors) == 1
        assert site in cfg.functions[node.function].nodes
    sei = next(node for node in cfg.function_nodes("main") if node.kind == NodeKind.CALL and node.callee == "sei")
    assert len(sei.successors) == 2
    assert cfg.nodes[sei.successors[1]].kind == NodeKind.ISR_FIXPOINT
    assert cfg.nodes[sei.successors[1]].successors == [sei.successors[0]]


def test_no_fixpoint_after_entry_while_interrupts_are_off(avr8):
    cfg, _ = schedule(load_fixture_program("torn_read.c"), avr8)
    entry = cfg.nodes[cfg.functions["main"].entry]
    assert len(entry.successors) == 1


def test_no_fixpoint_inside_a_disabled_section(avr8):
    cfg, sites = schedule(load_fixture_program("enable_toggle.c"), avr8)
    copy = next(node for node in cfg.function_nodes("main") if node.kind == NodeKind.ASSIGN and node.loc.line == 8)
    assert all(cfg.nodes[succ].kind != NodeKind.ISR_FIXPOINT for succ in copy.successors)
    assert sites


def test_isr_bodies_and_pure_helpers_get_no_fixpoints(avr8):
    cfg, sites = schedule(load_fixture_program("uart.c"), avr8)
    functions = site_functions(cfg, sites)
    assert {"main", "getByte", "isEmpty"} <= functions
    assert "USART0_RX_vect" not in functions
    assert "getNextPos" not in functions


def test_atomic_functions_get_no_fixpoints():
    spec = hardware_spec("avr8_atomic.hw")
    cfg, sites = schedule(load_fixture_program("atomic_fn.c"), spec)
    assert sites
    assert site_functions(cfg, sites) == {"main"}


def test_guards_get_one_fixpoint_per_branch(avr8):
    program = load_program(
        "volatile uint8 f;\nvoid main() { sei(); if (f) f = 0; }\nISR(TIMER0_OVF_vect) { f = 1; }"
    )
    cfg, _ = schedule(program, avr8)
    guard = next(node for node in cfg.function_nodes("main") if node.kind == NodeKind.GUARD)
    assert [cfg.nodes[succ].kind for succ in guard.successors] == [NodeKind.ISR_FIXPOINT] * 2


def test_flag_writers_include_callers(avr8):
    program = load_fixture_program("uart.c")
    cfg = build_program_cfg(program)
    assert flag_writers(cfg, avr8) == {"main", "getByte", "USART0_RX_vect"}


def test_global_flag_flow(avr8):
    program = load_fixture_program("enable_toggle.c")
    cfg = build_program_cfg(program)
    flags = global_flag_flow(cfg, "main", Flag.DISABLED, avr8, flag_writers(cfg, avr8))
    by_callee = {
        node.callee: flags[node.id] for node in cfg.function_nodes("main") if node.kind == NodeKind.CALL
    }
    assert by_callee == {"cli": Flag.DISABLED, "sei": Flag.ENABLED}
