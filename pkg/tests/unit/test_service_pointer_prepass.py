from domain.access import AccessPattern
from domain.cfg import NodeKind
from domain.memloc import MemLoc
from service.cfg_builder import build_program_cfg
from service.frontend import load_program
from service.pointer_prepass import (
    call_graph, compute_access_sets, compute_points_to, compute_shared_set,
)
from tests.conftest import load_fixture_program


def prepass(program):
    cfg = build_program_cfg(program)
    pts = compute_points_to(program, cfg)
    access = compute_access_sets(program, cfg, pts)
    return cfg, pts, access


def shared_of(program, isrs):
    cfg, _, access = prepass(program)
    return compute_shared_set(program, cfg, access, isrs)


a, b, p = MemLoc.global_("a"), MemLoc.global_("b"), MemLoc.global_("p")


def test_points_to_collects_every_address_taken():
    _, pts, _ = prepass(load_fixture_program("pointers.c"))
    assert pts.of(p) == {a, b}
    assert pts.of(a) == frozenset()


def test_points_to_through_parameters_and_returns():
    program = load_program(
        "uint8 g; uint8 h; uint8 *q;\n"
        "uint8 *pick(uint8 *s) { return s; }\n"
        "void main() { q = pick(&g); *q = 1; }"
    )
    _, pts, _ = prepass(program)
    assert pts.of(MemLoc.local("pick", "s")) == {MemLoc.global_("g")}
    assert pts.of(MemLoc.global_("q")) == {MemLoc.global_("g")}


def test_stores_through_pointers_write_every_target():
    cfg, _, _ = prepass(load_fixture_program("pointers.c"))
    store = next(
        node for node in cfg.function_nodes("main")
        if node.kind == NodeKind.ASSIGN and node.loc.line == 9
    )
    assert store.accesses.writes == {a, b}
    assert store.accesses.reads == {p}
    assert {a, b, p} <= store.accesses.nonvolatile


def test_access_sets_are_closed_over_callees():
    program = load_fixture_program("calls.c")
    cfg, _, access = prepass(program)
    assert MemLoc.local("clamp", "v") in access.read_set("twice")
    assert MemLoc.local("clamp", "v") in access.read_set("main")
    assert MemLoc.global_("result") in access.write_set("main")
    assert MemLoc.global_("result") not in access.accessed("clamp")
    assert set(call_graph(cfg).edges) == {("main", "twice"), ("twice", "clamp")}


def test_access_sets_describe():
    _, _, access = prepass(load_program("uint8 g; void main() { g = 1; }"))
    assert access.describe() == ["main: reads {} writes {g}"]


def test_shared_set_of_uart_receiver():
    shared = shared_of(load_fixture_program("uart.c"), ["USART0_RX_vect"])
    assert shared.patterns == {
        MemLoc.global_("rx_in"): AccessPattern.MAIN_READS_ISR_WRITES,
        MemLoc.global_("rx_out"): AccessPattern.MAIN_WRITES_ISR_READS,
        MemLoc.array("rx_buff"): AccessPattern.MAIN_READS_ISR_WRITES,
        MemLoc.register("URX0_IEN"): AccessPattern.BOTH_WRITE,
    }
    assert shared.nonvolatile == frozenset()
    assert MemLoc.register("UDR") not in shared
    assert MemLoc.register("PORTB") not in shared


def test_shared_set_tracks_accessing_isrs():
    shared = shared_of(load_fixture_program("two_isrs.c"), ["USART0_RX_vect", "TIMER0_OVF_vect"])
    assert shared.isr_accessors[MemLoc.global_("rx_count")] == {"USART0_RX_vect"}
    assert shared.isr_writers[MemLoc.global_("ticks")] == {"TIMER0_OVF_vect"}
    assert "shared ticks: main-reads/isr-writes" in shared.describe()


def test_read_only_sharing_is_not_shared():
    program = load_program("uint8 k = 3; uint8 y; void main() { y = k; } ISR(T_vect) { uint8 z = k; }")
    shared = shared_of(program, ["T_vect"])
    assert len(shared) == 0
    assert shared.read_only == {MemLoc.global_("k")}
    assert "read-only k" in shared.describe()


def test_two_writing_isrs_share_a_location():
    program = load_program("uint8 c; void main() { } ISR(A_vect) { c = 1; } ISR(B_vect) { c = 2; }")
    shared = shared_of(program, ["A_vect", "B_vect"])
    assert shared.pattern(MemLoc.global_("c")) == AccessPattern.BOTH_WRITE
    assert shared.isr_writers[MemLoc.global_("c")] == {"A_vect", "B_vect"}


def test_non_volatile_shared_locations():
    program = load_program("uint8 c; volatile uint8 v; void main() { c = v; } ISR(A_vect) { c = 1; v = 2; }")
    shared = shared_of(program, ["A_vect"])
    assert shared.shared == {MemLoc.global_("c"), MemLoc.global_("v")}
    assert shared.nonvolatile == {MemLoc.global_("c")}
    assert "shared c: both-write (non-volatile)" in shared.describe()


def test_locals_are_never_shared():
    program = load_program("uint8 g; void main() { uint8 l = g; } ISR(A_vect) { g = 1; }")
    shared = shared_of(program, ["A_vect"])
    assert shared.shared == {MemLoc.global_("g")}
