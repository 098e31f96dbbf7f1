from domain.cfg import NodeKind
from service.cfg_builder import build_program_cfg, to_dot
from service.frontend import load_program
from tests.conftest import load_fixture_program


def cfg_of(source: str):
    return build_program_cfg(load_program(source))


def kinds(cfg, function: str = "main"):
    return [node.kind for node in cfg.function_nodes(function)]


def test_every_function_has_entry_and_exit():
    cfg = build_program_cfg(load_fixture_program("uart.c"))
    assert set(cfg.functions) == {"getNextPos", "isEmpty", "getByte", "USART0_RX_vect", "main"}
    for name, graph in cfg.functions.items():
        assert cfg.nodes[graph.entry].label == "entry"
        assert cfg.nodes[graph.exit].label == "exit"
        assert graph.entry in graph.nodes and graph.exit in graph.nodes
    assert cfg.functions["USART0_RX_vect"].is_isr


def test_successors_stay_inside_the_function():
    cfg = build_program_cfg(load_fixture_program("rgb_led.c"))
    for name, graph in cfg.functions.items():
        members = set(graph.nodes)
        for node in cfg.function_nodes(name):
            assert all(succ in members for succ in node.successors), node


def test_guard_has_two_successors():
    cfg = cfg_of("uint8 x; void main() { if (x > 3) x = 0; else x = 1; }")
    guard, = [node for node in cfg.function_nodes("main") if node.kind == NodeKind.GUARD]
    assert len(guard.successors) == 2
    assert guard.successors[0] != guard.successors[1]


def test_short_circuit_becomes_guards():
    """`a && b` in a condition yields one guard per operand."""
    cfg = cfg_of("uint8 a; uint8 b; uint8 x; void main() { if (a && b) x = 1; }")
    assert kinds(cfg).count(NodeKind.GUARD) == 2


def test_calls_store_into_temporaries():
    cfg = cfg_of("uint8 f() { return 1; } uint8 x; void main() { x = f() + 1; }")
    call, = [node for node in cfg.function_nodes("main") if node.kind == NodeKind.CALL]
    assert call.callee == "f"
    assert call.result is not None and call.result.temporary
    assign, = [node for node in cfg.function_nodes("main") if node.kind == NodeKind.ASSIGN]
    assert "$t0" in assign.label


def test_full_expression_groups_its_nodes():
    """Nodes of `a = ++b` share one full expression whose exits leave it."""
    cfg = cfg_of("volatile uint8 a; volatile uint8 b; void main() { a = ++b; }")
    fe, = [fe for fe in cfg.full_exprs.values() if fe.function == "main" and fe.expr is not None]
    assert len(fe.nodes) >= 2
    assert fe.entry == fe.nodes[0]
    assert all(cfg.nodes[n].full_expr == fe.id for n in fe.nodes)
    assert all(exit_ not in fe.nodes for exit_ in fe.exits)


def test_unreachable_code_is_dropped():
    cfg = cfg_of("uint8 x; void main() { x = 1; return; x = 2; }")
    labels = [node.label for node in cfg.function_nodes("main")]
    assert any("x := 1" in label for label in labels)
    assert not any("x := 2" in label for label in labels)


def test_loops_have_back_edges():
    cfg = cfg_of("uint8 x; void main() { uint8 i; for (i = 0; i < 3; i++) x = i; }")
    nodes = cfg.function_nodes("main")
    position = {node.id: k for k, node in enumerate(nodes)}
    assert any(position[succ] < position[node.id] for node in nodes for succ in node.successors)


def test_return_jumps_to_exit():
    cfg = cfg_of("uint8 f(uint8 v) { if (v) return 1; return 0; } void main() { f(1); }")
    graph = cfg.functions["f"]
    returns = [node for node in cfg.function_nodes("f") if node.kind == NodeKind.RETURN]
    assert len(returns) == 2
    assert all(node.successors == [graph.exit] for node in returns)


def test_locations_cover_every_declaration():
    cfg = build_program_cfg(load_fixture_program("uart.c"))
    names = {str(loc) for loc in cfg.locations}
    assert {"rx_in", "rx_out", "rx_buff[*]", "URX0_IEN", "getNextPos.pos", "getByte.$ret"} <= names


def test_to_dot_renders_one_digraph_per_function():
    cfg = cfg_of("uint8 x; void main() { if (x) x = 0; }")
    dot = to_dot(cfg)
    assert dot.count("digraph") == 1
    assert 'digraph "main"' in dot
    assert "shape=diamond" in dot
    assert '[label="T"]' in dot and '[label="F"]' in dot

