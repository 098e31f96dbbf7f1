import logging
from typing import Dict, List, Set

import networkx as nx

from domain.access import SharedSet
from domain.cfg import CfgNode, NodeKind, ProgramCfg
from domain.interrupts import Flag, InterruptState
from dto.hardware_spec import HardwareSpec
from service.hardware_model import initial_interrupt_state, interrupt_transfer, may_enable
from service.pointer_prepass import call_graph


logger = logging.getLogger(__name__)

ISR_LABEL = "ISR()"


def flag_writers(cfg: ProgramCfg, spec: HardwareSpec) -> Set[str]:
    """Functions that may change an enable flag, directly or through callees."""
    graph = call_graph(cfg)
    direct = {
        node.function for node in cfg.nodes.values()
        if (node.kind == NodeKind.CALL and node.callee in ("sei", "cli"))
        or interrupt_transfer(node, InterruptState(Flag.DISABLED), spec) != InterruptState(Flag.DISABLED)
        or interrupt_transfer(node, InterruptState(Flag.ENABLED), spec) != InterruptState(Flag.ENABLED)
    }
    writers = set(direct)
    for name in direct:
        writers |= nx.ancestors(graph, name)
    return writers


def global_flag_flow(cfg: ProgramCfg, name: str, start: Flag, spec: HardwareSpec, writers: Set[str]) -> Dict[int, Flag]:
    """Global enable flag after each node of one function (intraprocedural, calls havoc it)."""
    graph = cfg.functions[name]
    atomic = set(spec.atomic_functions)
    before: Dict[int, Flag] = {graph.entry: start}
    after: Dict[int, Flag] = {}
    worklist = [graph.entry]
    while worklist:
        node_id = worklist.pop()
        node = cfg.nodes[node_id]
        flag = before[node_id]
        if node.kind == NodeKind.CALL and node.callee not in ("sei", "cli"):
            if node.callee in writers and node.callee not in atomic:
                flag = Flag.UNKNOWN
        else:
            flag = interrupt_transfer(node, InterruptState(flag), spec).global_flag
        after[node_id] = flag
        for succ in node.successors:
            old = before.get(succ)
            new = flag if old is None else old.join(flag)
            if new != old:
                before[succ] = new
                worklist.append(succ)
    return after


def _new_fixpoint_node(cfg: ProgramCfg, after: CfgNode, successor: int) -> CfgNode:
    node = CfgNode(
        cfg.new_id(), NodeKind.ISR_FIXPOINT, after.function, after.loc,
        successors=[successor], synthetic=True, label=ISR_LABEL,
    )
    cfg.nodes[node.id] = node
    cfg.functions[after.function].nodes.append(node.id)
    return node


def schedule_isr_nodes(cfg: ProgramCfg, shared: SharedSet, spec: HardwareSpec, entry: str = "main") -> List[int]:
    """
    Graft isr-fixpoint nodes onto the CFGs of main-reachable code: after the
    entry of main, after every node that may enable an interrupt and after
    every node touching shared data. The direct edge is kept; guards get one
    fixpoint node per branch. Points where the global flag is definitely off
    and atomic functions get none. Returns the inserted node ids.
    """
    graph = call_graph(cfg)
    if entry not in graph:
        return []
    reachable = {entry} | nx.descendants(graph, entry)
    atomic = set(spec.atomic_functions)
    writers = flag_writers(cfg, spec)
    initial = initial_interrupt_state(spec, spec.source_names).global_flag

    inserted: List[int] = []
    for name in sorted(reachable):
        if name in atomic or cfg.functions[name].is_isr:
            continue
        start = initial if name == entry else Flag.UNKNOWN
        flags = global_flag_flow(cfg, name, start, spec, writers)
        fn = cfg.functions[name]
        for node_id in list(fn.nodes):
            node = cfg.nodes[node_id]
            if node.kind == NodeKind.ISR_FIXPOINT or node_id not in flags:
                continue
            wanted = (
                (name == entry and node_id == fn.entry)
                or may_enable(node, spec)
                or bool(shared.intersect(node.accesses.all))
            )
            if not wanted or flags[node_id] == Flag.DISABLED:
                continue
            if node.is_guard:
                for slot, succ in enumerate(node.successors):
                    fixpoint = _new_fixpoint_node(cfg, node, succ)
                    node.successors[slot] = fixpoint.id
                    inserted.append(fixpoint.id)
            elif node.successors:
                succ = node.successors[0]
                if cfg.nodes[succ].kind == NodeKind.ISR_FIXPOINT:
                    continue
                fixpoint = _new_fixpoint_node(cfg, node, succ)
                node.successors = [succ, fixpoint.id]
                inserted.append(fixpoint.id)
    logger.info(f"scheduled {len(inserted)} isr-fixpoint nodes")
    return inserted
