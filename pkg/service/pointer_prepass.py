import logging
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from domain.access import AccessPattern, AccessSets, PointsTo, SharedSet
from domain.ast import Expr, ExprKind, Program
from domain.cfg import CfgNode, NodeAccess, NodeKind, ProgramCfg
from domain.memloc import MemLoc
from service.resolver import BUILTINS


logger = logging.getLogger(__name__)

MAIN_ACTOR = "main"

# (location, is_write, volatile)
Access = Tuple[MemLoc, bool, bool]


def _loc(expr: Expr) -> MemLoc:
    return MemLoc.of_decl(expr.decl)


class AccessCollector:
    """Memory accesses of pure CFG expressions under a points-to solution."""

    def __init__(self, pts: PointsTo):
        self.pts = pts

    def pointer_targets(self, expr: Expr) -> FrozenSet[MemLoc]:
        """Locations a pointer-valued expression may point into."""
        kind = expr.kind
        if kind == ExprKind.VAR:
            if expr.decl.ctype.is_array:
                return frozenset({_loc(expr)})
            return self.pts.of(_loc(expr))
        if kind == ExprKind.ADDR:
            return self.lvalue_locs(expr.children[0])
        if kind in (ExprKind.INDEX, ExprKind.DEREF):
            result = set()
            for loc in self.lvalue_locs(expr):
                result |= self.pts.of(loc)
            return frozenset(result)
        if kind == ExprKind.COMMA:
            return self.pointer_targets(expr.children[1])
        return frozenset()

    def lvalue_locs(self, expr: Expr) -> FrozenSet[MemLoc]:
        kind = expr.kind
        if kind == ExprKind.VAR:
            return frozenset({_loc(expr)})
        if kind == ExprKind.VCAST:
            return self.lvalue_locs(expr.children[0])
        if kind == ExprKind.INDEX:
            return self.pointer_targets(expr.children[0])
        if kind == ExprKind.DEREF:
            return self.pointer_targets(expr.children[0])
        return frozenset()

    def lvalue_parts(self, expr: Expr, out: List[Access]) -> None:
        """Reads needed to locate an lvalue (indices, pointer variables)."""
        kind = expr.kind
        if kind == ExprKind.VCAST:
            self.lvalue_parts(expr.children[0], out)
        elif kind == ExprKind.INDEX:
            base, index = expr.children
            if not (base.kind == ExprKind.VAR and base.decl.ctype.is_array):
                self.reads(base, out)
            self.reads(index, out)
        elif kind == ExprKind.DEREF:
            self.reads(expr.children[0], out)

    def lvalue_access(self, expr: Expr, is_write: bool, out: List[Access], volatile: bool = False) -> None:
        volatile = volatile or expr.volatile_access
        inner = expr
        while inner.kind == ExprKind.VCAST:
            inner = inner.children[0]
            volatile = True
        for loc in sorted(self.lvalue_locs(inner)):
            out.append((loc, is_write, volatile))
        self.lvalue_parts(inner, out)

    def reads(self, expr: Expr, out: List[Access]) -> None:
        kind = expr.kind
        if kind == ExprKind.CONST:
            return
        if kind == ExprKind.VAR:
            if not expr.decl.ctype.is_array:
                out.append((_loc(expr), False, expr.volatile_access))
            return
        if kind in (ExprKind.INDEX, ExprKind.DEREF, ExprKind.VCAST):
            self.lvalue_access(expr, False, out)
            return
        if kind == ExprKind.ADDR:
            self.lvalue_parts(expr.children[0], out)
            return
        for child in expr.children:
            self.reads(child, out)

    def node_accesses(self, node: CfgNode, ret_slot: Optional[MemLoc]) -> List[Access]:
        out: List[Access] = []
        if node.kind == NodeKind.ASSIGN:
            self.reads(node.value, out)
            self.lvalue_access(node.target, True, out)
        elif node.kind == NodeKind.GUARD:
            self.reads(node.cond, out)
        elif node.kind == NodeKind.CALL:
            for arg in node.args:
                self.reads(arg, out)
            if node.result is not None:
                out.append((MemLoc.of_decl(node.result), True, False))
        elif node.kind == NodeKind.RETURN:
            if node.value is not None:
                self.reads(node.value, out)
                if ret_slot is not None:
                    out.append((ret_slot, True, False))
        elif node.kind == NodeKind.NOP and node.value is not None:
            self.reads(node.value, out)
        return out


def compute_points_to(program: Program, cfg: ProgramCfg) -> PointsTo:
    """
    Andersen-style inclusion constraints over the lowered program, solved by
    re-applying every constraint until no target set grows.
    """
    assignments: List[Tuple[Expr, Expr]] = []
    copies: List[Tuple[MemLoc, Expr]] = []
    for node in cfg.nodes.values():
        if node.kind == NodeKind.ASSIGN and node.target.ctype is not None and node.target.ctype.is_pointer:
            assignments.append((node.target, node.value))
        elif node.kind == NodeKind.CALL and node.callee not in BUILTINS:
            callee = program.function(node.callee)
            for param, arg in zip(callee.params, node.args):
                if param.ctype.is_pointer:
                    copies.append((MemLoc.of_decl(param), arg))
        elif node.kind == NodeKind.RETURN and node.value is not None:
            fn = program.function(node.function)
            if fn.ret_type.is_pointer:
                copies.append((MemLoc.return_slot(fn.name), node.value))

    returns: List[Tuple[MemLoc, MemLoc]] = []
    for node in cfg.nodes.values():
        if node.kind == NodeKind.CALL and node.result is not None and node.result.ctype.is_pointer:
            returns.append((MemLoc.of_decl(node.result), MemLoc.return_slot(node.callee)))

    pts = PointsTo()
    collector = AccessCollector(pts)
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        updates: List[Tuple[MemLoc, FrozenSet[MemLoc]]] = []
        for target, value in assignments:
            values = collector.pointer_targets(value)
            for loc in collector.lvalue_locs(target):
                updates.append((loc, values))
        for loc, value in copies:
            updates.append((loc, collector.pointer_targets(value)))
        for loc, slot in returns:
            updates.append((loc, pts.of(slot)))
        for loc, values in updates:
            old = pts.of(loc)
            if not values <= old:
                pts.targets[loc] = old | values
                changed = True
    logger.debug(f"points-to solved in {rounds} rounds: {len(pts)} pointer locations")
    return pts


def call_graph(cfg: ProgramCfg) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(cfg.functions)
    for node in cfg.nodes.values():
        if node.kind == NodeKind.CALL and node.callee not in BUILTINS:
            graph.add_edge(node.function, node.callee)
    return graph


def annotate_node_accesses(cfg: ProgramCfg, pts: PointsTo) -> None:
    collector = AccessCollector(pts)
    for node in cfg.nodes.values():
        slot = MemLoc.return_slot(node.function)
        accesses = collector.node_accesses(node, slot if slot in cfg.locations else None)
        node.accesses = NodeAccess(
            reads=frozenset(loc for loc, is_write, _ in accesses if not is_write),
            writes=frozenset(loc for loc, is_write, _ in accesses if is_write),
            nonvolatile=frozenset(loc for loc, _, volatile in accesses if not volatile),
        )


def compute_access_sets(program: Program, cfg: ProgramCfg, pts: Optional[PointsTo] = None) -> AccessSets:
    """Direct node accesses, closed transitively over the acyclic call graph."""
    if pts is not None:
        annotate_node_accesses(cfg, pts)
    direct_reads: Dict[str, Set[MemLoc]] = {name: set() for name in cfg.functions}
    direct_writes: Dict[str, Set[MemLoc]] = {name: set() for name in cfg.functions}
    for name, graph in cfg.functions.items():
        for node_id in graph.nodes:
            node = cfg.nodes[node_id]
            direct_reads[name] |= node.accesses.reads
            direct_writes[name] |= node.accesses.writes

    graph = call_graph(cfg)
    sets = AccessSets()
    for name in reversed(list(nx.topological_sort(graph))):
        reads, writes = set(direct_reads[name]), set(direct_writes[name])
        for callee in graph.successors(name):
            reads |= sets.reads[callee]
            writes |= sets.writes[callee]
        sets.reads[name] = frozenset(reads)
        sets.writes[name] = frozenset(writes)
    return sets


def compute_shared_set(
    program: Program, cfg: ProgramCfg, access: AccessSets, isr_names: Iterable[str],
) -> SharedSet:
    """
    A static location is shared when main and some ISR access it with a write
    on either side, or when two ISRs write it.
    """
    isr_names = sorted(isr_names)
    main_reads = {loc for loc in access.read_set(program.entry) if loc.is_static}
    main_writes = {loc for loc in access.write_set(program.entry) if loc.is_static}
    shared = SharedSet()
    candidates: Set[MemLoc] = set(main_reads | main_writes)
    for isr in isr_names:
        candidates |= access.static_accessed(isr)

    for loc in sorted(candidates):
        accessors = frozenset(isr for isr in isr_names if loc in access.accessed(isr))
        writers = frozenset(isr for isr in isr_names if loc in access.write_set(isr))
        main_access = loc in main_reads or loc in main_writes
        main_write = loc in main_writes
        if main_access and accessors:
            if main_write and writers:
                pattern = AccessPattern.BOTH_WRITE
            elif writers:
                pattern = AccessPattern.MAIN_READS_ISR_WRITES
            elif main_write:
                pattern = AccessPattern.MAIN_WRITES_ISR_READS
            else:
                shared.read_only.add(loc)
                continue
        elif len(writers) >= 2:
            pattern = AccessPattern.BOTH_WRITE
        else:
            continue
        shared.patterns[loc] = pattern
        shared.isr_accessors[loc] = accessors
        shared.isr_writers[loc] = writers

    nonvolatile = set()
    for node in cfg.nodes.values():
        nonvolatile |= node.accesses.nonvolatile & shared.shared
    shared.nonvolatile = frozenset(nonvolatile)
    logger.info(
        f"shared locations: {', '.join(map(str, sorted(shared.shared))) or 'none'}"
    )
    return shared
