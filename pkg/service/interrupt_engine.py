import heapq
import logging
import time
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from domain.access import AccessSets, PointsTo, SharedSet
from domain.analysis import AnalysisResult, Context
from domain.ast import Expr, ExprKind, Program
from domain.c_types import BASE_TYPES
from domain.cfg import CfgNode, FullExpr, NodeKind, ProgramCfg
from domain.exceptions import Diverged
from domain.interrupts import Flag, InterruptState
from domain.memloc import MemLoc
from domain.octagon import Linear, Octagon
from domain.state import AbstractState
from domain.warning import AnalysisWarning, WarningKind, shared_warning
from domain.wellformed import WfVerdict
from dto.hardware_spec import HardwareSpec
from service.hardware_model import (
    GLOBAL_FLAG, classify_access, initial_interrupt_state, interrupt_transfer, is_atomic_access,
)
from service.numeric_eval import Evaluator
from service.pointer_prepass import call_graph
from service.resolver import BUILTINS, fold_constant


logger = logging.getLogger(__name__)

Edges = List[Tuple[int, AbstractState]]


@dataclass
class EngineOptions:
    context_depth: int = 1
    widening_delay: int = 2
    max_visits: int = 100_000
    isr_widen_after: int = 3


@dataclass
class MemoEntry:
    input: AbstractState
    output: AbstractState


@dataclass
class Frame:
    """Analysis mode of the function currently analyzed."""

    in_isr: bool = False
    in_atomic: bool = False

    @property
    def interruptible(self) -> bool:
        return not (self.in_isr or self.in_atomic)


def widening_thresholds(cfg: ProgramCfg) -> Tuple[int, ...]:
    """Type bounds plus every literal c of the program and c +- 1."""
    values: Set[int] = set()
    for ctype in BASE_TYPES.values():
        if ctype.is_integer:
            values.update(ctype.bounds())
    for node in cfg.nodes.values():
        for expr in (node.target, node.value, node.cond, *node.args):
            if expr is None:
                continue
            for sub in expr.walk():
                if sub.kind == ExprKind.CONST:
                    values.update((sub.value - 1, sub.value, sub.value + 1))
    return tuple(sorted(values))


def reverse_postorder(cfg: ProgramCfg, name: str) -> Dict[int, int]:
    graph = cfg.functions[name]
    order: List[int] = []
    seen = {graph.entry}
    stack = [(graph.entry, iter(cfg.nodes[graph.entry].successors))]
    while stack:
        node_id, successors = stack[-1]
        for succ in successors:
            if succ is not None and succ not in seen:
                seen.add(succ)
                stack.append((succ, iter(cfg.nodes[succ].successors)))
                break
        else:
            stack.pop()
            order.append(node_id)
    order.reverse()
    return {node_id: position for position, node_id in enumerate(order)}


class InterruptEngine:
    """
    Flow- and context-sensitive fixed point over (octagon, interrupt flags).
    Calls and ISR bodies are analyzed on localized states; isr-fixpoint nodes
    join the effect of every ISR that may fire.
    """

    def __init__(
        self,
        program: Program,
        cfg: ProgramCfg,
        spec: HardwareSpec,
        access: AccessSets,
        shared: SharedSet,
        pts: PointsTo,
        isr_map: Dict[str, str],
        options: Optional[EngineOptions] = None,
    ):
        self.program = program
        self.cfg = cfg
        self.spec = spec
        self.access = access
        self.shared = shared
        self.isr_map = dict(sorted(isr_map.items()))
        self.options = options or EngineOptions()
        self.locations = cfg.locations
        self.evaluator = Evaluator(cfg.locations, pts, spec)
        self.thresholds = widening_thresholds(cfg)
        self.graph = call_graph(cfg)
        self.atomic = set(spec.atomic_functions)
        self.result = AnalysisResult()
        self.memo: Dict[Tuple[str, Context, bool], MemoEntry] = {}
        self.rpo: Dict[str, Dict[int, int]] = {name: reverse_postorder(cfg, name) for name in cfg.functions}
        self.heads: Dict[str, FrozenSet[int]] = {}
        self.reported: Set[Tuple[str, str]] = set()
        self.nonvolatile_reported: Set[MemLoc] = set()

        isr_statics: Set[MemLoc] = set()
        for isr in self.isr_map:
            isr_statics |= access.static_accessed(isr)
        self.isr_statics = frozenset(isr_statics)
        self.isr_writes = frozenset(loc for isr in self.isr_map for loc in access.static_writes(isr))

        with_fixpoints = {node.function for node in cfg.nodes.values() if node.kind == NodeKind.ISR_FIXPOINT}
        for name in list(with_fixpoints):
            with_fixpoints |= nx.ancestors(self.graph, name)
        self.with_fixpoints = frozenset(with_fixpoints)
        self.scopes: Dict[str, Tuple[MemLoc, ...]] = {name: self.scope(name) for name in cfg.functions}

    # -- localization --------------------------------------------------

    def own_locals(self, name: str) -> FrozenSet[MemLoc]:
        return frozenset(loc for loc in self.locations if loc.function == name)

    def scope(self, name: str) -> Tuple[MemLoc, ...]:
        """Locations live while `name` runs that it (or its callees) may touch."""
        callees = nx.descendants(self.graph, name)
        locs = {
            loc for loc in self.access.accessed(name)
            if loc.is_static or loc.function == name or loc.function not in callees
        }
        locs |= self.own_locals(name)
        if name in self.with_fixpoints:
            locs |= self.isr_statics
        return self.locations.numeric(locs)

    def bounds_of(self, locs: Iterable[MemLoc]) -> Dict[MemLoc, Tuple[int, int]]:
        return {loc: self.locations.bounds(loc) for loc in locs}

    def initial_value(self, loc: MemLoc) -> Tuple[int, int]:
        info = self.locations.info(loc)
        decl = info.decl
        if decl is None or not loc.is_static or decl.is_register:
            return info.lo, info.hi
        value = fold_constant(decl.init) if decl.init is not None else 0
        value = 0 if value is None else value
        return value, value

    def initial_state(self, name: str) -> AbstractState:
        vars = self.scopes[name]
        oct = Octagon.top(vars, {loc: self.initial_value(loc) for loc in vars})
        ints = initial_interrupt_state(self.spec, self.isr_map.values())
        return AbstractState(oct, ints)

    # -- driver --------------------------------------------------------

    def analyze_program(self) -> AnalysisResult:
        started = time.perf_counter()
        entry = self.program.entry
        self.result.stats.isr_fixpoint_sites = sum(
            1 for node in self.cfg.nodes.values() if node.kind == NodeKind.ISR_FIXPOINT
        )
        logger.info(
            f"analyzing {entry} with ISRs {', '.join(self.isr_map) or 'none'}; "
            f"{len(self.scopes[entry])} tracked locations in {entry}"
        )
        self.analyze_function(entry, (), self.initial_state(entry), Frame())
        self.result.warnings.sort(key=AnalysisWarning.sort_key)
        self.result.stats.elapsed_seconds = time.perf_counter() - started
        stats = self.result.stats
        logger.info(
            f"fixed point reached: {stats.node_visits} node visits, {stats.isr_analyses} ISR analyses, "
            f"{stats.memo_hits} memo hits, {len(self.result.warnings)} warnings"
        )
        return self.result

    def analyze_function(self, name: str, context: Context, entry_state: AbstractState, frame: Frame) -> AbstractState:
        """Exit state of `name` for an entry state over its scope, memoized per (name, context)."""
        key = (name, context, frame.interruptible)
        cached = self.memo.get(key)
        if cached is not None:
            if entry_state.leq(cached.input):
                self.result.stats.memo_hits += 1
                logger.debug(f"memo hit for {name} in context {context}")
                return cached.output
            entry_state = cached.input.join(entry_state)
        exit_state = self.fixpoint(name, context, entry_state, frame)
        self.memo[key] = MemoEntry(entry_state, exit_state)
        return exit_state

    def fixpoint(self, name: str, context: Context, entry_state: AbstractState, frame: Frame) -> AbstractState:
        graph = self.cfg.functions[name]
        rpo = self.rpo[name]
        loop_heads = self.loop_heads(name)
        pre: Dict[int, AbstractState] = {graph.entry: entry_state}
        updates: Dict[int, int] = {}
        queue = [rpo[graph.entry]]
        queued = {graph.entry}
        by_position = {position: node_id for node_id, position in rpo.items()}

        while queue:
            node_id = by_position[heapq.heappop(queue)]
            queued.discard(node_id)
            self.visit()
            for succ, out in self.transfer_node(pre[node_id], self.cfg.nodes[node_id], context, frame):
                if out.is_bottom or succ not in rpo:
                    continue
                old = pre.get(succ)
                if old is None:
                    new = out
                else:
                    joined = old.join(out)
                    if joined.leq(old):
                        continue
                    new = joined
                    if succ in loop_heads:
                        updates[succ] = updates.get(succ, 0) + 1
                        if updates[succ] > self.options.widening_delay:
                            new = old.widen(joined, self.thresholds)
                            logger.debug(f"widening at node {succ} of {name}")
                pre[succ] = new
                if succ not in queued:
                    queued.add(succ)
                    heapq.heappush(queue, rpo[succ])

        pre = self.descend(name, context, pre, frame)
        for node_id, state in pre.items():
            self.result.record(node_id, context, state)
            self.result.record_access(node_id, context, self.accessed_state(state, self.cfg.nodes[node_id], frame))
        exit_state = pre.get(graph.exit)
        if exit_state is None:
            return AbstractState.bottom(self.scopes[name], entry_state.ints)
        return exit_state

    def descend(self, name: str, context: Context, pre: Dict[int, AbstractState], frame: Frame) -> Dict[int, AbstractState]:
        """
        One decreasing iteration in reverse postorder from the post-fixpoint.
        Loop heads keep their ascending state; every other node is recomputed
        from its (forward) predecessors.
        """
        graph = self.cfg.functions[name]
        rpo = self.rpo[name]
        heads = self.loop_heads(name)
        incoming: Dict[int, List[AbstractState]] = {}
        refined: Dict[int, AbstractState] = {}
        for node_id in sorted(pre, key=rpo.get):
            if node_id == graph.entry or node_id in heads:
                state = pre[node_id]
            else:
                states = incoming.get(node_id)
                if not states:
                    continue
                state = states[0]
                for other in states[1:]:
                    state = state.join(other)
            refined[node_id] = state
            self.visit()
            for succ, out in self.transfer_node(state, self.cfg.nodes[node_id], context, frame):
                if out.is_bottom or succ not in rpo or succ in heads:
                    continue
                incoming.setdefault(succ, []).append(out)
        return refined

    def loop_heads(self, name: str) -> FrozenSet[int]:
        if name not in self.heads:
            rpo = self.rpo[name]
            self.heads[name] = frozenset(
                succ for node_id in rpo for succ in self.cfg.nodes[node_id].successors
                if succ in rpo and rpo[succ] <= rpo[node_id]
            )
        return self.heads[name]

    def visit(self) -> None:
        self.result.stats.node_visits += 1
        if self.result.stats.node_visits > self.options.max_visits:
            raise Diverged(f"fixed point exceeded {self.options.max_visits} node visits")

    # -- transfer ------------------------------------------------------

    def accessed_state(self, state: AbstractState, node: CfgNode, frame: Frame) -> AbstractState:
        if state.is_bottom or not (frame.interruptible and node.accesses.all):
            return state
        return self.handle_shared_access(state, node, self.cfg.full_expr_of(node))

    def transfer_node(self, state: AbstractState, node: CfgNode, context: Context, frame: Frame) -> Edges:
        """Post-states along each successor edge of `node`."""
        if state.is_bottom:
            return []
        state = self.accessed_state(state, node, frame)
        oct, ints = state.oct, state.ints
        kind = node.kind

        if kind == NodeKind.GUARD:
            return [
                (succ, AbstractState(self.evaluator.guard(oct, node.cond, node.polarity(slot)), ints))
                for slot, succ in enumerate(node.successors)
            ]
        if kind == NodeKind.ASSIGN:
            ints = interrupt_transfer(node, ints, self.spec, lambda e: self.evaluator.interval(e, oct))
            ints = self.indirect_enable_writes(node, ints)
            post = AbstractState(self.evaluator.assign(oct, node.target, node.value), ints)
        elif kind == NodeKind.CALL:
            if node.callee in BUILTINS:
                post = AbstractState(oct, interrupt_transfer(node, ints, self.spec))
            else:
                post = self.localize_call(state, node, context, frame)
        elif kind == NodeKind.RETURN:
            post = state
            slot = MemLoc.return_slot(node.function)
            if node.value is not None and slot in oct.index:
                rhs = self.evaluator.linear(node.value, oct)
                if rhs is None:
                    rhs = self.evaluator.interval(node.value, oct)
                post = state.with_oct(oct.assign(slot, rhs, self.locations.bounds(slot)))
        elif kind == NodeKind.ISR_FIXPOINT:
            post = self.run_isr_fixpoint(state) if frame.interruptible else state
        else:
            post = state
        return [(succ, post) for succ in node.successors]

    def indirect_enable_writes(self, node: CfgNode, ints: InterruptState) -> InterruptState:
        """Stores through pointers into enable registers make the affected flags unknown."""
        target = node.target
        while target.kind == ExprKind.VCAST:
            target = target.children[0]
        if target.kind == ExprKind.VAR or self.spec.agnostic:
            return ints
        for loc in self.evaluator.store_targets(target):
            decl = self.locations.info(loc).decl if loc in self.locations else None
            if decl is None or not decl.is_register:
                continue
            semantics = classify_access(decl, self.spec)
            if not semantics.is_enable:
                continue
            names = [name for _, name in semantics.bits] if semantics.bits else [semantics.source or GLOBAL_FLAG]
            for name in names:
                ints = ints.with_global(Flag.UNKNOWN) if name == GLOBAL_FLAG else ints.with_source(name, Flag.UNKNOWN)
        return ints

    # -- calls ---------------------------------------------------------

    def localize_call(self, state: AbstractState, node: CfgNode, context: Context, frame: Frame) -> AbstractState:
        callee = node.callee
        fn = self.program.function(callee)
        caller_vars = state.oct.vars
        own = self.locations.numeric(self.own_locals(callee))
        extended = state.oct.extend(own, self.bounds_of(own))
        for param, arg in zip(fn.params, node.args):
            target = Expr(ExprKind.VAR, node.loc, name=param.name, ctype=param.ctype, decl=param)
            extended = self.evaluator.assign(extended, target, arg)

        keep = self.scopes[callee]
        missing = [loc for loc in keep if loc not in extended.index]
        if missing:
            extended = extended.extend(missing, self.bounds_of(missing))
        small = extended.restrict(keep)

        ints = state.ints
        atomic = callee in self.atomic
        callee_frame = Frame(frame.in_isr, frame.in_atomic or atomic)
        if atomic:
            ints = ints.with_global(Flag.DISABLED)
        depth = self.options.context_depth
        callee_context = (context + (node.id,))[-depth:] if depth > 0 else ()
        out = self.analyze_function(callee, callee_context, AbstractState(small, ints), callee_frame)
        if out.is_bottom:
            return AbstractState.bottom(caller_vars, state.ints)

        modified = set(self.access.write_set(callee)) | set(own)
        if callee in self.with_fixpoints:
            modified |= self.isr_writes
        merged = out.oct.embed(extended, [loc for loc in modified if loc in extended.index])
        if node.result is not None:
            result = MemLoc.of_decl(node.result)
            slot = MemLoc.return_slot(callee)
            if result in merged.index and slot in merged.index:
                merged = merged.assign(result, Linear(0, slot, 1), self.locations.bounds(result))
        merged = merged.restrict(caller_vars)
        ints_out = out.ints.with_global(state.ints.global_flag) if atomic else out.ints
        return AbstractState(merged, ints_out)

    # -- interrupts ----------------------------------------------------

    def firing(self, ints: InterruptState) -> List[str]:
        return [isr for isr, source in self.isr_map.items() if ints.can_fire(source)]

    def analyze_isr(self, isr: str, state: AbstractState) -> AbstractState:
        """One run of `isr` to completion from `state`, embedded back into it."""
        self.result.stats.isr_analyses += 1
        keep = self.scopes[isr]
        missing = [loc for loc in keep if loc not in state.oct.index]
        extended = state.oct.extend(missing, self.bounds_of(missing)) if missing else state.oct
        small = extended.restrict(keep)
        out = self.analyze_function(
            isr, (), AbstractState(small, state.ints.with_global(Flag.DISABLED)), Frame(in_isr=True),
        )
        if out.is_bottom:
            return AbstractState.bottom(state.oct.vars, state.ints)
        statics = [loc for loc in out.oct.vars if loc in state.oct.index]
        modified = [loc for loc in self.access.write_set(isr) if loc in state.oct.index]
        merged = out.oct.restrict(statics).embed(state.oct, modified)
        return AbstractState(merged, out.ints.with_global(state.ints.global_flag))

    def run_isr_fixpoint(self, state: AbstractState) -> AbstractState:
        """
        Least state containing `state` and closed under running any ISR that
        may fire, widened after a few rounds and refined by one descending step.
        """
        current = state
        rounds = 0
        while True:
            firing = self.firing(current.ints)
            if not firing:
                return current
            step = current
            for isr in firing:
                step = step.join(self.analyze_isr(isr, current))
            rounds += 1
            logger.debug(f"ISR fixpoint round {rounds}: {', '.join(firing)}")
            if step.leq(current):
                break
            if rounds >= self.options.isr_widen_after:
                current = current.widen(step, self.thresholds)
            else:
                current = step
            self.visit()
        refined = state
        for isr in self.firing(current.ints):
            refined = refined.join(self.analyze_isr(isr, current))
        return refined

    def handle_shared_access(self, state: AbstractState, node: CfgNode, fe: Optional[FullExpr]) -> AbstractState:
        """
        Shared-access dispatch: atomic well-formed accesses pass unchanged (a
        write also written by an ISR warns about data loss); a full expression
        that is not well-formed, or any non-atomic access, havocs every shared
        location of the full expression to its type bounds.
        """
        touched = self.shared.intersect(node.accesses.all)
        if not touched:
            return state
        loc = fe.loc if fe is not None and fe.loc is not None else node.loc

        for memloc in sorted(touched & node.accesses.nonvolatile):
            if memloc not in self.nonvolatile_reported:
                self.nonvolatile_reported.add(memloc)
                self.warn(shared_warning(WarningKind.NON_VOLATILE_SHARED, node.loc, [memloc]))

        firing = set(self.firing(state.ints))
        racing = [
            memloc for memloc in sorted(touched)
            if firing & self.shared.isr_accessors.get(memloc, frozenset())
        ]
        if not racing:
            return state

        atomic = all(is_atomic_access(self.locations.ctype(memloc), self.spec) for memloc in racing)
        verdict = fe.well_formed if fe is not None else None
        well_formed = verdict.well_formed if isinstance(verdict, WfVerdict) else True

        if atomic and well_formed:
            lost = [
                memloc for memloc in racing
                if memloc in node.accesses.writes and firing & self.shared.isr_writers.get(memloc, frozenset())
            ]
            if lost:
                self.warn(shared_warning(WarningKind.DATA_LOSS, node.loc, lost))
            return state

        havoc = set(racing)
        if fe is not None:
            for member in fe.nodes:
                havoc |= self.shared.intersect(self.cfg.nodes[member].accesses.all)
        if atomic:
            self.warn(shared_warning(WarningKind.UNSPECIFIED_ORDER, loc, havoc, f"rule {verdict.reason}"))
        else:
            wide = [m for m in racing if not is_atomic_access(self.locations.ctype(m), self.spec)]
            self.warn(shared_warning(WarningKind.NON_ATOMIC_ACCESS, loc, wide))
        return state.with_oct(self.evaluator.havoc(state.oct, sorted(havoc)))

    def warn(self, warning: AnalysisWarning) -> None:
        if warning.key in self.reported:
            return
        self.reported.add(warning.key)
        self.result.warnings.append(warning)
        logger.warning(str(warning))


def analyze_program(
    program: Program,
    cfg: ProgramCfg,
    spec: HardwareSpec,
    access: AccessSets,
    shared: SharedSet,
    pts: PointsTo,
    isr_map: Dict[str, str],
    options: Optional[EngineOptions] = None,
) -> Tuple[AnalysisResult, InterruptEngine]:
    engine = InterruptEngine(program, cfg, spec, access, shared, pts, isr_map, options)
    return engine.analyze_program(), engine
