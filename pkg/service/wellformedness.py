import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Union

import networkx as nx

from domain.access import AccessSets, PointsTo, SharedSet
from domain.ast import Expr, ExprKind
from domain.cfg import FullExpr, NodeKind, ProgramCfg
from domain.exceptions import RecursionUnsupported
from domain.memloc import MemLoc
from domain.wellformed import WfStep, WfVerdict
from service.pointer_prepass import AccessCollector, call_graph
from service.printer import format_expr
from service.resolver import BUILTINS


logger = logging.getLogger(__name__)


@dataclass
class SharedInfo:
    """
    What the well-formedness rules need to know about the rest of the
    program: the shared locations, which functions are competing when called
    and which ones write shared data.
    """

    shared: FrozenSet[MemLoc]
    competing_functions: FrozenSet[str]
    shared_writers: FrozenSet[str]
    collector: AccessCollector

    @classmethod
    def build(cls, cfg: ProgramCfg, access: AccessSets, shared: SharedSet, pts: PointsTo) -> "SharedInfo":
        graph = call_graph(cfg)
        try:
            order = list(reversed(list(nx.topological_sort(graph))))
        except nx.NetworkXUnfeasible:
            cycle = nx.find_cycle(graph)
            names = " -> ".join([edge[0] for edge in cycle] + [cycle[-1][1]])
            raise RecursionUnsupported(f"recursive call chain {names}")

        volatile: Dict[str, bool] = {name: False for name in cfg.functions}
        for node in cfg.nodes.values():
            exprs = [node.target, node.value, node.cond, *node.args]
            if any(e is not None and any(sub.volatile_access for sub in e.walk()) for e in exprs):
                volatile[node.function] = True
        for name in order:
            volatile[name] = volatile[name] or any(volatile[callee] for callee in graph.successors(name))

        competing = frozenset(
            name for name in cfg.functions if volatile[name] or shared.intersect(access.accessed(name))
        )
        writers = frozenset(name for name in cfg.functions if shared.intersect(access.write_set(name)))
        return cls(shared.shared, competing, writers, AccessCollector(pts))

    @classmethod
    def empty(cls) -> "SharedInfo":
        return cls(frozenset(), frozenset(), frozenset(), AccessCollector(PointsTo()))


class Facts(NamedTuple):
    well_formed: bool
    competing: bool
    writes: int


class WellFormednessChecker:
    """Bottom-up application of the six rules; records a derivation."""

    def __init__(self, info: SharedInfo):
        self.info = info
        self.steps: List[WfStep] = []
        self.reason: Optional[str] = None
        self.reason_loc = None
        self.callee_writes = False

    def record(self, rule: str, expr: Expr, holds: bool, note: str = "") -> None:
        text = format_expr(expr) + (f" ({note})" if note else "")
        self.steps.append(WfStep(rule, text, expr.loc, holds))
        if not holds and self.reason is None:
            self.reason = rule
            self.reason_loc = expr.loc

    def writes_shared(self, lvalue: Expr) -> bool:
        return bool(self.info.collector.lvalue_locs(lvalue) & self.info.shared)

    def lvalue_parts(self, expr: Expr) -> Facts:
        """Sub-expressions evaluated to locate an lvalue, without the access itself."""
        kind = expr.kind
        if kind == ExprKind.VCAST:
            return self.lvalue_parts(expr.children[0])
        if kind == ExprKind.INDEX:
            base, index = expr.children
            left = self.check(base)
            right = self.check(index)
            return self.combine("3", expr, left, right)
        if kind == ExprKind.DEREF:
            return self.check(expr.children[0])
        return Facts(True, False, 0)

    def access_competing(self, expr: Expr) -> bool:
        return expr.volatile_access

    def combine(self, rule: str, expr: Expr, left: Facts, right: Facts) -> Facts:
        both = left.competing and right.competing
        if both:
            self.record(f"{rule}b", expr, False, "both operands are competing")
        return Facts(left.well_formed and right.well_formed and not both, left.competing or right.competing,
                     left.writes + right.writes)

    def check(self, expr: Expr) -> Facts:
        kind = expr.kind
        if kind == ExprKind.CONST:
            return Facts(True, False, 0)
        if kind == ExprKind.VAR:
            competing = not expr.decl.ctype.is_array and expr.volatile_access
            if competing:
                self.record("1", expr, True, "volatile access, competing")
            return Facts(True, competing, 0)
        if kind in (ExprKind.VCAST, ExprKind.INDEX, ExprKind.DEREF):
            parts = self.lvalue_parts(expr)
            competing = parts.competing or self.access_competing(expr)
            return Facts(parts.well_formed, competing, parts.writes)
        if kind == ExprKind.ADDR:
            return self.lvalue_parts(expr.children[0])
        if kind == ExprKind.UNARY:
            return self.check(expr.children[0])
        if kind == ExprKind.BINARY:
            left = self.check(expr.children[0])
            right = self.check(expr.children[1])
            return self.combine("3", expr, left, right)
        if kind in (ExprKind.LOGIC, ExprKind.COMMA):
            left = self.check(expr.children[0])
            right = self.check(expr.children[1])
            if left.competing and right.competing:
                self.record("4", expr, True, "operands separated by a sequence point")
            return Facts(left.well_formed and right.well_formed, left.competing or right.competing,
                         left.writes + right.writes)
        if kind == ExprKind.CALL:
            return self.check_call(expr)
        if kind == ExprKind.ASSIGN:
            return self.check_assign(expr)
        return Facts(True, False, 0)

    def check_call(self, expr: Expr) -> Facts:
        args = [self.check(arg) for arg in expr.children]
        competing_args = sum(1 for arg in args if arg.competing)
        if competing_args > 1:
            self.record("5", expr, False, f"{competing_args} competing arguments in unspecified order")
        well_formed = all(arg.well_formed for arg in args) and competing_args <= 1
        callee_competing = expr.name not in BUILTINS and expr.name in self.info.competing_functions
        if callee_competing:
            self.record("5", expr, True, f"{expr.name} accesses shared data, competing")
        return Facts(well_formed, callee_competing or competing_args > 0, sum(arg.writes for arg in args))

    def calls_shared_writer(self, expr: Expr) -> bool:
        return any(
            node.kind == ExprKind.CALL and node.name in self.info.shared_writers for node in expr.walk()
        )

    def check_assign(self, expr: Expr) -> Facts:
        lvalue, rhs = expr.children
        parts = self.lvalue_parts(lvalue)
        value = self.check(rhs)
        lvalue_competing = parts.competing or self.access_competing(lvalue)
        shared_target = self.writes_shared(lvalue)
        rhs_writes = value.writes + parts.writes > 0 or self.calls_shared_writer(rhs)
        rule_a = not lvalue_competing and value.well_formed and parts.well_formed
        rule_b = value.well_formed and parts.well_formed and not rhs_writes
        well_formed = rule_a or rule_b
        if not well_formed and value.well_formed and parts.well_formed:
            self.record("6", expr, False, "competing lvalue and the right-hand side writes shared data")
        elif well_formed and lvalue_competing:
            self.record("6b", expr, True, "right-hand side does not write shared data")
        writes = value.writes + parts.writes + (1 if shared_target else 0)
        return Facts(well_formed, lvalue_competing or value.competing, writes)


def classify_competing(expr: Expr, info: SharedInfo) -> bool:
    """True iff `expr` accesses volatile data or calls a function touching shared data."""
    return WellFormednessChecker(info).check(expr).competing


def is_well_formed(full_expr: Union[FullExpr, Expr, None], info: SharedInfo) -> WfVerdict:
    expr = full_expr.expr if isinstance(full_expr, FullExpr) else full_expr
    if expr is None:
        return WfVerdict(True, False, 0)
    checker = WellFormednessChecker(info)
    facts = checker.check(expr)
    reason, loc = checker.reason, checker.reason_loc
    well_formed = facts.well_formed
    if well_formed and facts.writes > 1:
        well_formed = False
        reason, loc = "single-write", expr.loc
        checker.steps.append(WfStep("single-write", f"{facts.writes} writes to shared data", expr.loc, False))
    if well_formed:
        reason, loc = None, None
    elif reason is None:
        reason, loc = "6", expr.loc
    return WfVerdict(well_formed, facts.competing, facts.writes, reason, loc, checker.steps)


def annotate_full_expressions(cfg: ProgramCfg, info: SharedInfo) -> Dict[int, WfVerdict]:
    """Attach a verdict to every full expression of the program."""
    verdicts = {}
    for fe_id, fe in sorted(cfg.full_exprs.items()):
        verdict = is_well_formed(fe, info)
        fe.well_formed = verdict
        verdicts[fe_id] = verdict
        if not verdict.well_formed:
            logger.debug(f"{fe.loc}: full expression not well-formed (rule {verdict.reason})")
    bad = sum(1 for v in verdicts.values() if not v.well_formed)
    logger.info(f"well-formedness: {len(verdicts)} full expressions, {bad} not well-formed")
    return verdicts


def full_exprs_at(cfg: ProgramCfg, line: int, column: Optional[int] = None) -> List[FullExpr]:
    found = []
    for fe in sorted(cfg.full_exprs.values(), key=lambda fe: fe.id):
        if fe.loc is None or fe.loc.line != line:
            continue
        if column is not None and fe.loc.column != column:
            continue
        if any(cfg.nodes[n].kind == NodeKind.ISR_FIXPOINT for n in fe.nodes):
            continue
        found.append(fe)
    return found


def explain(cfg: ProgramCfg, line: int, column: Optional[int] = None) -> List[str]:
    """Rule-by-rule derivation for the full expressions starting on `line`."""
    lines = []
    for fe in full_exprs_at(cfg, line, column):
        verdict = fe.well_formed if isinstance(fe.well_formed, WfVerdict) else WfVerdict(True, False, 0)
        text = format_expr(fe.expr) if fe.expr is not None else ";"
        lines.append(f"{fe.loc}: {text}")
        lines.extend(f"  {line_}" for line_ in verdict.describe())
    return lines
