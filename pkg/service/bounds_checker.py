import logging
from typing import Dict, List, Tuple

from domain.analysis import AnalysisResult
from domain.ast import Expr, ExprKind
from domain.cfg import CfgNode, ProgramCfg
from domain.interval import Interval
from domain.memloc import MemLoc
from domain.report import ArrayAccess
from domain.warning import AnalysisWarning, out_of_bounds
from service.numeric_eval import Evaluator


logger = logging.getLogger(__name__)


def _strip(expr: Expr) -> Expr:
    while expr.kind == ExprKind.VCAST:
        expr = expr.children[0]
    return expr


def _direct(base: Expr) -> bool:
    base = _strip(base)
    return base.kind == ExprKind.VAR and base.decl.ctype.is_array


def _node_exprs(node: CfgNode) -> List[Expr]:
    return [e for e in (node.target, node.value, node.cond, *node.args) if e is not None]


def _index_exprs(expr: Expr) -> List[Expr]:
    return [sub for sub in expr.walk() if sub.kind == ExprKind.INDEX]


def _element_count(evaluator: Evaluator, loc: MemLoc) -> int:
    decl = evaluator.locations.info(loc).decl if loc in evaluator.locations else None
    if decl is not None and decl.ctype.is_array:
        return decl.ctype.length
    return 1


def interior_offsets(result: AnalysisResult, cfg: ProgramCfg, evaluator: Evaluator) -> Dict[MemLoc, Interval]:
    """
    Element offsets at which `&a[e]` may leave a pointer inside each array,
    joined with 0 for the plain decay of `a`. Addresses taken through a
    pointer base have an unknown offset.
    """
    offsets: Dict[MemLoc, Interval] = {}
    for node_id in sorted(cfg.nodes):
        node = cfg.nodes[node_id]
        for expr in _node_exprs(node):
            for sub in expr.walk():
                if sub.kind != ExprKind.ADDR:
                    continue
                inner = _strip(sub.children[0])
                if inner.kind != ExprKind.INDEX:
                    continue
                state = result.accessed_state_at(node_id)
                if state is None or state.is_bottom:
                    continue
                base, index = inner.children
                offset = evaluator.interval(index, state.oct) if _direct(base) else Interval.top()
                for target in evaluator.collector.lvalue_locs(inner):
                    offsets[target] = offsets.get(target, Interval.const(0)).join(offset)
    return offsets


def check_array_bounds(
    result: AnalysisResult, cfg: ProgramCfg, evaluator: Evaluator,
) -> Tuple[List[ArrayAccess], List[AnalysisWarning]]:
    """
    Compare the index interval of every subscript against the length of each
    object it may designate, in the state its node observes after shared
    accesses are handled, joined over all contexts. Subscripts through a
    pointer are checked against every points-to target, shifted by the
    offsets the pointer may carry. Accesses in unreachable nodes are not
    listed.
    """
    offsets = interior_offsets(result, cfg, evaluator)
    found: Dict[Tuple[str, MemLoc], ArrayAccess] = {}
    for node_id in sorted(cfg.nodes):
        node = cfg.nodes[node_id]
        accesses = [index for e in _node_exprs(node) for index in _index_exprs(e)]
        if not accesses:
            continue
        state = result.accessed_state_at(node_id)
        if state is None or state.is_bottom:
            continue
        for access in accesses:
            base, index = access.children
            value = evaluator.interval(index, state.oct)
            if _direct(base):
                targets = [(MemLoc.of_decl(_strip(base).decl), value)]
            else:
                targets = [
                    (target, value + offsets.get(target, Interval.const(0)))
                    for target in sorted(evaluator.collector.pointer_targets(base))
                ]
            for array, position in targets:
                key = (str(access.loc), array)
                previous = found.get(key)
                if previous is not None:
                    position = previous.index.join(position)
                found[key] = ArrayAccess(access.loc, array, position, _element_count(evaluator, array))

    verdicts = sorted(found.values(), key=lambda a: (a.loc.line, a.loc.column, str(a.array)))
    warnings = [
        out_of_bounds(a.loc, a.array, str(a.index), a.length) for a in verdicts if not a.safe
    ]
    logger.info(
        f"array bounds: {len(verdicts)} accesses, {sum(1 for a in verdicts if a.safe)} proven safe"
    )
    return verdicts, warnings
