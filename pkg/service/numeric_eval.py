import logging
from typing import Dict, FrozenSet, List, Optional, Tuple

from domain.access import PointsTo
from domain.ast import COMPARISON_OPS, Expr, ExprKind
from domain.interval import INF, Interval
from domain.memloc import LocationTable, MemLoc
from domain.octagon import Constraint, Linear, Octagon
from domain.register import RegisterKind
from dto.hardware_spec import HardwareSpec
from service.hardware_model import classify_access
from service.pointer_prepass import AccessCollector


logger = logging.getLogger(__name__)

NEGATED = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}

# linear part of an expression: coefficients per variable plus an interval remainder
LinearParts = Tuple[Dict[MemLoc, int], Interval]


class Evaluator:
    """
    Numeric semantics of pure CFG expressions over an octagon: interval
    evaluation, linearization for exact transfers, and guard compilation to
    octagonal constraints.
    """

    def __init__(self, locations: LocationTable, pts: PointsTo, spec: HardwareSpec):
        self.locations = locations
        self.collector = AccessCollector(pts)
        self.spec = spec

    # -- helpers -------------------------------------------------------

    def input_range(self, expr: Expr) -> Optional[Interval]:
        while expr.kind == ExprKind.VCAST:
            expr = expr.children[0]
        if expr.kind != ExprKind.VAR or expr.decl is None or not expr.decl.is_register:
            return None
        semantics = classify_access(expr.decl, self.spec)
        if semantics.kind == RegisterKind.INPUT:
            return Interval(*semantics.value_range)
        return None

    def location_value(self, loc: MemLoc, oct: Octagon) -> Interval:
        if loc in oct.index:
            return oct.bounds(loc)
        if loc in self.locations:
            return Interval(*self.locations.bounds(loc))
        return Interval.top()

    def scalar_var(self, expr: Expr) -> Optional[MemLoc]:
        """Octagon dimension read by a plain (possibly volatile-cast) variable."""
        while expr.kind == ExprKind.VCAST:
            expr = expr.children[0]
        if expr.kind != ExprKind.VAR or expr.decl is None:
            return None
        if not expr.decl.ctype.is_integer or self.input_range(expr) is not None:
            return None
        return MemLoc.of_decl(expr.decl)

    @staticmethod
    def clamp(expr: Expr, value: Interval) -> Interval:
        """Overflow policy: a result outside its type becomes the full type range."""
        ctype = expr.ctype
        if ctype is None or not ctype.is_integer or value.is_empty:
            return value
        lo, hi = ctype.bounds()
        if value.within(lo, hi):
            return value
        return Interval(lo, hi)

    # -- intervals -----------------------------------------------------

    def interval(self, expr: Expr, oct: Octagon) -> Interval:
        kind = expr.kind
        if kind == ExprKind.CONST:
            return Interval.const(expr.value)
        if kind in (ExprKind.VAR, ExprKind.VCAST, ExprKind.INDEX, ExprKind.DEREF):
            if expr.ctype is not None and not expr.ctype.is_integer:
                return Interval(0, 0xFFFF)
            register = self.input_range(expr)
            if register is not None:
                return register
            result = Interval.empty()
            for loc in self.collector.lvalue_locs(expr):
                result = result.join(self.location_value(loc, oct))
            return result if not result.is_empty else Interval(*expr.ctype.bounds())
        if kind == ExprKind.ADDR:
            return Interval(0, 0xFFFF)
        if kind == ExprKind.UNARY:
            inner = self.interval(expr.children[0], oct)
            if expr.op == "-":
                return self.clamp(expr, -inner)
            if expr.op == "~":
                return self.clamp(expr, inner.bit_not())
            return self.truth(expr, oct)
        if kind == ExprKind.BINARY:
            if expr.op in COMPARISON_OPS:
                return self.truth(expr, oct)
            left = self.interval(expr.children[0], oct)
            right = self.interval(expr.children[1], oct)
            result = {
                "+": lambda: left + right,
                "-": lambda: left - right,
                "*": lambda: left * right,
                "/": lambda: left.div(right),
                "%": lambda: left.mod(right),
                "<<": lambda: left.shift_left(right),
                ">>": lambda: left.shift_right(right),
                "&": lambda: left.bit_and(right),
                "|": lambda: left.bit_or(right),
                "^": lambda: left.bit_xor(right),
            }[expr.op]()
            return self.clamp(expr, result)
        if kind == ExprKind.COMMA:
            return self.interval(expr.children[1], oct)
        if kind == ExprKind.LOGIC:
            return Interval(0, 1)
        return Interval(*expr.ctype.bounds()) if expr.ctype is not None and expr.ctype.is_integer else Interval.top()

    def truth(self, expr: Expr, oct: Octagon) -> Interval:
        """[0,0], [1,1] or [0,1] for a condition-valued expression."""
        can_hold = not self.guard(oct, expr, True).is_bottom
        can_fail = not self.guard(oct, expr, False).is_bottom
        if can_hold and not can_fail:
            return Interval.const(1)
        if can_fail and not can_hold:
            return Interval.const(0)
        return Interval(0, 1)

    # -- linear forms --------------------------------------------------

    def linear_parts(self, expr: Expr, oct: Octagon) -> LinearParts:
        """Split into octagon variables with ±1 coefficients and an interval rest."""
        kind = expr.kind
        if kind == ExprKind.CONST:
            return {}, Interval.const(expr.value)
        var = self.scalar_var(expr)
        if var is not None and var in oct.index and not var.is_summary:
            return {var: 1}, Interval.const(0)
        if kind == ExprKind.UNARY and expr.op == "-":
            inner = self.interval(expr.children[0], oct)
            if (-inner).within(*expr.ctype.bounds()):
                terms, rest = self.linear_parts(expr.children[0], oct)
                return {v: -c for v, c in terms.items()}, -rest
        if kind == ExprKind.BINARY and expr.op in ("+", "-"):
            whole = self.interval(expr, oct)
            left = self.interval(expr.children[0], oct)
            right = self.interval(expr.children[1], oct)
            raw = left + right if expr.op == "+" else left - right
            if raw.within(*expr.ctype.bounds()) or whole != Interval(*expr.ctype.bounds()):
                lt, lr = self.linear_parts(expr.children[0], oct)
                rt, rr = self.linear_parts(expr.children[1], oct)
                sign = 1 if expr.op == "+" else -1
                terms = dict(lt)
                for v, c in rt.items():
                    terms[v] = terms.get(v, 0) + sign * c
                terms = {v: c for v, c in terms.items() if c != 0}
                return terms, (lr + rr if sign > 0 else lr - rr)
        return {}, self.interval(expr, oct)

    def linear(self, expr: Expr, oct: Octagon) -> Optional[Linear]:
        """Exact `±y + c` form, or None."""
        terms, rest = self.linear_parts(expr, oct)
        if not rest.is_const:
            return None
        if not terms:
            return Linear(rest.value)
        if len(terms) == 1:
            (var, coef), = terms.items()
            if coef in (1, -1):
                return Linear(rest.value, var, coef)
        return None

    # -- guards --------------------------------------------------------

    def constraints(self, expr: Expr, polarity: bool, oct: Octagon) -> Optional[List[Constraint]]:
        """Octagonal constraints implied by `expr` having truth value `polarity`."""
        if expr.kind == ExprKind.UNARY and expr.op == "!":
            return self.constraints(expr.children[0], not polarity, oct)
        if expr.kind == ExprKind.BINARY and expr.op in COMPARISON_OPS:
            op = expr.op if polarity else NEGATED[expr.op]
            left, right = expr.children
        else:
            op = "!=" if polarity else "=="
            left, right = expr, Expr(ExprKind.CONST, expr.loc, value=0)
        lt, lr = self.linear_parts(left, oct)
        rt, rr = self.linear_parts(right, oct)
        # left - right  op  0  ->  terms  op  rest
        terms = dict(lt)
        for v, c in rt.items():
            terms[v] = terms.get(v, 0) - c
        terms = {v: c for v, c in terms.items() if c != 0}
        rest = rr - lr
        if rest.is_empty:
            return None
        return self._compile(terms, op, rest, oct)

    def _compile(self, terms: Dict[MemLoc, int], op: str, rest: Interval, oct: Octagon) -> Optional[List[Constraint]]:
        if any(c not in (1, -1) for c in terms.values()) or len(terms) > 2:
            return []
        signed = tuple(sorted(((c, v) for v, c in terms.items()), key=lambda t: t[1]))
        negated = tuple((-c, v) for c, v in signed)

        def upper(bound) -> List[Constraint]:
            # sum <= bound
            if bound == INF:
                return []
            if bound == -INF:
                return None
            if not signed:
                return [] if 0 <= bound else None
            return [Constraint(signed, int(bound))]

        def lower(bound) -> List[Constraint]:
            # sum >= bound  <->  -sum <= -bound
            if bound == -INF:
                return []
            if bound == INF:
                return None
            if not negated:
                return [] if bound <= 0 else None
            return [Constraint(negated, int(-bound))]

        if op == "<=":
            return upper(rest.hi)
        if op == "<":
            return upper(rest.hi - 1)
        if op == ">=":
            return lower(rest.lo)
        if op == ">":
            return lower(rest.lo + 1)
        if op == "==":
            up, low = upper(rest.hi), lower(rest.lo)
            if up is None or low is None:
                return None
            return up + low
        # "!=": only a single variable against a constant at one end of its range
        if not rest.is_const:
            return []
        value = rest.value
        if not signed:
            return None if value == 0 else []
        if len(signed) != 1:
            return []
        (sign, var), = signed
        current = oct.bounds(var)
        target = value * sign
        if current.is_const and current.value == target:
            return None
        if current.lo == target:
            return [Constraint(((-sign, var),), int(-(value + 1)))]
        if current.hi == target:
            return [Constraint(((sign, var),), int(value - 1))]
        return []

    def guard(self, oct: Octagon, expr: Expr, polarity: bool) -> Octagon:
        if oct.is_bottom:
            return oct
        compiled = self.constraints(expr, polarity, oct)
        if compiled is None:
            return Octagon.bottom(oct.vars)
        result = oct
        for constraint in compiled:
            result = result.guard(constraint)
            if result.is_bottom:
                return result
        if not compiled:
            # no octagonal refinement: fall back to the interval of the condition
            value = self.interval_without_truth(expr, oct)
            if polarity and value.within(0, 0):
                return Octagon.bottom(oct.vars)
            if not polarity and not value.contains(0):
                return Octagon.bottom(oct.vars)
        return result

    def interval_without_truth(self, expr: Expr, oct: Octagon) -> Interval:
        if expr.kind == ExprKind.BINARY and expr.op in COMPARISON_OPS:
            return Interval(0, 1)
        if expr.kind == ExprKind.UNARY and expr.op == "!":
            return Interval(0, 1)
        return self.interval(expr, oct)

    # -- stores --------------------------------------------------------

    def store_targets(self, target: Expr) -> FrozenSet[MemLoc]:
        inner = target
        while inner.kind == ExprKind.VCAST:
            inner = inner.children[0]
        return self.collector.lvalue_locs(inner)

    def assign(self, oct: Octagon, target: Expr, value: Expr) -> Octagon:
        """Strong update for a single scalar target, weak update otherwise."""
        if oct.is_bottom:
            return oct
        targets = [loc for loc in self.store_targets(target) if loc in oct.index]
        if not targets:
            return oct
        strong = len(targets) == 1 and not targets[0].is_summary
        rhs = self.linear(value, oct)
        if rhs is None:
            rhs = self.interval(value, oct)
        result = oct
        for loc in targets:
            updated = oct.assign(loc, rhs, self.locations.bounds(loc))
            result = updated if strong else result.join(updated)
        return result

    def havoc(self, oct: Octagon, locs) -> Octagon:
        for loc in locs:
            if loc in oct.index:
                oct = oct.havoc(loc, Interval(*self.locations.bounds(loc)))
        return oct
