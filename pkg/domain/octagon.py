"""
Octagon abstract domain: conjunctions of ±x ±y <= c over integer variables.

The state is a difference-bound matrix over 2n slots. Slot 2k stands for +x_k
and slot 2k+1 for -x_k; entry m[i][j] bounds v_j - v_i. Unary bounds live on
the diagonal pairs: x_k <= m[2k+1][2k] / 2 and -x_k <= m[2k][2k+1] / 2.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from domain.exceptions import DimensionMismatch
from domain.interval import INF, Interval
from domain.memloc import MemLoc


logger = logging.getLogger(__name__)

Bounds = Mapping[MemLoc, Tuple[int, int]]


def _bar(slot: int) -> int:
    return slot ^ 1


def _slot(sign: int, index: int) -> int:
    return 2 * index if sign > 0 else 2 * index + 1


@dataclass(frozen=True)
class Linear:
    """Right-hand side `sign * var + const`; `var` None means a constant."""

    const: int
    var: Optional[MemLoc] = None
    sign: int = 1


@dataclass(frozen=True)
class Constraint:
    """sum(sign * var for sign, var in terms) <= bound, with one or two terms."""

    terms: Tuple[Tuple[int, MemLoc], ...]
    bound: int

    def __str__(self) -> str:
        text = ""
        for position, (sign, var) in enumerate(self.terms):
            if sign < 0:
                text += "-" if position == 0 else " - "
            elif position:
                text += " + "
            text += str(var)
        return f"{text} <= {self.bound}"


def strong_closure(dbm: np.ndarray) -> Optional[np.ndarray]:
    """
    Tight closure for integer octagons: shortest paths, tightening of the
    unary entries to even values, then strengthening. Returns None when the
    octagon is empty.
    """
    m = dbm.copy()
    size = m.shape[0]
    if size == 0:
        return m
    for k in range(size):
        m = np.minimum(m, m[:, k:k + 1] + m[k:k + 1, :])
    slots = np.arange(size)
    bars = slots ^ 1
    unary = m[slots, bars]
    unary = 2 * np.floor(unary / 2)
    m[slots, bars] = unary
    m = np.minimum(m, (unary[:, None] + unary[bars][None, :]) / 2)
    if np.any(np.diagonal(m) < 0):
        return None
    np.fill_diagonal(m, 0)
    return m


class Octagon:
    """
    Value-semantic octagon over an ordered tuple of locations. Operations
    never mutate; they return new octagons. `dbm` is None for bottom.
    """

    __slots__ = ("vars", "index", "dbm", "closed")

    def __init__(self, vars: Sequence[MemLoc], dbm: Optional[np.ndarray], closed: bool = False):
        self.vars: Tuple[MemLoc, ...] = tuple(vars)
        self.index: Dict[MemLoc, int] = {var: k for k, var in enumerate(self.vars)}
        self.dbm = dbm
        self.closed = closed or dbm is None

    # -- construction --------------------------------------------------

    @staticmethod
    def _unconstrained(n: int) -> np.ndarray:
        m = np.full((2 * n, 2 * n), INF)
        np.fill_diagonal(m, 0)
        return m

    @classmethod
    def top(cls, vars: Iterable[MemLoc], type_bounds: Optional[Bounds] = None) -> "Octagon":
        """Only the type-bound unary constraints hold."""
        vars = tuple(sorted(vars))
        m = cls._unconstrained(len(vars))
        for k, var in enumerate(vars):
            if type_bounds is not None and var in type_bounds:
                lo, hi = type_bounds[var]
                m[2 * k + 1, 2 * k] = 2 * hi
                m[2 * k, 2 * k + 1] = -2 * lo
        return cls(vars, m, closed=False).close()

    @classmethod
    def bottom(cls, vars: Iterable[MemLoc] = ()) -> "Octagon":
        return cls(tuple(sorted(vars)), None, closed=True)

    @property
    def is_bottom(self) -> bool:
        if not self.closed:
            return self.close().dbm is None
        return self.dbm is None

    def close(self) -> "Octagon":
        if self.closed:
            return self
        return Octagon(self.vars, strong_closure(self.dbm), closed=True)

    def _require(self, var: MemLoc) -> int:
        if var not in self.index:
            raise DimensionMismatch(f"{var} is not a dimension of this octagon")
        return self.index[var]

    def _same_vars(self, other: "Octagon") -> None:
        if self.vars != other.vars:
            raise DimensionMismatch(
                f"octagons over different variables: {list(map(str, self.vars))} vs {list(map(str, other.vars))}"
            )

    # -- queries -------------------------------------------------------

    def bounds(self, var: MemLoc) -> Interval:
        closed = self.close()
        if closed.dbm is None:
            return Interval.empty()
        k = closed._require(var)
        hi = closed.dbm[2 * k + 1, 2 * k] / 2
        lo = -closed.dbm[2 * k, 2 * k + 1] / 2
        return Interval(_as_int(lo), _as_int(hi))

    def difference_bound(self, left: Tuple[int, MemLoc], right: Tuple[int, MemLoc]) -> float:
        """Least c with left + right <= c derivable from the closed form."""
        closed = self.close()
        if closed.dbm is None:
            return -INF
        (s1, x), (s2, y) = left, right
        u = _slot(s1, closed._require(x))
        w = _slot(s2, closed._require(y))
        return closed.dbm[_bar(w), u]

    def relations(self) -> List[Constraint]:
        """Binary constraints not implied by the unary bounds."""
        closed = self.close()
        if closed.dbm is None:
            return []
        result = []
        n = len(closed.vars)
        bounds = [closed.bounds(v) for v in closed.vars]
        for k in range(n):
            for l in range(k + 1, n):
                for s1 in (1, -1):
                    for s2 in (1, -1):
                        c = closed.dbm[_slot(-s2, l), _slot(s1, k)]
                        if not np.isfinite(c):
                            continue
                        implied = _upper(bounds[k], s1) + _upper(bounds[l], s2)
                        if c < implied:
                            result.append(Constraint(((s1, closed.vars[k]), (s2, closed.vars[l])), int(c)))
        return result

    # -- lattice -------------------------------------------------------

    def leq(self, other: "Octagon") -> bool:
        self._same_vars(other)
        left = self.close()
        if left.dbm is None:
            return True
        right = other.close()
        if right.dbm is None:
            return False
        return bool(np.all(left.dbm <= right.dbm))

    def equals(self, other: "Octagon") -> bool:
        return self.leq(other) and other.leq(self)

    def join(self, other: "Octagon") -> "Octagon":
        self._same_vars(other)
        left, right = self.close(), other.close()
        if left.dbm is None:
            return right
        if right.dbm is None:
            return left
        return Octagon(self.vars, np.maximum(left.dbm, right.dbm), closed=True)

    def meet(self, other: "Octagon") -> "Octagon":
        self._same_vars(other)
        if self.dbm is None or other.dbm is None:
            return Octagon.bottom(self.vars)
        return Octagon(self.vars, np.minimum(self.dbm, other.dbm)).close()

    def widen(self, other: "Octagon", thresholds: Iterable[int] = ()) -> "Octagon":
        """
        Entries of `other` that grew past `self` jump to the next threshold
        (then +inf). The result is left unclosed so later widenings stabilize.
        """
        self._same_vars(other)
        if self.is_bottom:
            return other.close()
        new = other.close()
        if new.dbm is None:
            return self
        old = self.dbm if self.dbm is not None else self.close().dbm
        thresholds = set(thresholds)
        grown = new.dbm > old
        slots = np.arange(old.shape[0])
        unary = np.zeros_like(grown)
        unary[slots, slots ^ 1] = True
        result = old.copy()
        # unary entries hold twice the bound
        for mask, scale in ((grown & unary, 2), (grown & ~unary, 1)):
            if not np.any(mask):
                continue
            steps = np.array(sorted({scale * sign * t for t in thresholds for sign in (1, -1)}), dtype=float)
            padded = np.append(steps, INF)
            result[mask] = padded[np.searchsorted(steps, new.dbm[mask], side="left")]
        return Octagon(self.vars, result, closed=False)

    # -- transfer functions --------------------------------------------

    def forget(self, var: MemLoc) -> "Octagon":
        closed = self.close()
        if closed.dbm is None:
            return closed
        k = closed._require(var)
        m = closed.dbm.copy()
        m[2 * k:2 * k + 2, :] = INF
        m[:, 2 * k:2 * k + 2] = INF
        m[2 * k, 2 * k] = 0
        m[2 * k + 1, 2 * k + 1] = 0
        return Octagon(self.vars, m, closed=True)

    def havoc(self, var: MemLoc, interval: Interval) -> "Octagon":
        """Drop every constraint on `var`, then bound it by `interval`."""
        forgotten = self.forget(var)
        if forgotten.dbm is None:
            return forgotten
        if interval.is_empty:
            return Octagon.bottom(self.vars)
        k = forgotten.index[var]
        m = forgotten.dbm.copy()
        m[2 * k + 1, 2 * k] = 2 * interval.hi
        m[2 * k, 2 * k + 1] = -2 * interval.lo
        return Octagon(self.vars, m).close()

    def assign(self, var: MemLoc, rhs, type_bounds: Optional[Tuple[int, int]] = None) -> "Octagon":
        """
        var := rhs, where rhs is a Linear form or an Interval. Linear forms
        c, ±y + c are exact; anything else havocs to an interval. A result that
        may leave `type_bounds` havocs `var` to the full type range.
        """
        closed = self.close()
        if closed.dbm is None:
            return closed
        if isinstance(rhs, Interval):
            value = rhs
        else:
            value = closed.linear_bounds(rhs)
        if type_bounds is not None and not value.within(*type_bounds):
            return closed.havoc(var, Interval(*type_bounds))
        if isinstance(rhs, Interval) or rhs.var is None:
            return closed.havoc(var, value)

        k = closed._require(var)
        l = closed._require(rhs.var)
        if k == l:
            m = closed.dbm.copy()
            if rhs.sign < 0:
                swap = [2 * k, 2 * k + 1]
                m[swap, :] = m[swap[::-1], :]
                m[:, swap] = m[:, swap[::-1]]
            c = rhs.const
            m[:, 2 * k] += c
            m[2 * k + 1, :] += c
            m[:, 2 * k + 1] -= c
            m[2 * k, :] -= c
            return Octagon(self.vars, m, closed=True)

        forgotten = closed.forget(var)
        m = forgotten.dbm.copy()
        c = rhs.const
        if rhs.sign > 0:
            # x - y <= c and y - x <= -c
            m[2 * l, 2 * k] = c
            m[2 * k + 1, 2 * l + 1] = c
            m[2 * k, 2 * l] = -c
            m[2 * l + 1, 2 * k + 1] = -c
        else:
            # x + y <= c and -x - y <= -c
            m[2 * l + 1, 2 * k] = c
            m[2 * k + 1, 2 * l] = c
            m[2 * l, 2 * k + 1] = -c
            m[2 * k, 2 * l + 1] = -c
        return Octagon(self.vars, m).close()

    def linear_bounds(self, rhs: Linear) -> Interval:
        if rhs.var is None:
            return Interval.const(rhs.const)
        base = self.bounds(rhs.var)
        if rhs.sign < 0:
            base = -base
        return base + Interval.const(rhs.const)

    def guard(self, constraint: Constraint) -> "Octagon":
        closed = self.close()
        if closed.dbm is None:
            return closed
        m = closed.dbm.copy()
        terms = constraint.terms
        c = constraint.bound
        if len(terms) == 1:
            (s, x), = terms
            u = _slot(s, closed._require(x))
            m[_bar(u), u] = min(m[_bar(u), u], 2 * c)
        else:
            (s1, x), (s2, y) = terms
            u = _slot(s1, closed._require(x))
            w = _slot(s2, closed._require(y))
            if u == w:
                # 2u <= c
                m[_bar(u), u] = min(m[_bar(u), u], c)
            elif u == _bar(w):
                if c < 0:
                    return Octagon.bottom(self.vars)
                return closed
            else:
                m[_bar(w), u] = min(m[_bar(w), u], c)
                m[_bar(u), w] = min(m[_bar(u), w], c)
        return Octagon(self.vars, m).close()

    # -- localization --------------------------------------------------

    def restrict(self, keep: Iterable[MemLoc]) -> "Octagon":
        """Projection of the closed form onto `keep` (exact for octagons)."""
        keep = tuple(sorted(set(keep)))
        for var in keep:
            self._require(var)
        closed = self.close()
        if closed.dbm is None:
            return Octagon.bottom(keep)
        slots = [s for var in keep for s in (2 * self.index[var], 2 * self.index[var] + 1)]
        return Octagon(keep, closed.dbm[np.ix_(slots, slots)], closed=True)

    def extend(self, added: Iterable[MemLoc], bounds: Optional[Bounds] = None) -> "Octagon":
        """Add dimensions; new variables are bounded by `bounds` when given."""
        added = [var for var in set(added) if var not in self.index]
        if not added:
            return self
        vars = tuple(sorted(self.vars + tuple(added)))
        if self.is_bottom:
            return Octagon.bottom(vars)
        closed = self.close()
        m = self._unconstrained(len(vars))
        positions = [vars.index(var) for var in self.vars]
        slots = [s for p in positions for s in (2 * p, 2 * p + 1)]
        m[np.ix_(slots, slots)] = closed.dbm
        for var in added:
            if bounds is not None and var in bounds:
                k = vars.index(var)
                lo, hi = bounds[var]
                m[2 * k + 1, 2 * k] = 2 * hi
                m[2 * k, 2 * k + 1] = -2 * lo
        return Octagon(vars, m, closed=True)

    def embed(self, into: "Octagon", modified: Iterable[MemLoc]) -> "Octagon":
        """
        Put this (small) octagon back into `into`: variables in `modified`
        lose their old constraints in `into`, then both are intersected.
        """
        for var in self.vars:
            into._require(var)
        if self.is_bottom or into.is_bottom:
            return Octagon.bottom(into.vars)
        base = into.close()
        for var in modified:
            if var in base.index:
                base = base.forget(var)
        m = base.dbm.copy()
        slots = [s for var in self.vars for s in (2 * into.index[var], 2 * into.index[var] + 1)]
        sub = m[np.ix_(slots, slots)]
        m[np.ix_(slots, slots)] = np.minimum(sub, self.close().dbm)
        return Octagon(into.vars, m).close()

    # -- rendering -----------------------------------------------------

    def describe(self) -> List[str]:
        """`lo <= var <= hi` per variable, then the binary relations."""
        if self.is_bottom:
            return ["bottom"]
        lines = []
        for var in self.vars:
            interval = self.bounds(var)
            lines.append(f"{_text(interval.lo)} <= {var} <= {_text(interval.hi)}")
        lines.extend(str(relation) for relation in self.relations())
        return lines

    def __repr__(self) -> str:
        return f"Octagon({'; '.join(self.describe())})"


def _as_int(value: float):
    if np.isfinite(value):
        return int(value)
    return float(value)


def _upper(interval: Interval, sign: int) -> float:
    return interval.hi if sign > 0 else -interval.lo


def _text(value) -> str:
    if value == INF:
        return "+inf"
    if value == -INF:
        return "-inf"
    return str(int(value))
