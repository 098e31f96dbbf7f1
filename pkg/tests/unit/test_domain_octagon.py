import random

import numpy as np
import pytest

from domain.exceptions import DimensionMismatch
from domain.interval import INF, Interval
from domain.memloc import MemLoc
from domain.octagon import Constraint, Linear, Octagon, strong_closure


x, y, z = MemLoc.global_("x"), MemLoc.global_("y"), MemLoc.global_("z")
BYTE = {x: (0, 255), y: (0, 255), z: (0, 255)}

CASES = 10_000


def ranged(lo, hi, vars=(x, y)):
    return Octagon.top(vars, {var: (lo, hi) for var in vars})


def random_constraint(rng: random.Random, vars) -> Constraint:
    if rng.random() < 0.4:
        return Constraint(((rng.choice((1, -1)), rng.choice(vars)),), rng.randint(-20, 20))
    first, second = rng.sample(list(vars), 2)
    return Constraint(((rng.choice((1, -1)), first), (rng.choice((1, -1)), second)), rng.randint(-30, 30))


def random_octagon(rng: random.Random, vars=(x, y)) -> Octagon:
    oct = ranged(-20, 20, vars)
    for _ in range(rng.randint(0, 3)):
        oct = oct.guard(random_constraint(rng, vars))
    return oct


def random_dbm(rng: random.Random, n: int) -> np.ndarray:
    """Coherent, unclosed matrix built from random octagonal constraints."""
    m = np.full((2 * n, 2 * n), INF)
    np.fill_diagonal(m, 0)
    for _ in range(rng.randint(1, 6)):
        u, w = rng.randrange(2 * n), rng.randrange(2 * n)
        if u == w ^ 1:
            continue
        c = rng.randint(-10, 30)
        m[u ^ 1, w] = min(m[u ^ 1, w], c)
        m[w ^ 1, u] = min(m[w ^ 1, u], c)
    return m


def test_top_carries_type_bounds():
    oct = Octagon.top([y, x], BYTE)
    assert oct.vars == (x, y)
    assert oct.bounds(x) == Interval(0, 255)
    assert oct.relations() == []
    assert not oct.is_bottom


def test_unbounded_top():
    assert Octagon.top([x]).bounds(x) == Interval.top()


def test_assign_constant_and_copy():
    oct = Octagon.top([x, y], BYTE).assign(x, Linear(5))
    assert oct.bounds(x) == Interval.const(5)
    oct = ranged(0, 10).assign(y, Linear(3, x))
    assert oct.bounds(y) == Interval(3, 13)
    assert oct.difference_bound((1, y), (-1, x)) == 3
    assert oct.difference_bound((1, x), (-1, y)) == -3


def test_assign_negated_self():
    oct = ranged(0, 10).assign(x, Linear(3, x, sign=-1))
    assert oct.bounds(x) == Interval(-7, 3)


def test_assign_increment_keeps_relations():
    oct = ranged(0, 10).assign(y, Linear(0, x)).assign(x, Linear(1, x))
    assert oct.difference_bound((1, x), (-1, y)) == 1
    assert oct.bounds(x) == Interval(1, 11)


def test_assign_out_of_type_range_havocs():
    oct = ranged(0, 10).assign(x, Linear(250, y), type_bounds=(0, 255))
    assert oct.bounds(x) == Interval(0, 255)
    oct = ranged(0, 10).assign(x, Interval(2, 4))
    assert oct.bounds(x) == Interval(2, 4)


def test_guard_refines_and_detects_emptiness():
    oct = Octagon.top([x, y], BYTE)
    assert oct.guard(Constraint(((1, x),), 4)).bounds(x) == Interval(0, 4)
    assert oct.guard(Constraint(((1, x),), -1)).is_bottom
    assert oct.guard(Constraint(((1, x), (-1, x)), -1)).is_bottom
    assert oct.guard(Constraint(((1, x), (1, x)), 5)).bounds(x) == Interval(0, 2)


def test_binary_guard_propagates_to_bounds():
    oct = Octagon.top([x, y], BYTE).guard(Constraint(((1, y),), 10)).guard(Constraint(((1, x), (-1, y)), -1))
    assert oct.bounds(x) == Interval(0, 9)
    assert oct.bounds(y) == Interval(1, 10)


def test_join_and_meet():
    one = Octagon.top([x], BYTE).assign(x, Linear(1))
    three = Octagon.top([x], BYTE).assign(x, Linear(3))
    assert one.join(three).bounds(x) == Interval(1, 3)
    assert one.meet(three).is_bottom
    assert one.leq(one.join(three)) and not one.join(three).leq(one)
    assert one.join(Octagon.bottom([x])).equals(one)


def test_widen_jumps_to_thresholds_then_infinity():
    zero = ranged(0, 0, (x,))
    grown = ranged(0, 1, (x,))
    assert zero.widen(grown).bounds(x) == Interval(0, INF)
    assert zero.widen(grown, thresholds=[16, 255]).bounds(x) == Interval(0, 16)
    assert zero.widen(grown, thresholds=[16]).widen(ranged(0, 20, (x,)), [16]).bounds(x) == Interval(0, INF)


def test_widen_of_unchanged_state_is_identity():
    oct = ranged(0, 5)
    assert np.array_equal(oct.widen(oct).dbm, oct.close().dbm)


def test_forget_and_havoc():
    oct = ranged(0, 10).assign(y, Linear(1, x))
    forgotten = oct.forget(y)
    assert forgotten.bounds(y) == Interval.top()
    assert forgotten.relations() == []
    havocked = oct.havoc(y, Interval(4, 6))
    assert havocked.bounds(y) == Interval(4, 6)
    assert oct.havoc(y, Interval.empty()).is_bottom


def test_restrict_extend_embed():
    oct = Octagon.top([x, y, z], BYTE).assign(x, Linear(7)).assign(y, Linear(1, x))
    small = oct.restrict([x])
    assert small.vars == (x,)
    assert small.bounds(x) == Interval.const(7)

    wide = small.extend([z], {z: (0, 3)})
    assert wide.vars == (x, z)
    assert wide.bounds(z) == Interval(0, 3)

    updated = Octagon.top([x], BYTE).assign(x, Linear(2))
    merged = updated.embed(oct, modified=[x])
    assert merged.bounds(x) == Interval.const(2)
    assert merged.bounds(y) == Interval.const(8)


def test_describe():
    oct = ranged(0, 10).assign(y, Linear(3, x))
    lines = oct.describe()
    assert lines[0] == "0 <= x <= 10"
    assert "3 <= y <= 13" in lines
    assert "x - y <= -3" in lines
    assert "-x + y <= 3" in lines
    assert Octagon.bottom([x]).describe() == ["bottom"]


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        ranged(0, 1, (x,)).join(ranged(0, 1, (y,)))
    with pytest.raises(DimensionMismatch):
        ranged(0, 1, (x,)).bounds(y)


def test_closure_is_idempotent():
    rng = random.Random(1)
    for _ in range(CASES):
        n = rng.randint(1, 3)
        closed = strong_closure(random_dbm(rng, n))
        if closed is None:
            continue
        again = strong_closure(closed)
        assert again is not None
        assert np.array_equal(again, closed)


def test_join_is_an_upper_bound():
    rng = random.Random(2)
    for _ in range(CASES):
        a, b = random_octagon(rng), random_octagon(rng)
        joined = a.join(b)
        assert a.leq(joined)
        assert b.leq(joined)


def changed(before: Octagon, after: Octagon) -> bool:
    if before.dbm is None or after.dbm is None:
        return before.dbm is not after.dbm
    return not np.array_equal(before.dbm, after.dbm)


def test_widening_stabilizes():
    """Any increasing chain is absorbed after at most (2n)^2 changes of the widened matrix."""
    n = 2
    rng = random.Random(3)
    for _ in range(CASES // ((2 * n) ** 2 + 1)):
        chain = random_octagon(rng)
        widened = chain
        changes = 0
        for _ in range((2 * n) ** 2 + 1):
            chain = chain.join(random_octagon(rng))
            nxt = widened.widen(chain)
            assert chain.leq(nxt)
            if changed(widened, nxt):
                changes += 1
            widened = nxt
        assert changes <= (2 * n) ** 2


def test_restrict_is_exact():
    rng = random.Random(4)
    for _ in range(CASES):
        oct = random_octagon(rng, (x, y, z))
        small = oct.restrict([x, y])
        if oct.is_bottom:
            assert small.is_bottom
            continue
        assert small.bounds(x) == oct.bounds(x)
        assert small.bounds(y) == oct.bounds(y)
        for signs in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            assert small.difference_bound((signs[0], x), (signs[1], y)) == \
                oct.difference_bound((signs[0], x), (signs[1], y))


def triangle_closure(dbm: np.ndarray):
    """
    Reference closure on plain Python integers: single triangle steps
    repeated until nothing changes, then tightening and strengthening entry
    by entry. None for an empty octagon.
    """
    size = dbm.shape[0]
    m = [[INF if v == INF else int(v) for v in row] for row in dbm.tolist()]
    changed_any = True
    while changed_any:
        changed_any = False
        for k in range(size):
            for i in range(size):
                for j in range(size):
                    through = m[i][k] + m[k][j]
                    if through < m[i][j]:
                        m[i][j] = through
                        changed_any = True
        if any(m[i][i] < 0 for i in range(size)):
            return None
    unary = []
    for slot in range(size):
        value = m[slot][slot ^ 1]
        unary.append(value if value == INF else 2 * (value // 2))
        m[slot][slot ^ 1] = unary[slot]
    for i in range(size):
        for j in range(size):
            if unary[i] != INF and unary[j ^ 1] != INF:
                m[i][j] = min(m[i][j], (unary[i] + unary[j ^ 1]) // 2)
    if any(m[i][i] < 0 for i in range(size)):
        return None
    for i in range(size):
        m[i][i] = 0
    return m


def test_closure_matches_triangle_steps():
    rng = random.Random(5)
    for _ in range(CASES // 20):
        n = rng.randint(1, 6)
        dbm = random_dbm(rng, n)
        expected = triangle_closure(dbm)
        closed = strong_closure(dbm)
        if expected is None:
            assert closed is None
            continue
        assert closed is not None
        assert np.array_equal(closed, np.array(expected, dtype=float))


BOX = 4


def boxed_dbm(rng: random.Random, n: int) -> np.ndarray:
    m = random_dbm(rng, n)
    for k in range(n):
        m[2 * k + 1, 2 * k] = min(m[2 * k + 1, 2 * k], 2 * BOX)
        m[2 * k, 2 * k + 1] = min(m[2 * k, 2 * k + 1], 2 * BOX)
    return m


def satisfying(m: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Mask of the integer points (rows) that meet every entry of `m`."""
    slots = np.empty((points.shape[0], 2 * points.shape[1]))
    slots[:, 0::2] = points
    slots[:, 1::2] = -points
    differences = slots[:, None, :] - slots[:, :, None]
    return np.all(differences <= m[None, :, :], axis=(1, 2))


def test_closure_keeps_every_integer_point():
    rng = random.Random(6)
    axis = np.arange(-BOX, BOX + 1)
    for _ in range(CASES // 5):
        n = rng.randint(1, 3)
        points = np.array(np.meshgrid(*([axis] * n), indexing="ij")).reshape(n, -1).T
        dbm = boxed_dbm(rng, n)
        inside = points[satisfying(dbm, points)]
        closed = strong_closure(dbm)
        if closed is None:
            assert len(inside) == 0
            continue
        assert satisfying(closed, inside).all()


def contains(oct: Octagon, point) -> bool:
    closed = oct.close()
    if closed.dbm is None:
        return False
    values = np.array([[point[var] for var in closed.vars]])
    return bool(satisfying(closed.dbm, values)[0])


def concrete_point(rng: random.Random, oct: Octagon):
    """A random integer point of `oct`, or None after a bounded search."""
    for _ in range(50):
        point = {var: rng.randint(-20, 20) for var in oct.vars}
        if contains(oct, point):
            return point
    return None


def holds(constraint: Constraint, point) -> bool:
    return sum(sign * point[var] for sign, var in constraint.terms) <= constraint.bound


def test_assign_is_sound_on_concrete_states():
    rng = random.Random(7)
    checked = 0
    for _ in range(CASES):
        oct = random_octagon(rng)
        point = concrete_point(rng, oct)
        if point is None:
            continue
        target, source = rng.choice([(x, y), (y, x), (x, x), (y, y)])
        if rng.random() < 0.2:
            lo = rng.randint(-20, 20)
            rhs = Interval(lo, lo + rng.randint(0, 10))
            value = rng.randint(rhs.lo, rhs.hi)
        else:
            rhs = Linear(rng.randint(-10, 10), source, rng.choice((1, -1)))
            value = rhs.sign * point[source] + rhs.const
        after = dict(point)
        after[target] = value
        assert contains(oct.assign(target, rhs), after)
        checked += 1
    assert checked > CASES // 4


def test_guard_is_sound_on_concrete_states():
    rng = random.Random(8)
    checked = 0
    for _ in range(CASES):
        oct = random_octagon(rng)
        point = concrete_point(rng, oct)
        if point is None:
            continue
        constraint = random_constraint(rng, (x, y))
        if not holds(constraint, point):
            continue
        assert contains(oct.guard(constraint), point)
        checked += 1
    assert checked > CASES // 10
