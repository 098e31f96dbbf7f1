import pytest

from domain.interrupts import Flag, InterruptState
from domain.interval import INF, Interval


def test_construction():
    assert Interval.of(3, 1).is_empty
    assert Interval.of(3, 1) == Interval.empty()
    assert Interval.const(4).is_const and Interval.const(4).value == 4
    assert not Interval.top().is_bounded
    assert Interval(0, 255).is_bounded
    assert str(Interval.top()) == "[-inf, +inf]"
    assert str(Interval.empty()) == "empty"


def test_lattice_operations():
    a, b = Interval(0, 4), Interval(2, 9)
    assert a.join(b) == Interval(0, 9)
    assert a.meet(b) == Interval(2, 4)
    assert Interval(0, 1).meet(Interval(5, 6)).is_empty
    assert Interval.empty().join(a) == a
    assert a.contains(4) and not a.contains(5)
    assert Interval.empty().within(0, 0)


def test_add():
    assert Interval(1, 3) + Interval(10, 20) == Interval(11, 23)
    assert (Interval.empty() + Interval(1, 2)).is_empty


@pytest.mark.parametrize("left, right, expected", [
    (Interval(-2, 3), Interval(-1, 4), Interval(-8, 12)),
    (Interval(0, INF), Interval(0, 0), Interval(0, 0)),
])
def test_multiply(left, right, expected):
    assert left * right == expected


def test_subtract_and_negate():
    assert Interval(1, 3) - Interval(0, 5) == Interval(-4, 3)
    assert -Interval(2, 7) == Interval(-7, -2)


def test_division_truncates_toward_zero():
    assert Interval(7, 7).div(Interval(2, 2)) == Interval.const(3)
    assert Interval(-7, -7).div(Interval(2, 2)) == Interval.const(-3)
    assert Interval(0, 10).div(Interval(0, 2)) == Interval(0, 10)
    assert Interval(5, 5).div(Interval(0, 0)).is_empty


def test_modulo():
    assert Interval(0, 3).mod(Interval(8, 8)) == Interval(0, 3)
    assert Interval(0, 100).mod(Interval(8, 8)) == Interval(0, 7)
    assert Interval(-20, -1).mod(Interval(4, 4)) == Interval(-3, 0)
    assert Interval(5, 5).mod(Interval(0, 0)).is_empty


def test_shifts():
    assert Interval(1, 3).shift_left(Interval(2, 2)) == Interval(4, 12)
    assert Interval(0, 255).shift_right(Interval(4, 4)) == Interval(0, 15)
    assert Interval(1, 1).shift_left(Interval(-1, 0)) == Interval.top()


def test_bitwise():
    assert Interval.const(12).bit_and(Interval.const(10)) == Interval.const(8)
    assert Interval(0, 200).bit_and(Interval(0, 15)) == Interval(0, 15)
    assert Interval.const(12).bit_or(Interval.const(3)) == Interval.const(15)
    assert Interval(0, 5).bit_or(Interval(0, 8)) == Interval(0, 15)
    assert Interval.const(6).bit_xor(Interval.const(3)) == Interval.const(5)
    assert Interval.const(0).bit_not() == Interval.const(-1)


def test_flag_lattice():
    assert Flag.ENABLED.join(Flag.DISABLED) == Flag.UNKNOWN
    assert Flag.ENABLED.join(Flag.ENABLED) == Flag.ENABLED
    assert Flag.DISABLED.leq(Flag.UNKNOWN)
    assert not Flag.UNKNOWN.leq(Flag.ENABLED)
    assert Flag.of(True) == Flag.ENABLED


def test_interrupt_state():
    ints = InterruptState.make(Flag.ENABLED, {"B": Flag.DISABLED, "A": Flag.ENABLED})
    assert ints.sources == (("A", Flag.ENABLED), ("B", Flag.DISABLED))
    assert ints.firing(["A", "B"]) == ["A"]
    assert not ints.with_global(Flag.DISABLED).can_fire("A")
    assert ints.with_source("B", Flag.UNKNOWN).can_fire("B")
    assert ints.source("C") == Flag.UNKNOWN
    assert str(ints) == "global=enabled A=enabled B=disabled"


def test_interrupt_state_join_and_order():
    on = InterruptState.make(Flag.ENABLED, {"A": Flag.ENABLED})
    off = InterruptState.make(Flag.DISABLED, {"A": Flag.ENABLED})
    joined = on.join(off)
    assert joined.global_flag == Flag.UNKNOWN
    assert joined.source("A") == Flag.ENABLED
    assert on.leq(joined) and off.leq(joined)
    assert not joined.leq(on)
