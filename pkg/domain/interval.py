import math
from dataclasses import dataclass
from typing import Optional, Union


Bound = Union[int, float]

INF = math.inf


@dataclass(frozen=True)
class Interval:
    """
    Integer interval [lo, hi]; bounds may be -inf/+inf. The empty interval
    has lo > hi and is normalized to `Interval.empty()`.
    """

    lo: Bound
    hi: Bound

    @classmethod
    def empty(cls) -> "Interval":
        return cls(1, 0)

    @classmethod
    def top(cls) -> "Interval":
        return cls(-INF, INF)

    @classmethod
    def const(cls, value: int) -> "Interval":
        return cls(value, value)

    @classmethod
    def of(cls, lo: Bound, hi: Bound) -> "Interval":
        return cls(lo, hi) if lo <= hi else cls.empty()

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def is_const(self) -> bool:
        return not self.is_empty and self.lo == self.hi

    @property
    def value(self) -> Optional[int]:
        return int(self.lo) if self.is_const else None

    @property
    def is_bounded(self) -> bool:
        return not self.is_empty and math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, value: Bound) -> bool:
        return self.lo <= value <= self.hi

    def within(self, lo: Bound, hi: Bound) -> bool:
        return self.is_empty or (lo <= self.lo and self.hi <= hi)

    def join(self, other: "Interval") -> "Interval":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def meet(self, other: "Interval") -> "Interval":
        return Interval.of(max(self.lo, other.lo), min(self.hi, other.hi))

    # -- arithmetic ----------------------------------------------------

    def __neg__(self) -> "Interval":
        if self.is_empty:
            return self
        return Interval(-self.hi, -self.lo)

    def __add__(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Interval") -> "Interval":
        return self + (-other)

    def __mul__(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        products = [_mul(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(min(products), max(products))

    def div(self, other: "Interval") -> "Interval":
        """C division (truncation toward zero); a zero divisor is excluded."""
        if self.is_empty or other.is_empty:
            return Interval.empty()
        parts = []
        if other.hi >= 1:
            parts.append(Interval(max(other.lo, 1), other.hi))
        if other.lo <= -1:
            parts.append(Interval(other.lo, min(other.hi, -1)))
        result = Interval.empty()
        for part in parts:
            quotients = [_div(a, b) for a in (self.lo, self.hi) for b in (part.lo, part.hi)]
            result = result.join(Interval(min(quotients), max(quotients)))
        return result

    def mod(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        limit = max(abs(other.lo), abs(other.hi)) - 1
        if limit < 0:
            return Interval.empty()
        smallest = 1 if other.lo <= 0 <= other.hi else min(abs(other.lo), abs(other.hi))
        if self.lo >= 0:
            if self.hi < smallest:
                return self
            return Interval(0, min(self.hi, limit))
        if self.hi <= 0:
            return Interval(max(self.lo, -limit), 0)
        return Interval(max(self.lo, -limit), min(self.hi, limit))

    def shift_left(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        if other.lo < 0 or not other.is_bounded or other.hi > 32:
            return Interval.top()
        return self * Interval(1 << int(other.lo), 1 << int(other.hi))

    def shift_right(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        if other.lo < 0 or self.lo < 0:
            return Interval.top() if self.lo < 0 else Interval(0, self.hi)
        hi = self.hi if not math.isfinite(self.hi) else int(self.hi) >> int(other.lo)
        lo = 0 if not math.isfinite(other.hi) else int(self.lo) >> int(min(other.hi, 64))
        return Interval(lo, hi)

    def bit_and(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        if self.is_const and other.is_const:
            return Interval.const(int(self.lo) & int(other.lo))
        if self.lo >= 0 and other.lo >= 0:
            return Interval(0, min(self.hi, other.hi))
        if self.lo >= 0:
            return Interval(0, self.hi)
        if other.lo >= 0:
            return Interval(0, other.hi)
        return Interval.top()

    def bit_or(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        if self.is_const and other.is_const:
            return Interval.const(int(self.lo) | int(other.lo))
        if self.lo >= 0 and other.lo >= 0 and self.is_bounded and other.is_bounded:
            hi = (1 << int(max(self.hi, other.hi)).bit_length()) - 1
            return Interval(max(self.lo, other.lo), hi)
        return Interval.top()

    def bit_xor(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        if self.is_const and other.is_const:
            return Interval.const(int(self.lo) ^ int(other.lo))
        if self.lo >= 0 and other.lo >= 0 and self.is_bounded and other.is_bounded:
            return Interval(0, (1 << int(max(self.hi, other.hi)).bit_length()) - 1)
        return Interval.top()

    def bit_not(self) -> "Interval":
        # ~x == -x - 1
        return -self - Interval.const(1)

    def __str__(self) -> str:
        if self.is_empty:
            return "empty"
        return f"[{_fmt(self.lo)}, {_fmt(self.hi)}]"


def _mul(a: Bound, b: Bound) -> Bound:
    if a == 0 or b == 0:
        return 0
    return a * b


def _div(a: Bound, b: Bound) -> Bound:
    if math.isinf(b):
        return 0
    if math.isinf(a):
        return a if b > 0 else -a
    return int(a / b) if abs(a) < 2 ** 52 else int(a) // int(b)


def _fmt(value: Bound) -> str:
    if value == INF:
        return "+inf"
    if value == -INF:
        return "-inf"
    return str(int(value))
