from dataclasses import dataclass, replace
from typing import Optional, Tuple


INT_KIND = "int"
PTR_KIND = "ptr"
ARRAY_KIND = "array"
VOID_KIND = "void"


@dataclass(frozen=True)
class CType:
    """
    Mini-C type. Integers are 8 or 16 bits wide, pointers and arrays wrap an
    element type. `volatile` qualifies the object of this type (for a pointer
    element it qualifies the pointee).
    """

    kind: str
    bits: int = 0
    signed: bool = False
    elem: Optional["CType"] = None
    length: int = 0
    volatile: bool = False

    @property
    def is_integer(self) -> bool:
        return self.kind == INT_KIND

    @property
    def is_pointer(self) -> bool:
        return self.kind == PTR_KIND

    @property
    def is_array(self) -> bool:
        return self.kind == ARRAY_KIND

    @property
    def is_void(self) -> bool:
        return self.kind == VOID_KIND

    @property
    def is_scalar(self) -> bool:
        return self.kind in (INT_KIND, PTR_KIND)

    def bounds(self) -> Tuple[int, int]:
        """Value range of an integer type."""
        if not self.is_integer:
            raise ValueError(f"type {self} has no integer bounds")
        if self.signed:
            return -(1 << (self.bits - 1)), (1 << (self.bits - 1)) - 1
        return 0, (1 << self.bits) - 1

    def contains(self, value: int) -> bool:
        lo, hi = self.bounds()
        return lo <= value <= hi

    def wrap(self, value: int) -> int:
        """Two's complement wrap of `value` into this integer type."""
        mask = (1 << self.bits) - 1
        value &= mask
        if self.signed and value >= 1 << (self.bits - 1):
            value -= 1 << self.bits
        return value

    def unqualified(self) -> "CType":
        return replace(self, volatile=False)

    def qualified(self, volatile: bool = True) -> "CType":
        return replace(self, volatile=volatile)

    def __str__(self) -> str:
        prefix = "volatile " if self.volatile else ""
        if self.is_integer:
            return f"{prefix}{'int' if self.signed else 'uint'}{self.bits}"
        if self.is_pointer:
            return f"{self.elem}*"
        if self.is_array:
            return f"{self.elem}[{self.length}]"
        return "void"


UINT8 = CType(INT_KIND, 8, False)
INT8 = CType(INT_KIND, 8, True)
UINT16 = CType(INT_KIND, 16, False)
INT16 = CType(INT_KIND, 16, True)
VOID = CType(VOID_KIND)

BASE_TYPES = {
    "uint8": UINT8,
    "int8": INT8,
    "uint16": UINT16,
    "int16": INT16,
    "void": VOID,
}


def pointer_to(elem: CType) -> CType:
    return CType(PTR_KIND, 16, False, elem=elem)


def array_of(elem: CType, length: int) -> CType:
    return CType(ARRAY_KIND, elem=elem, length=length, volatile=elem.volatile)


def promote(left: CType, right: CType) -> CType:
    """
    Usual arithmetic conversion of Mini-C: the wider operand wins, no
    promotion to a 32-bit int. At equal width an unsigned operand wins.
    """
    left, right = left.unqualified(), right.unqualified()
    if left.bits != right.bits:
        return left if left.bits > right.bits else right
    if left.signed != right.signed:
        return left if not left.signed else right
    return left


def literal_type(value: int) -> CType:
    """Smallest Mini-C type holding a non-negative literal."""
    if value <= 0xFF:
        return UINT8
    return UINT16
