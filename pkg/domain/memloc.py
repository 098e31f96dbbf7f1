from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Optional, Tuple

from domain.ast import VarDecl
from domain.c_types import CType


GLOBAL = "global"
LOCAL = "local"
ARRAY = "array"
REGISTER = "register"

RETURN_SLOT = "$ret"


@dataclass(frozen=True, order=True)
class MemLoc:
    """
    Abstract memory location. Ordering is (kind, function, name), which fixes
    the dimension order of every octagon built over a set of locations.

    Locals carry no calling context: Mini-C has no recursion, so each
    function frame is live at most once at any time.
    """

    kind: str
    function: str
    name: str

    @classmethod
    def global_(cls, name: str) -> "MemLoc":
        return cls(GLOBAL, "", name)

    @classmethod
    def local(cls, function: str, name: str) -> "MemLoc":
        return cls(LOCAL, function, name)

    @classmethod
    def array(cls, name: str, function: str = "") -> "MemLoc":
        return cls(ARRAY, function, name)

    @classmethod
    def register(cls, name: str) -> "MemLoc":
        return cls(REGISTER, "", name)

    @classmethod
    def of_decl(cls, decl: VarDecl) -> "MemLoc":
        if decl.is_register:
            return cls.register(decl.name)
        if decl.ctype.is_array:
            return cls.array(decl.ident, decl.function or "")
        if decl.function is None:
            return cls.global_(decl.name)
        return cls.local(decl.function, decl.ident)

    @classmethod
    def return_slot(cls, function: str) -> "MemLoc":
        return cls.local(function, RETURN_SLOT)

    @property
    def is_static(self) -> bool:
        """Outlives any function frame (globals, global arrays, registers)."""
        return self.function == ""

    @property
    def is_summary(self) -> bool:
        return self.kind == ARRAY

    def __str__(self) -> str:
        text = self.name if self.is_static else f"{self.function}.{self.name}"
        return f"{text}[*]" if self.is_summary else text


@dataclass
class LocInfo:
    ctype: CType
    lo: int
    hi: int
    decl: Optional[VarDecl] = None

    @property
    def volatile(self) -> bool:
        return bool(self.decl is not None and self.decl.volatile)

    @property
    def numeric(self) -> bool:
        return self.ctype.is_integer


class LocationTable:
    """Type and value range of every memory location of one program."""

    def __init__(self):
        self._infos: Dict[MemLoc, LocInfo] = {}

    def add_decl(self, decl: VarDecl) -> MemLoc:
        loc = MemLoc.of_decl(decl)
        lo, hi = decl.value_bounds() if decl.is_numeric else (0, 0xFFFF)
        self._infos[loc] = LocInfo(decl.value_type(), lo, hi, decl)
        return loc

    def add(self, loc: MemLoc, ctype: CType) -> MemLoc:
        lo, hi = ctype.bounds() if ctype.is_integer else (0, 0xFFFF)
        self._infos[loc] = LocInfo(ctype, lo, hi)
        return loc

    def info(self, loc: MemLoc) -> LocInfo:
        return self._infos[loc]

    def bounds(self, loc: MemLoc) -> Tuple[int, int]:
        info = self._infos[loc]
        return info.lo, info.hi

    def ctype(self, loc: MemLoc) -> CType:
        return self._infos[loc].ctype

    def bits(self, loc: MemLoc) -> int:
        return self._infos[loc].ctype.bits

    def __contains__(self, loc: MemLoc) -> bool:
        return loc in self._infos

    def __iter__(self) -> Iterator[MemLoc]:
        return iter(sorted(self._infos))

    def numeric(self, locs: Iterable[MemLoc]) -> Tuple[MemLoc, ...]:
        """Locations tracked by the octagon (integers and integer arrays), sorted."""
        return tuple(sorted(loc for loc in locs if self._infos[loc].numeric))
