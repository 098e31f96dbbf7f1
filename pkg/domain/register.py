from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple


class RegisterKind(str, Enum):
    GLOBAL_ENABLE = "global-enable-bit"
    SOURCE_ENABLE = "source-enable-bit"
    ENABLE_REGISTER = "enable-register"
    INPUT = "input-register"
    PLAIN = "plain-memory"


@dataclass(frozen=True)
class RegisterSemantics:
    """
    Meaning of an access under a hardware description. ENABLE_REGISTER is a
    whole-byte view of a register holding enable bits; `bits` maps each bit
    index to the flag it controls ("" for the global flag).
    """

    kind: RegisterKind
    source: Optional[str] = None
    value_range: Optional[Tuple[int, int]] = None
    bits: Tuple[Tuple[int, str], ...] = ()

    @property
    def is_enable(self) -> bool:
        return self.kind in (RegisterKind.GLOBAL_ENABLE, RegisterKind.SOURCE_ENABLE, RegisterKind.ENABLE_REGISTER)


PLAIN = RegisterSemantics(RegisterKind.PLAIN)
