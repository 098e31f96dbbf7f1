from dataclasses import dataclass, field
from typing import List, Optional

from domain.ast import SourceLocation


@dataclass(frozen=True)
class WfStep:
    """One line of a well-formedness derivation."""

    rule: str
    text: str
    loc: Optional[SourceLocation]
    holds: bool

    def __str__(self) -> str:
        verdict = "ok" if self.holds else "FAILS"
        where = f" at {self.loc.line}:{self.loc.column}" if self.loc is not None else ""
        return f"rule {self.rule}{where}: {self.text} -> {verdict}"


@dataclass
class WfVerdict:
    """
    Classification of one full expression. `reason` names the first rule that
    failed ("3b", "5", "6" or "single-write") and is None iff well-formed.
    """

    well_formed: bool
    competing: bool
    writes_shared: int
    reason: Optional[str] = None
    loc: Optional[SourceLocation] = None
    derivation: List[WfStep] = field(default_factory=list)

    def describe(self) -> List[str]:
        head = "well-formed" if self.well_formed else f"not well-formed (rule {self.reason})"
        return [head] + [f"  {step}" for step in self.derivation]
