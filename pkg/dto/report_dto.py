from typing import List

from pydantic import BaseModel, Field

from domain.report import ArrayAccess, Report
from domain.warning import AnalysisWarning


class LocationResponse(BaseModel):
    """DTO for a source position."""
    file: str = Field(..., description="Analyzed file")
    line: int = Field(..., ge=1, description="1-based line")
    column: int = Field(..., ge=1, description="1-based column")


class WarningResponse(BaseModel):
    """DTO for one finding."""
    kind: str = Field(..., description="NonVolatileShared, DataLoss, UnspecifiedOrder, NonAtomicAccess or ArrayOutOfBounds")
    loc: LocationResponse = Field(..., description="Where the finding applies")
    message: str = Field(..., description="Human-readable explanation")
    memlocs: List[str] = Field(default_factory=list, description="Memory locations involved")
    severity: str = Field(..., description="warning or error")

    @classmethod
    def of(cls, warning: AnalysisWarning) -> "WarningResponse":
        return cls(
            kind=warning.kind.value,
            loc=_location(warning.loc),
            message=warning.message,
            memlocs=[str(loc) for loc in warning.memlocs],
            severity=warning.severity,
        )


class ArrayAccessResponse(BaseModel):
    """DTO for an array-bounds verdict."""
    loc: LocationResponse = Field(..., description="Position of the index expression")
    array: str = Field(..., description="Indexed array")
    index: str = Field(..., description="Index interval at that point")
    length: int = Field(..., ge=1, description="Declared array length")
    verdict: str = Field(..., description="safe or possibly-out-of-bounds")

    @classmethod
    def of(cls, access: ArrayAccess) -> "ArrayAccessResponse":
        return cls(
            loc=_location(access.loc),
            array=str(access.array),
            index=str(access.index),
            length=access.length,
            verdict=access.verdict,
        )


class StatsResponse(BaseModel):
    """DTO for analysis statistics."""
    isr_analyses: int = Field(0, ge=0, description="ISR body analyses started")
    isr_fixpoint_sites: int = Field(0, ge=0, description="isr-fixpoint nodes inserted")
    node_visits: int = Field(0, ge=0, description="Worklist node visits")
    memo_hits: int = Field(0, ge=0, description="Function analyses served from the memo")
    elapsed_seconds: float = Field(0.0, ge=0, description="Wall time of the fixed point")


class ReportResponse(BaseModel):
    """DTO for a complete analysis report (also the CLI JSON output)."""
    file: str = Field(..., description="Analyzed file")
    warnings: List[WarningResponse] = Field(default_factory=list, description="Findings in source order")
    array_accesses: List[ArrayAccessResponse] = Field(default_factory=list, description="Array-bounds verdicts")
    stats: StatsResponse = Field(default_factory=StatsResponse, description="Analysis statistics")

    @classmethod
    def of(cls, report: Report) -> "ReportResponse":
        return cls(
            file=report.file,
            warnings=[WarningResponse.of(w) for w in report.warnings],
            array_accesses=[ArrayAccessResponse.of(a) for a in report.array_accesses],
            stats=StatsResponse(**vars(report.stats)),
        )


def _location(loc) -> LocationResponse:
    return LocationResponse(file=loc.file, line=loc.line, column=loc.column)
