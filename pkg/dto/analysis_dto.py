import os
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, str(default)))


class AnalysisOptions(BaseModel):
    """Tuning knobs of the fixed point and the oracle; defaults come from the environment."""
    context_depth: int = Field(
        default_factory=lambda: _env_int("ANALYZER_CONTEXT_DEPTH", 1), ge=0,
        description="Length of the call strings distinguishing calling contexts",
    )
    widening_delay: int = Field(
        default_factory=lambda: _env_int("ANALYZER_WIDENING_DELAY", 2), ge=0,
        description="Joins at a loop head before widening starts",
    )
    max_visits: int = Field(
        default_factory=lambda: _env_int("ANALYZER_MAX_VISITS", 100_000), ge=1,
        description="Node-visit budget; exceeding it raises Diverged",
    )
    isr_widen_after: int = Field(
        default_factory=lambda: _env_int("ANALYZER_ISR_WIDEN_AFTER", 3), ge=1,
        description="ISR fixpoint rounds before widening",
    )
    schedule_cap: int = Field(
        default_factory=lambda: _env_int("ANALYZER_SCHEDULE_CAP", 64), ge=1,
        description="Most schedules the oracle compiles per full expression",
    )
    state_budget: int = Field(
        default_factory=lambda: _env_int("ANALYZER_STATE_BUDGET", 1_000_000), ge=1,
        description="Most states the oracle explores",
    )

    def merged(self, **overrides) -> "AnalysisOptions":
        """Copy with every non-None override applied."""
        values = self.model_dump()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return AnalysisOptions(**values)


class AnalysisRequest(BaseModel):
    """DTO for analysis requests."""
    source: str = Field(..., description="Mini-C translation unit")
    file_name: str = Field("<input>", min_length=1, description="Name used in reported locations")
    hardware: Optional[str] = Field(None, description="Hardware description text; null for the hardware-agnostic mode")
    isrs: List[str] = Field(default_factory=list, description="ISR functions (hardware-agnostic mode)")
    context_depth: Optional[int] = Field(None, ge=0, description="Overrides the configured context depth")
    widening_delay: Optional[int] = Field(None, ge=0, description="Overrides the configured widening delay")
    max_visits: Optional[int] = Field(None, ge=1, description="Overrides the configured visit budget")
