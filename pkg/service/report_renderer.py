import json
import logging
from typing import List

from domain.report import Report
from dto.report_dto import ReportResponse


logger = logging.getLogger(__name__)

FORMATS = ("text", "json")


def render_text(report: Report, with_stats: bool = False) -> str:
    lines: List[str] = [str(warning) for warning in report.warnings]
    count = len(report.warnings)
    lines.append(f"{count} warning{'' if count == 1 else 's'}")
    if with_stats:
        stats = report.stats
        lines.append(
            f"stats: isr_analyses={stats.isr_analyses} isr_fixpoint_sites={stats.isr_fixpoint_sites} "
            f"node_visits={stats.node_visits} memo_hits={stats.memo_hits} "
            f"elapsed={stats.elapsed_seconds:.3f}s"
        )
    return "\n".join(lines) + "\n"


def render_json(report: Report) -> str:
    """The ReportResponse schema; field order follows the model, so output is deterministic."""
    return json.dumps(ReportResponse.of(report).model_dump(mode="json"), indent=2) + "\n"


def render_report(report: Report, format: str = "text", with_stats: bool = False) -> str:
    if format not in FORMATS:
        raise ValueError(f"unknown report format '{format}' (expected one of: {', '.join(FORMATS)})")
    logger.info(f"rendering {len(report.warnings)} warnings as {format}")
    if format == "json":
        return render_json(report)
    return render_text(report, with_stats)
