import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from domain.access import AccessSets, PointsTo, SharedSet
from domain.analysis import AnalysisResult
from domain.ast import Program
from domain.cfg import NodeKind, ProgramCfg
from domain.oracle import ContainmentReport, Executions, OracleBounds
from domain.report import Report
from domain.warning import AnalysisWarning
from dto.analysis_dto import AnalysisOptions
from dto.hardware_spec import HardwareSpec
from repository.hardware_repository import HardwareRepository
from repository.source_repository import SourceRepository
from service.bounds_checker import check_array_bounds
from service.cfg_builder import build_program_cfg, to_dot
from service.concrete_oracle import check_containment, describe_executions, enumerate_executions
from service.frontend import load_program
from service.hardware_model import agnostic_spec, isr_sources, parse_hw_spec
from service.interrupt_engine import EngineOptions, InterruptEngine, analyze_program
from service.isr_scheduler import schedule_isr_nodes
from service.pointer_prepass import compute_access_sets, compute_points_to, compute_shared_set
from service.wellformedness import SharedInfo, annotate_full_expressions, explain


logger = logging.getLogger(__name__)


@dataclass
class AnalysisRun:
    """Everything one pipeline run produced, kept for the dump options."""

    program: Program
    spec: HardwareSpec
    isr_map: Dict[str, str]
    cfg: ProgramCfg
    pts: PointsTo
    access: AccessSets
    shared: SharedSet
    fixpoint_sites: List[int]
    result: AnalysisResult
    engine: InterruptEngine
    report: Report = field(default=None)


class AnalysisService:
    """
    Service layer of the analyzer. Runs the pipeline parse, prepasses,
    ISR scheduling, fixed point and bounds check on one translation unit.
    """

    def __init__(
        self,
        source_repository: Optional[SourceRepository] = None,
        hardware_repository: Optional[HardwareRepository] = None,
        options: Optional[AnalysisOptions] = None,
    ):
        self.source_repository = source_repository or SourceRepository()
        self.hardware_repository = hardware_repository or HardwareRepository()
        self.options = options or AnalysisOptions()

    def hardware_spec(self, text: Optional[str], isrs: Sequence[str] = (), file: str = "<hw>") -> HardwareSpec:
        """Parsed description, or the hardware-agnostic baseline when `text` is None."""
        if text is None:
            logger.info(f"hardware-agnostic mode, ISRs: {', '.join(isrs) or 'none'}")
            return agnostic_spec(isrs)
        return parse_hw_spec(text, file)

    def analyze_file(
        self, path: str, hardware: str, isrs: Sequence[str] = (), options: Optional[AnalysisOptions] = None,
    ) -> AnalysisRun:
        """Analyze a source file against a hardware description file (`none` for agnostic mode)."""
        source = self.source_repository.load(path)
        hw_text = self.hardware_repository.load(hardware)
        spec = self.hardware_spec(hw_text, isrs, hardware)
        return self.run(source, path, spec, options)

    def analyze_source(
        self,
        source: str,
        file: str = "<input>",
        hardware: Optional[str] = None,
        isrs: Sequence[str] = (),
        options: Optional[AnalysisOptions] = None,
    ) -> AnalysisRun:
        spec = self.hardware_spec(hardware, isrs)
        return self.run(source, file, spec, options)

    def run(self, source: str, file: str, spec: HardwareSpec, options: Optional[AnalysisOptions] = None) -> AnalysisRun:
        options = options or self.options
        program = load_program(source, file)
        isr_map = isr_sources(program, spec)

        cfg = build_program_cfg(program)
        pts = compute_points_to(program, cfg)
        access = compute_access_sets(program, cfg, pts)
        shared = compute_shared_set(program, cfg, access, isr_map)
        info = SharedInfo.build(cfg, access, shared, pts)
        annotate_full_expressions(cfg, info)
        sites = schedule_isr_nodes(cfg, shared, spec, program.entry)

        engine_options = EngineOptions(
            context_depth=options.context_depth,
            widening_delay=options.widening_delay,
            max_visits=options.max_visits,
            isr_widen_after=options.isr_widen_after,
        )
        result, engine = analyze_program(program, cfg, spec, access, shared, pts, isr_map, engine_options)
        accesses, bound_warnings = check_array_bounds(result, cfg, engine.evaluator)
        for warning in bound_warnings:
            logger.warning(str(warning))

        warnings = sorted(result.warnings + bound_warnings, key=AnalysisWarning.sort_key)
        report = Report(file, warnings, accesses, result.stats)
        logger.info(f"{file}: {len(warnings)} warnings, exit code {report.exit_code}")
        return AnalysisRun(program, spec, isr_map, cfg, pts, access, shared, sites, result, engine, report)

    # -- dumps ---------------------------------------------------------

    @staticmethod
    def dump_cfg(run: AnalysisRun) -> str:
        return to_dot(run.cfg)

    @staticmethod
    def dump_access_sets(run: AnalysisRun) -> List[str]:
        lines = run.access.describe()
        lines.extend(run.shared.describe())
        for loc in sorted(run.pts.targets):
            targets = ", ".join(sorted(map(str, run.pts.of(loc))))
            lines.append(f"points-to {loc}: {{{targets}}}")
        return lines

    @staticmethod
    def dump_state(run: AnalysisRun, line: int, column: Optional[int] = None) -> List[str]:
        """Pre-states (joined over contexts) of the nodes starting at the given position."""
        lines = []
        for node_id in sorted(run.cfg.nodes):
            node = run.cfg.nodes[node_id]
            if node.loc is None or node.loc.line != line or node.kind == NodeKind.ISR_FIXPOINT:
                continue
            if column is not None and node.loc.column != column:
                continue
            state = run.result.state_at(node_id)
            lines.append(f"{node.loc} [{node.function}] {node.label}")
            if state is None or state.is_bottom:
                lines.append("  unreachable")
            else:
                lines.extend(f"  {text}" for text in state.describe())
        return lines

    @staticmethod
    def explain_wf(run: AnalysisRun, line: int, column: Optional[int] = None) -> List[str]:
        return explain(run.cfg, line, column)

    # -- concrete oracle -----------------------------------------------

    def oracle_bounds(self, isr_fires_max: Optional[int] = None, options: Optional[AnalysisOptions] = None) -> OracleBounds:
        options = options or self.options
        bounds = OracleBounds(schedule_cap=options.schedule_cap, state_budget=options.state_budget)
        if isr_fires_max is not None:
            bounds.isr_fires_max = isr_fires_max
        return bounds

    def enumerate(self, run: AnalysisRun, bounds: Optional[OracleBounds] = None) -> Executions:
        """Concrete executions of an analyzed program; full expression ids are those of `run.cfg`."""
        bounds = bounds or self.oracle_bounds()
        logger.info(f"oracle: isr_fires_max={bounds.isr_fires_max} state_budget={bounds.state_budget}")
        return enumerate_executions(run.program, run.spec, bounds, run.cfg)

    @staticmethod
    def check_containment(run: AnalysisRun, executions: Executions) -> ContainmentReport:
        return check_containment(executions, run.result, run.cfg, run.report.array_accesses)

    @staticmethod
    def describe_executions(run: AnalysisRun, executions: Executions) -> List[str]:
        return describe_executions(executions, run.cfg)
