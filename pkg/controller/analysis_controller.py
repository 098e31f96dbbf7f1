import logging
from fastapi import APIRouter, HTTPException, Depends
from domain.exceptions import FrontendError, SpecError
from dto.analysis_dto import AnalysisOptions, AnalysisRequest
from dto.report_dto import ReportResponse
from service.analysis_service import AnalysisService


# Dependency injection functions
def get_analysis_options() -> AnalysisOptions:
    """Dependency injection for the configured analysis options."""
    return AnalysisOptions()


def get_analysis_service(options: AnalysisOptions = Depends(get_analysis_options)) -> AnalysisService:
    """Dependency injection for the analysis service."""
    return AnalysisService(options=options)


# Router setup
analysis_router = APIRouter(prefix="/analyses", tags=["analyses"])

logger = logging.getLogger(__name__)


@analysis_router.post("", response_model=ReportResponse)
async def create_analysis(
    request: AnalysisRequest,
    service: AnalysisService = Depends(get_analysis_service)
):
    """Analyze a Mini-C translation unit and return its report."""
    try:
        options = service.options.merged(
            context_depth=request.context_depth,
            widening_delay=request.widening_delay,
            max_visits=request.max_visits,
        )
        run = service.analyze_source(request.source, request.file_name, request.hardware, request.isrs, options)
        return ReportResponse.of(run.report)
    except (FrontendError, SpecError, ValueError) as e:
        logger.warning(f"Rejected analysis of {request.file_name}: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error analyzing {request.file_name}: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=str(e))
