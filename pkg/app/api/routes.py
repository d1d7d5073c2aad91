import math
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from fastapi import APIRouter, Depends, HTTPException

from app.api.dependencies import get_params, get_report_writer
from app.config import settings
from app.models.analysis import RiskKind
from app.models.fields import FieldParameterSet
from app.models.responses import (
    AssessRequest,
    AssessResponse,
    FieldRequest,
    FieldResponse,
    PairRiskRequest,
    PairRiskResponse,
)
from app.services.analysis import RiskAssessor, assess_pair, o_field_preset, rasterize_field
from app.services.highd_reader import load_recordings
from app.services.report_writer import ReportWriter
from app.utils.exceptions import AnalysisError, CSPFException, IngestionError
from app.utils.logger import get_logger

logger = get_logger(__name__)
router = APIRouter()


def _finite(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return value


@router.get("/health")
async def health_check():
    """Health check endpoint"""
    return {"status": "healthy", "service": "C-SPF Risk Toolkit", "version": "1.0.0"}


@router.get("/params", response_model=FieldParameterSet)
async def get_field_params(params: FieldParameterSet = Depends(get_params)):
    """
    Field parameters the service evaluates with
    - S-field polynomial coefficients in increasing power order
    - O-field shape and scale factors
    """
    return params


@router.post("/risk/pair", response_model=PairRiskResponse)
async def pair_risk(request: PairRiskRequest, params: FieldParameterSet = Depends(get_params)):
    """
    S-risk, O-risk, closest approach and TTC of one vehicle pair
    """
    try:
        params = request.params or params
        assessment = assess_pair(
            request.ego.to_state(1), request.other.to_state(2), params.s_field, params.o_field
        )
        return PairRiskResponse(
            s_risk=assessment.s_risk,
            o_risk=assessment.o_risk,
            gap_dx=assessment.gap.dx,
            gap_dy=assessment.gap.dy,
            regime=assessment.cpa.regime,
            t_m=_finite(assessment.cpa.t_m),
            d_m=_finite(assessment.cpa.d_m),
            ttc=assessment.ttc.ttc,
            ttci=_finite(assessment.ttc.ttci),
        )
    except CSPFException as e:
        logger.error(f"C-SPF error during pair assessment: {str(e)}")
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Unexpected error during pair assessment: {str(e)}")
        raise HTTPException(status_code=500, detail="Internal server error during pair assessment")


@router.post("/field", response_model=FieldResponse)
async def field_grid(request: FieldRequest, params: FieldParameterSet = Depends(get_params)):
    """
    Rasterized S-field or O-field around the emitting vehicle
    """
    try:
        if request.preset:
            ego, other = o_field_preset(request.preset)
            field = RiskKind.O
        else:
            if request.ego is None:
                raise AnalysisError("Either an ego vehicle or a preset is required")
            ego = request.ego.to_state(1)
            other = request.other.to_state(2) if request.other else None
            field = request.field

        grid = rasterize_field(
            ego, field, request.params or params, other=other,
            extent=(request.extent_x, request.extent_y), resolution=request.resolution,
        )
        return FieldResponse(field=grid.field, xs=grid.xs.tolist(), ys=grid.ys.tolist(), values=grid.values.tolist())
    except CSPFException as e:
        logger.error(f"C-SPF error during rasterization: {str(e)}")
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Unexpected error during rasterization: {str(e)}")
        raise HTTPException(status_code=500, detail="Internal server error during rasterization")


@router.post("/assess", response_model=AssessResponse)
async def assess_vehicle(
    request: AssessRequest,
    params: FieldParameterSet = Depends(get_params),
    report_writer: ReportWriter = Depends(get_report_writer)
):
    """
    Risk timeline of one vehicle of a recording directory under DATA_DIR
    """
    try:
        data_dir = Path(settings.DATA_DIR).resolve()
        recording_dir = (data_dir / request.recording_dir).resolve()
        if data_dir not in recording_dir.parents and recording_dir != data_dir:
            raise IngestionError(f"Recording directory must lie inside {settings.DATA_DIR}")

        datasets = load_recordings(recording_dir)
        dataset = next((d for d in datasets if request.vehicle_id in d.tracks), None)
        if dataset is None:
            raise AnalysisError(f"Vehicle {request.vehicle_id} not found in {request.recording_dir}")

        logger.info(f"Assessing vehicle {request.vehicle_id} of recording {dataset.meta.recording_id}")
        params = request.params or params
        if request.kappa_zero:
            params = params.model_copy(update={"s_field": params.s_field.without_lane_terms()})
        timeline = RiskAssessor(dataset, params).risk_timeline(
            request.vehicle_id, with_ttc=request.with_ttc
        )
        df = report_writer.timeline_frame(timeline).replace([np.inf, -np.inf], np.nan).astype(object)
        frames = df.where(pd.notna(df), None).to_dict("records")
        return AssessResponse(vehicle_id=request.vehicle_id, recording_id=dataset.meta.recording_id, frames=frames)
    except CSPFException as e:
        logger.error(f"C-SPF error during assessment: {str(e)}")
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Unexpected error during assessment: {str(e)}")
        raise HTTPException(status_code=500, detail="Internal server error during assessment")


@router.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": "C-SPF Risk Toolkit API",
        "version": "1.0.0",
        "endpoints": {
            "params": "/api/v1/params",
            "pair_risk": "/api/v1/risk/pair",
            "field": "/api/v1/field",
            "assess": "/api/v1/assess",
            "health": "/api/v1/health"
        }
    }
