from pydantic import BaseModel, Field
from typing import Dict, List, Optional

from .analysis import RiskKind
from .fields import CpaRegime, FieldParameterSet
from .trajectory import VehicleState


class VehicleInput(BaseModel):
    """Kinematic state of one vehicle in the canonical frame"""
    x: float = 0.0
    y: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    length: float = Field(4.5, gt=0)
    width: float = Field(1.9, gt=0)
    lane_id: int = 0

    def to_state(self, vehicle_id: int) -> VehicleState:
        return VehicleState(vehicle_id=vehicle_id, frame=0, t=0.0, **self.model_dump())


class PairRiskRequest(BaseModel):
    ego: VehicleInput
    other: VehicleInput
    params: Optional[FieldParameterSet] = None


class PairRiskResponse(BaseModel):
    s_risk: float
    o_risk: float
    gap_dx: float
    gap_dy: float
    regime: CpaRegime
    t_m: Optional[float] = Field(None, description="None when the pair is receding")
    d_m: Optional[float] = None
    ttc: Optional[float] = None
    ttci: Optional[float] = Field(None, description="None when the boxes already overlap")


class FieldRequest(BaseModel):
    field: RiskKind = RiskKind.S
    ego: Optional[VehicleInput] = None
    other: Optional[VehicleInput] = None
    preset: Optional[str] = None
    extent_x: float = 100.0
    extent_y: float = 20.0
    resolution: float = 0.5
    params: Optional[FieldParameterSet] = None


class FieldResponse(BaseModel):
    field: RiskKind
    xs: List[float]
    ys: List[float]
    values: List[List[float]]


class AssessRequest(BaseModel):
    recording_dir: str = Field(..., description="highD directory, relative to DATA_DIR")
    vehicle_id: int
    with_ttc: bool = True
    params: Optional[FieldParameterSet] = None
    kappa_zero: bool = Field(False, description="Aggregate vehicle terms only, as in case studies")


class AssessResponse(BaseModel):
    vehicle_id: int
    recording_id: int
    frames: List[Dict[str, Optional[float]]]
