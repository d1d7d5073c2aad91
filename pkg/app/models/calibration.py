from pydantic import BaseModel, ConfigDict, Field
from typing import List, Optional
from enum import Enum


class SpacingKind(str, Enum):
    VEHICLE = "vehicle"
    LANE_MARKER = "lane_marker"
    BOUNDARY = "boundary"


class Axis(str, Enum):
    """Which (gamma, beta) pair an inference step updates"""
    LONGITUDINAL = "x"
    LATERAL = "y"
    LANE_MARKER = "l"
    BOUNDARY = "b"


class BinStatus(str, Enum):
    OK = "ok"
    INSUFFICIENT_SAMPLES = "insufficient_samples"
    INSUFFICIENT_VEHICLES = "insufficient_vehicles"
    NON_CONVERGED = "non_converged"


class SpacingSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    dx: float
    dy: float
    kind: SpacingKind = SpacingKind.VEHICLE
    ego_velocity: float = Field(..., ge=0)
    vehicle_id: int


class FieldShape(BaseModel):
    """Scale/shape pairs for every spacing kind, used when evaluating a likelihood"""
    model_config = ConfigDict(frozen=True)

    gamma_x: float = Field(10.0, gt=0)
    beta_x: float = Field(2.0, ge=2)
    gamma_y: float = Field(1.4310, gt=0)
    beta_y: float = Field(4.9956, ge=2)
    gamma_l: float = Field(1.18, gt=0)
    beta_l: float = Field(2.46, ge=2)
    gamma_b: float = Field(1.64, gt=0)
    beta_b: float = Field(5.17, ge=2)

    def pair(self, axis: Axis) -> tuple:
        return getattr(self, f"gamma_{axis.value}"), getattr(self, f"beta_{axis.value}")

    def with_pair(self, axis: Axis, gamma: float = None, beta: float = None) -> "FieldShape":
        update = {}
        if gamma is not None:
            update[f"gamma_{axis.value}"] = gamma
        if beta is not None:
            update[f"beta_{axis.value}"] = beta
        return self.model_copy(update=update)


class InferenceResult(BaseModel):
    """Outcome of the alternating gamma/beta inference"""
    gamma_x: float
    beta_x: float
    gamma_y: float
    beta_y: float
    converged: bool
    sweeps: int
    degenerate_axes: List[Axis] = Field(default_factory=list)


class LineFit(BaseModel):
    """Pooled lane-marker or boundary inference"""
    kind: SpacingKind
    gamma: float
    beta: float
    converged: bool
    sweeps: int
    n_samples: int


class CalibrationBin(BaseModel):
    velocity: int
    samples: List[SpacingSample] = Field(default_factory=list)
    n_vehicles: int = 0
    status: BinStatus = BinStatus.OK

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def sufficient(self) -> bool:
        return self.status == BinStatus.OK


class BinResult(BaseModel):
    velocity: int
    gamma_x: float
    beta_x: float
    gamma_y: float
    beta_y: float
    std_gamma_x: float = 0.0
    std_beta_x: float = 0.0
    std_gamma_y: float = 0.0
    std_beta_y: float = 0.0
    n_iterations: int
    n_converged: int = 0
    n_samples: int = 0
    n_vehicles: int = 0
    draws_per_iteration: int = 0
    status: BinStatus = BinStatus.OK


class CalibrationReport(BaseModel):
    """Everything a calibrate run produces besides the parameter file"""
    bins: List[CalibrationBin] = Field(default_factory=list, exclude=True)
    results: List[BinResult] = Field(default_factory=list)
    lane_marker: Optional[LineFit] = None
    boundary: Optional[LineFit] = None
    n_samples: int = 0
