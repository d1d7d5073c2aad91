from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import List
from enum import Enum


class DrivingDirection(str, Enum):
    """Carriageway travel direction in source coordinates"""
    RIGHTWARD = "rightward"  # highD drivingDirection 2, already canonical
    LEFTWARD = "leftward"    # highD drivingDirection 1, mirrored on ingestion
    AUTO = "auto"            # decided from the sign of the median x velocity


class VehicleState(BaseModel):
    """One vehicle at one frame, bounding-box center referenced"""
    model_config = ConfigDict(frozen=True)

    vehicle_id: int
    frame: int
    t: float = Field(..., description="Timestamp in seconds")
    x: float = Field(..., description="Longitudinal center position (m)")
    y: float = Field(..., description="Lateral center position (m), +y is the driver's right")
    vx: float = 0.0
    vy: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    length: float = Field(..., gt=0)
    width: float = Field(..., gt=0)
    lane_id: int = 0

    @property
    def speed(self) -> float:
        return (self.vx ** 2 + self.vy ** 2) ** 0.5


class LaneGeometry(BaseModel):
    """Lateral positions of lane markers and road boundaries of one carriageway"""
    model_config = ConfigDict(frozen=True)

    marker_ys: List[float] = Field(default_factory=list)
    boundary_ys: List[float] = Field(default_factory=list)
    direction: DrivingDirection = DrivingDirection.RIGHTWARD

    @model_validator(mode="after")
    def _check_lines(self):
        if len(self.boundary_ys) not in (0, 2):
            raise ValueError("boundary_ys must hold exactly 2 entries per carriageway")
        if list(self.marker_ys) != sorted(self.marker_ys):
            raise ValueError("marker_ys must be sorted ascending")
        return self

    def mirrored(self) -> "LaneGeometry":
        return LaneGeometry(
            marker_ys=sorted(-y for y in self.marker_ys),
            boundary_ys=sorted(-y for y in self.boundary_ys),
            direction=DrivingDirection.RIGHTWARD,
        )


class GapVector(BaseModel):
    """Signed edge-to-edge clearance between two axis-aligned boxes"""
    model_config = ConfigDict(frozen=True)

    dx: float
    dy: float


class CenterVector(BaseModel):
    """Center-to-center position and velocity difference, other minus ego"""
    model_config = ConfigDict(frozen=True)

    dx: float
    dy: float
    dvx: float
    dvy: float


class SceneFrame(BaseModel):
    """An ego vehicle with its perceived neighbors at one instant"""
    model_config = ConfigDict(frozen=True)

    ego: VehicleState
    neighbors: List[VehicleState] = Field(default_factory=list)
    lanes: LaneGeometry = Field(default_factory=LaneGeometry)

    @model_validator(mode="after")
    def _check_scene(self):
        for neighbor in self.neighbors:
            if neighbor.vehicle_id == self.ego.vehicle_id:
                raise ValueError("ego must not be listed among its neighbors")
            if neighbor.frame != self.ego.frame:
                raise ValueError("all scene states must share the ego frame")
        return self
