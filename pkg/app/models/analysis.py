from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .fields import CpaResult
from .trajectory import GapVector


class RiskKind(str, Enum):
    S = "s"
    O = "o"


class ResponseDirection(str, Enum):
    LONGITUDINAL = "longitudinal"
    LATERAL_LEFT = "lateral_left"
    LATERAL_RIGHT = "lateral_right"


class TtcResult(BaseModel):
    """Bounding-box time to collision; ttc is None when no contact within the horizon"""
    model_config = ConfigDict(frozen=True)

    ttc: Optional[float] = Field(None, ge=0)
    ttci: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _check_inverse(self):
        if self.ttc is None and self.ttci != 0.0:
            raise ValueError("ttci must be 0 when ttc is undefined")
        return self


class PairRisk(BaseModel):
    """Risk one neighbor imposes on the ego at one frame"""
    model_config = ConfigDict(frozen=True)

    neighbor_id: int
    r_s: float = Field(..., ge=0, le=1)
    r_o: float = Field(..., ge=0, le=1)
    t_m: float
    d_m: float
    ttci: float = 0.0
    dx: float = Field(0.0, description="Center offset of the neighbor ahead of the ego (m)")
    dy: float = Field(0.0, description="Center offset of the neighbor to the ego's right (m)")
    same_lane: bool = False

    def risk(self, kind: RiskKind) -> float:
        return self.r_s if kind == RiskKind.S else self.r_o


class TimelineFrame(BaseModel):
    model_config = ConfigDict(frozen=True)

    frame: int
    t: float
    s_risk: float = Field(..., ge=0, le=1)
    o_risk: float = Field(..., ge=0, le=1)
    ttci: float = Field(0.0, ge=0)
    ax: float = 0.0
    ay: float = 0.0
    vy: float = 0.0
    pairs: List[PairRisk] = Field(default_factory=list)

    @property
    def top_pair(self) -> Optional[PairRisk]:
        """Neighbor with the largest O-risk; ties go to the larger S-risk, then the smaller id."""
        if not self.pairs:
            return None
        return min(self.pairs, key=lambda p: (-p.r_o, -p.r_s, p.neighbor_id))

    def pair(self, neighbor_id: int) -> Optional[PairRisk]:
        return next((p for p in self.pairs if p.neighbor_id == neighbor_id), None)


class RiskTimeline(BaseModel):
    vehicle_id: int
    frames: List[TimelineFrame] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_order(self):
        times = [f.t for f in self.frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("timeline timestamps must be strictly increasing")
        return self

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.frames])

    def series(self, kind: RiskKind) -> np.ndarray:
        return np.array([f.s_risk if kind == RiskKind.S else f.o_risk for f in self.frames])

    def source_ids(self) -> List[int]:
        return sorted({p.neighbor_id for f in self.frames for p in f.pairs})


class ThresholdEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    vehicle_id: int
    source_id: int
    risk_kind: RiskKind
    threshold: float
    onset_t: float
    onset_frame: int
    peak: float = Field(..., ge=0, le=1)
    duration: float = Field(..., ge=0)


class ResponseRecord(BaseModel):
    """One qualifying event and the ego's response to it"""
    model_config = ConfigDict(frozen=True)

    vehicle_id: int
    source_id: int
    onset_t: float
    value: float


class ResponseDistribution(BaseModel):
    threshold: float
    lag: float
    direction: ResponseDirection
    risk_kind: RiskKind
    records: List[ResponseRecord] = Field(default_factory=list)
    excluded_lane_changers: int = 0

    @property
    def values(self) -> List[float]:
        return [r.value for r in self.records]

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def mean(self) -> Optional[float]:
        return float(np.mean(self.values)) if self.records else None

    def histogram(self, bins: int = 20) -> Dict[str, List[float]]:
        if not self.records:
            return {"edges": [], "counts": []}
        counts, edges = np.histogram(self.values, bins=bins)
        return {"edges": edges.tolist(), "counts": counts.tolist()}


class PairAssessment(BaseModel):
    """S-field, O-field and TTC view of a single vehicle pair"""
    s_risk: float
    o_risk: float
    gap: GapVector
    cpa: CpaResult
    ttc: TtcResult


@dataclass(frozen=True)
class FieldGrid:
    """
    Rasterized field around the vehicle emitting it. values[i, j] is the
    risk at lateral offset ys[i] and longitudinal offset xs[j], both
    relative to that vehicle's center and ascending.
    """
    field: RiskKind
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape
