from pydantic import BaseModel, ConfigDict, Field
from typing import Dict, List

from .trajectory import DrivingDirection, LaneGeometry, VehicleState


class RecordingMeta(BaseModel):
    """Recording-level metadata in source (un-mirrored) coordinates"""
    model_config = ConfigDict(frozen=True)

    recording_id: int
    frame_rate: float = Field(25.0, gt=0, description="Hz, highD records at 25 Hz")
    lane_marker_ys: Dict[DrivingDirection, List[float]] = Field(default_factory=dict)
    boundary_ys: Dict[DrivingDirection, List[float]] = Field(default_factory=dict)
    segment_length: float = Field(420.0, gt=0)

    def lanes(self, direction: DrivingDirection) -> LaneGeometry:
        """Lane geometry of one carriageway in the canonical frame"""
        geometry = LaneGeometry(
            marker_ys=sorted(self.lane_marker_ys.get(direction, [])),
            boundary_ys=sorted(self.boundary_ys.get(direction, [])),
            direction=direction,
        )
        if direction == DrivingDirection.LEFTWARD:
            return geometry.mirrored()
        return geometry


class Dataset(BaseModel):
    """Normalized tracks of one recording (or a pool of recordings)"""
    model_config = ConfigDict(frozen=True)

    meta: RecordingMeta
    tracks: Dict[int, List[VehicleState]] = Field(default_factory=dict)
    lane_changes: Dict[int, bool] = Field(default_factory=dict)
    directions: Dict[int, DrivingDirection] = Field(default_factory=dict)

    @property
    def vehicle_ids(self) -> List[int]:
        return sorted(self.tracks)

    def direction_of(self, vehicle_id: int) -> DrivingDirection:
        return self.directions.get(vehicle_id, DrivingDirection.RIGHTWARD)

    def lanes_for(self, vehicle_id: int) -> LaneGeometry:
        return self.meta.lanes(self.direction_of(vehicle_id))

    @property
    def n_states(self) -> int:
        return sum(len(track) for track in self.tracks.values())
