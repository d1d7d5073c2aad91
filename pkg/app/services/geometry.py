"""
Trajectory geometry: canonical orientation, inter-vehicle gaps and perceived neighbor sets.

All functions are pure; states are immutable pydantic values.
"""
from typing import Iterable, List, Optional

import numpy as np

from app.config import settings
from app.models.trajectory import (
    CenterVector,
    DrivingDirection,
    GapVector,
    LaneGeometry,
    SceneFrame,
    VehicleState,
)
from app.utils.exceptions import TrajectoryError


def _mirror(state: VehicleState) -> VehicleState:
    return state.model_copy(update={
        "x": -state.x, "y": -state.y,
        "vx": -state.vx, "vy": -state.vy,
        "ax": -state.ax, "ay": -state.ay,
    })


def is_canonical(states: List[VehicleState]) -> bool:
    """A track is canonical when it travels along +x (median vx > 0)."""
    return float(np.median([s.vx for s in states])) > 0.0


def normalize_track(states: List[VehicleState],
                    driving_direction: DrivingDirection = DrivingDirection.AUTO) -> List[VehicleState]:
    """
    Rotate a single-vehicle track into the canonical frame (travel along +x,
    +y to the driver's right). Mirroring negates positions, velocities and
    accelerations on both axes, which preserves speed. Tracks that already
    travel along +x are returned unchanged, so the operation is idempotent.
    """
    if not states:
        raise TrajectoryError("Cannot normalize an empty track")
    ids = {s.vehicle_id for s in states}
    if len(ids) > 1:
        raise TrajectoryError(f"Track mixes vehicle ids {sorted(ids)}")
    frames = [s.frame for s in states]
    if any(b <= a for a, b in zip(frames, frames[1:])):
        raise TrajectoryError(f"Frames of vehicle {states[0].vehicle_id} are not strictly increasing")

    # LEFTWARD and AUTO both mirror only tracks that are not yet canonical
    if driving_direction == DrivingDirection.RIGHTWARD or is_canonical(states):
        return list(states)
    return [_mirror(s) for s in states]


def _check_same_frame(ego: VehicleState, other: VehicleState) -> None:
    if ego.frame != other.frame:
        raise TrajectoryError(
            f"States belong to different frames ({ego.frame} vs {other.frame})"
        )


def _signed_clearance(center_delta: float, half_extent_sum: float) -> float:
    clearance = max(0.0, abs(center_delta) - half_extent_sum)
    return clearance if center_delta >= 0 else -clearance


def gap_vector(ego: VehicleState, other: VehicleState) -> GapVector:
    """Signed edge-to-edge clearances; positive dx ahead of the ego, positive dy to its right."""
    _check_same_frame(ego, other)
    dx = _signed_clearance(other.x - ego.x, 0.5 * (ego.length + other.length))
    dy = _signed_clearance(other.y - ego.y, 0.5 * (ego.width + other.width))
    # normalise -0.0 so overlap always reads as exactly zero
    return GapVector(dx=dx + 0.0, dy=dy + 0.0)


def center_vector(ego: VehicleState, other: VehicleState) -> CenterVector:
    _check_same_frame(ego, other)
    return CenterVector(
        dx=other.x - ego.x,
        dy=other.y - ego.y,
        dvx=other.vx - ego.vx,
        dvy=other.vy - ego.vy,
    )


def select_neighbors(frame_states: Iterable[VehicleState],
                     ego_id: int,
                     window: Optional[float] = None,
                     lane_span: Optional[int] = None,
                     lanes: Optional[LaneGeometry] = None) -> SceneFrame:
    """
    Build the perceived scene of one ego: every vehicle whose center lies
    within `window` meters longitudinally and within `lane_span` lanes.
    Neighbors are ordered by vehicle id so the result does not depend on
    the order of `frame_states`.
    """
    window = settings.PERCEPTION_WINDOW if window is None else window
    lane_span = settings.LANE_SPAN if lane_span is None else lane_span

    states = list(frame_states)
    ego = next((s for s in states if s.vehicle_id == ego_id), None)
    if ego is None:
        raise TrajectoryError(f"Ego vehicle {ego_id} is not present in the frame")

    neighbors = [
        s for s in states
        if s.vehicle_id != ego_id
        and abs(s.x - ego.x) <= window
        and abs(s.lane_id - ego.lane_id) <= lane_span
    ]
    neighbors.sort(key=lambda s: s.vehicle_id)
    return SceneFrame(ego=ego, neighbors=neighbors, lanes=lanes or LaneGeometry())


def nearest_lines(y: float, lanes: LaneGeometry) -> tuple:
    """
    Lateral distances from a vehicle center to the nearest lane marker on
    each side and to the nearest road boundary.

    Returns (marker_distances, boundary_distances), each a list of absolute
    distances in meters.
    """
    markers = []
    left = [m for m in lanes.marker_ys if m <= y]
    right = [m for m in lanes.marker_ys if m > y]
    if left:
        markers.append(y - max(left))
    if right:
        markers.append(min(right) - y)
    boundaries = []
    if lanes.boundary_ys:
        boundaries.append(min(abs(b - y) for b in lanes.boundary_ys))
    return markers, boundaries
