"""
Risk timelines, threshold events, behavior-response distributions and field
rasterization on top of the S-field, O-field and TTC kernels.
"""
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.config import settings
from app.models.analysis import (
    FieldGrid,
    PairAssessment,
    PairRisk,
    ResponseDirection,
    ResponseDistribution,
    ResponseRecord,
    RiskKind,
    RiskTimeline,
    ThresholdEvent,
    TimelineFrame,
)
from app.models.dataset import Dataset
from app.models.fields import FieldParameterSet, OFieldParams, SFieldParams
from app.models.trajectory import VehicleState
from app.services.baselines import ttc_2d
from app.services.geometry import center_vector, gap_vector
from app.services.o_field import aggregate_objective, cpa_risk, pair_cpa
from app.services.s_field import aggregate_subjective, ggd_kernel, params_at_velocity, vehicle_proximity_risk
from app.services.scenes import SceneBuilder
from app.utils.exceptions import AnalysisError
from app.utils.logger import get_logger
from app.utils.validators import validate_threshold

logger = get_logger(__name__)

WINDOW_TOLERANCE = 1e-9  # seconds


class RiskAssessor:
    """Evaluates both fields for every vehicle of one Dataset"""

    def __init__(self, dataset: Dataset, params: Optional[FieldParameterSet] = None,
                 window: Optional[float] = None, lane_span: Optional[int] = None,
                 ttc_dt: Optional[float] = None, ttc_horizon: Optional[float] = None):
        self.logger = logger
        self.dataset = dataset
        self.params = params or FieldParameterSet()
        self.scenes = SceneBuilder(dataset, window=window, lane_span=lane_span)
        self.ttc_dt = ttc_dt
        self.ttc_horizon = ttc_horizon
        self._timelines: Dict[Tuple[int, bool], RiskTimeline] = {}

    def risk_timeline(self, vehicle_id: int, with_ttc: bool = True) -> RiskTimeline:
        key = (vehicle_id, with_ttc)
        if key in self._timelines:
            return self._timelines[key]

        s_params, o_params = self.params.s_field, self.params.o_field
        frames = []
        for scene in self.scenes.scenes(vehicle_id):
            ego = scene.ego
            s_result = aggregate_subjective(scene, s_params)
            s_by_id = dict(s_result.per_vehicle)

            pairs = []
            for other in scene.neighbors:
                cpa_result = pair_cpa(ego, other)
                r_o = cpa_risk(cpa_result, o_params.collision_distance(ego.width, other.width), o_params)
                ttci = ttc_2d(ego, other, self.ttc_dt, self.ttc_horizon).ttci if with_ttc else 0.0
                c = center_vector(ego, other)
                pairs.append(PairRisk(
                    neighbor_id=other.vehicle_id,
                    r_s=s_by_id[other.vehicle_id],
                    r_o=r_o,
                    t_m=cpa_result.t_m,
                    d_m=cpa_result.d_m,
                    ttci=ttci,
                    dx=c.dx,
                    dy=c.dy,
                    same_lane=other.lane_id == ego.lane_id,
                ))

            frames.append(TimelineFrame(
                frame=ego.frame,
                t=ego.t,
                s_risk=s_result.aggregated,
                o_risk=aggregate_objective([p.r_o for p in pairs]),
                ttci=max((p.ttci for p in pairs), default=0.0),
                ax=ego.ax,
                ay=ego.ay,
                vy=ego.vy,
                pairs=pairs,
            ))

        timeline = RiskTimeline(vehicle_id=vehicle_id, frames=frames)
        self._timelines[key] = timeline
        self.logger.debug(f"Timeline of vehicle {vehicle_id}: {len(frames)} frames")
        return timeline

    def behavior_response(self, risk_kind: RiskKind, direction: ResponseDirection,
                          thresholds: Sequence[float], lag: Optional[float] = None,
                          exclude_lane_changers: bool = True) -> List[ResponseDistribution]:
        """
        For each threshold, the ego's signed extreme response within
        (onset, onset + lag] after the first exceedance of every
        (vehicle, source) pair. Longitudinal responses use the longitudinal
        acceleration and count only the lead vehicle as a source; lateral
        responses use the lateral acceleration for the O-field and the
        lateral velocity for the S-field, split by the side of the source.
        """
        lag = settings.RESPONSE_LAG if lag is None else lag
        thresholds = list(thresholds)
        for threshold in thresholds:
            validate_threshold(threshold)
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise AnalysisError(f"Thresholds must be strictly ascending, got {thresholds}")

        distributions = [
            ResponseDistribution(threshold=threshold, lag=lag, direction=direction, risk_kind=risk_kind)
            for threshold in thresholds
        ]
        records: List[List[ResponseRecord]] = [[] for _ in thresholds]
        excluded = [0] * len(thresholds)

        for vehicle_id in self.dataset.vehicle_ids:
            timeline = self.risk_timeline(vehicle_id, with_ttc=False)
            lane_changer = self.dataset.lane_changes.get(vehicle_id, False)
            for index, threshold in enumerate(thresholds):
                for event in first_events(detect_events(timeline, risk_kind, threshold)):
                    onset = timeline.frames[_frame_index(timeline, event.onset_frame)]
                    if not _matches_direction(onset, event.source_id, direction):
                        continue
                    value = _extreme_response(timeline, event.onset_t, lag, _response_attribute(risk_kind, direction))
                    if value is None:
                        continue
                    if exclude_lane_changers and lane_changer:
                        excluded[index] += 1
                        continue
                    records[index].append(ResponseRecord(
                        vehicle_id=vehicle_id, source_id=event.source_id, onset_t=event.onset_t, value=value,
                    ))

        return [
            d.model_copy(update={"records": r, "excluded_lane_changers": n})
            for d, r, n in zip(distributions, records, excluded)
        ]


def _frame_index(timeline: RiskTimeline, frame: int) -> int:
    return next(i for i, f in enumerate(timeline.frames) if f.frame == frame)


def _lead_id(frame: TimelineFrame) -> Optional[int]:
    """Nearest same-lane neighbor ahead of the ego"""
    ahead = [p for p in frame.pairs if p.same_lane and p.dx > 0]
    if not ahead:
        return None
    return min(ahead, key=lambda p: (p.dx, p.neighbor_id)).neighbor_id


def _matches_direction(frame: TimelineFrame, source_id: int, direction: ResponseDirection) -> bool:
    if direction == ResponseDirection.LONGITUDINAL:
        return _lead_id(frame) == source_id
    pair = frame.pair(source_id)
    # lateral sources must sit in another lane, whatever their center offset
    if pair is None or pair.same_lane:
        return False
    if direction == ResponseDirection.LATERAL_RIGHT:
        return pair.dy > 0
    return pair.dy < 0


def _response_attribute(risk_kind: RiskKind, direction: ResponseDirection) -> str:
    if direction == ResponseDirection.LONGITUDINAL:
        return "ax"
    return "ay" if risk_kind == RiskKind.O else "vy"


def _extreme_response(timeline: RiskTimeline, onset_t: float, lag: float, attribute: str) -> Optional[float]:
    window = [
        getattr(f, attribute) for f in timeline.frames
        if onset_t < f.t <= onset_t + lag + WINDOW_TOLERANCE
    ]
    if not window:
        return None
    return float(window[int(np.argmax(np.abs(window)))])


def _pair_risk(frame: TimelineFrame, source_id: int, risk_kind: RiskKind) -> float:
    pair = frame.pair(source_id)
    return 0.0 if pair is None else pair.risk(risk_kind)


def detect_events(timeline: RiskTimeline, risk_kind: RiskKind, threshold: Optional[float] = None,
                  min_duration: float = 0.0) -> List[ThresholdEvent]:
    """
    Maximal runs of consecutive frames in which one source's pair risk is at
    or above `threshold`. A run ends at the first frame back below the
    threshold (or without the source); runs reaching the end of the timeline
    close at its last timestamp.
    """
    threshold = settings.EVENT_THRESHOLD if threshold is None else threshold
    validate_threshold(threshold)
    times = timeline.times

    events = []
    for source_id in timeline.source_ids():
        risks = np.array([_pair_risk(frame, source_id, risk_kind) for frame in timeline.frames])
        above = risks >= threshold
        k = 0
        while k < above.size:
            if not above[k]:
                k += 1
                continue
            end = k
            while end < above.size and above[end]:
                end += 1
            stop_t = times[end] if end < above.size else times[-1]
            duration = float(stop_t - times[k])
            if duration >= min_duration:
                events.append(ThresholdEvent(
                    vehicle_id=timeline.vehicle_id,
                    source_id=source_id,
                    risk_kind=risk_kind,
                    threshold=threshold,
                    onset_t=float(times[k]),
                    onset_frame=timeline.frames[k].frame,
                    peak=float(risks[k:end].max()),
                    duration=duration,
                ))
            k = end
    events.sort(key=lambda e: (e.onset_t, e.source_id))
    return events


def first_events(events: Sequence[ThresholdEvent]) -> List[ThresholdEvent]:
    """Earliest event of every (vehicle, source) pair"""
    first: Dict[Tuple[int, int], ThresholdEvent] = {}
    for event in sorted(events, key=lambda e: e.onset_t):
        first.setdefault((event.vehicle_id, event.source_id), event)
    return sorted(first.values(), key=lambda e: (e.onset_t, e.source_id))


def risk_timeline(dataset: Dataset, vehicle_id: int, s_params: Optional[SFieldParams] = None,
                  o_params: Optional[OFieldParams] = None, window: Optional[float] = None,
                  lane_span: Optional[int] = None, with_ttc: bool = True) -> RiskTimeline:
    params = FieldParameterSet(s_field=s_params or SFieldParams(), o_field=o_params or OFieldParams())
    return RiskAssessor(dataset, params, window, lane_span).risk_timeline(vehicle_id, with_ttc)


def behavior_response(dataset: Dataset, risk_kind: RiskKind, direction: ResponseDirection,
                      thresholds: Sequence[float], lag: Optional[float] = None,
                      exclude_lane_changers: bool = True,
                      params: Optional[FieldParameterSet] = None) -> List[ResponseDistribution]:
    return RiskAssessor(dataset, params).behavior_response(
        risk_kind, direction, thresholds, lag, exclude_lane_changers
    )


def merge_distributions(groups: Sequence[Sequence[ResponseDistribution]]) -> List[ResponseDistribution]:
    """Pool per-recording distributions threshold by threshold."""
    if not groups:
        return []
    merged = []
    for parts in zip(*groups):
        merged.append(parts[0].model_copy(update={
            "records": [r for part in parts for r in part.records],
            "excluded_lane_changers": sum(part.excluded_lane_changers for part in parts),
        }))
    return merged


def assess_pair(ego: VehicleState, other: VehicleState, s_params: Optional[SFieldParams] = None,
                o_params: Optional[OFieldParams] = None, dt: Optional[float] = None,
                horizon: Optional[float] = None) -> PairAssessment:
    """S-risk, O-risk, closest approach and TTC of `other` as seen from `ego`."""
    s_params = s_params or SFieldParams()
    o_params = o_params or OFieldParams()
    gap = gap_vector(ego, other)
    cpa_result = pair_cpa(ego, other)
    return PairAssessment(
        s_risk=vehicle_proximity_risk(gap, *params_at_velocity(s_params, ego.speed)),
        o_risk=cpa_risk(cpa_result, o_params.collision_distance(ego.width, other.width), o_params),
        gap=gap,
        cpa=cpa_result,
        ttc=ttc_2d(ego, other, dt, horizon),
    )


def _axis(extent: float, resolution: float) -> np.ndarray:
    n = int(round(extent / resolution)) + 1
    return np.linspace(-0.5 * extent, 0.5 * extent, n)


def _objective_grid(ego: VehicleState, other: VehicleState, params: OFieldParams,
                    X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # copies of the ego sit at the grid cells, D points from each cell to `other`
    Dx, Dy = -X, -Y
    Vx, Vy = other.vx - ego.vx, other.vy - ego.vy
    vv = Vx * Vx + Vy * Vy
    closing = Dx * Vx + Dy * Vy
    d_star = params.collision_distance(ego.width, other.width)

    risk = np.zeros_like(X)
    approaching = closing < 0.0
    if vv > 0 and approaching.any():
        t_m = -closing[approaching] / vv
        d_m = np.abs(Dx[approaching] * Vy - Dy[approaching] * Vx) / math.sqrt(vv)
        risk[approaching] = np.exp(-(d_m / d_star) ** params.beta_p) * np.exp(-(t_m / params.t_star) ** params.beta_t)
    risk[(Dx == 0.0) & (Dy == 0.0)] = 1.0
    return risk


def rasterize_field(ego: VehicleState, field: RiskKind,
                    params: Union[FieldParameterSet, SFieldParams, OFieldParams, None] = None,
                    other: Optional[VehicleState] = None,
                    extent: Tuple[float, float] = (100.0, 20.0), resolution: float = 0.25) -> FieldGrid:
    """
    Field values on a regular grid around the vehicle that emits the field:
    the ego for the S-field, `other` for the O-field. The S-field value of a
    cell is the vehicle-proximity risk of a point at that cell, the gap being
    measured from the ego's box to the point. The O-field value of a cell is
    the risk `other` imposes on a copy of the ego (same velocity and width)
    centered at the cell.
    """
    field = RiskKind(field)
    extent_x, extent_y = extent
    if not resolution > 0:
        raise AnalysisError(f"Resolution must be positive, got {resolution}")
    if not (extent_x > 0 and extent_y > 0) or extent_x < resolution or extent_y < resolution:
        raise AnalysisError(f"Degenerate raster extent {extent_x}x{extent_y} at resolution {resolution}")

    xs = _axis(extent_x, resolution)
    ys = _axis(extent_y, resolution)
    X, Y = np.meshgrid(xs, ys)

    if field == RiskKind.S:
        s_params = params.s_field if isinstance(params, FieldParameterSet) else (params or SFieldParams())
        if not isinstance(s_params, SFieldParams):
            raise AnalysisError("S-field rasterization needs S-field parameters")
        gamma_x, beta_x, gamma_y, beta_y = params_at_velocity(s_params, ego.speed)
        dx = np.maximum(0.0, np.abs(X) - 0.5 * ego.length)
        dy = np.maximum(0.0, np.abs(Y) - 0.5 * ego.width)
        values = ggd_kernel(dx, gamma_x, beta_x) * ggd_kernel(dy, gamma_y, beta_y)
    else:
        if other is None:
            raise AnalysisError("O-field rasterization needs an influencing vehicle")
        o_params = params.o_field if isinstance(params, FieldParameterSet) else (params or OFieldParams())
        if not isinstance(o_params, OFieldParams):
            raise AnalysisError("O-field rasterization needs O-field parameters")
        values = _objective_grid(ego, other, o_params, X, Y)

    return FieldGrid(field=field, xs=xs, ys=ys, values=np.clip(values, 0.0, 1.0))


def _preset_state(vehicle_id: int, vx: float, vy: float = 0.0, x: float = 0.0, y: float = 0.0) -> VehicleState:
    return VehicleState(vehicle_id=vehicle_id, frame=0, t=0.0, x=x, y=y, vx=vx, vy=vy, length=4.5, width=1.9)


# (ego, influencing vehicle) pairs of the shipped O-field scenarios
O_FIELD_PRESETS: Dict[str, Tuple[VehicleState, VehicleState]] = {
    "car-following-2": (_preset_state(1, 22.0), _preset_state(2, 20.0)),
    "car-following-5": (_preset_state(1, 25.0), _preset_state(2, 20.0)),
    "side-swipe": (_preset_state(1, 20.0), _preset_state(2, 20.0, vy=-1.0, y=3.75)),
    "lane-change": (_preset_state(1, 22.0), _preset_state(2, 20.0, vy=1.0, y=-3.75)),
}


def o_field_preset(name: str) -> Tuple[VehicleState, VehicleState]:
    if name not in O_FIELD_PRESETS:
        raise AnalysisError(f"Unknown O-field preset {name!r}; choose from {sorted(O_FIELD_PRESETS)}")
    return O_FIELD_PRESETS[name]
