"""
Synthetic highD-style recordings built from scripted maneuvers.

Every vehicle follows a piecewise-constant acceleration script sampled on
the frame grid; velocities and positions are integrated exactly for that
script, so accelerations, velocities and positions of a fixture are
mutually consistent. Fixtures live on the rightward (canonical) carriageway.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from app.config import settings
from app.models.dataset import Dataset, RecordingMeta
from app.models.trajectory import DrivingDirection, VehicleState
from app.utils.exceptions import FixtureError
from app.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_LENGTH = 4.5
DEFAULT_WIDTH = 1.9
FIRST_LINE_Y = 10.0


@dataclass
class Segment:
    start: float
    end: float
    ax: float = 0.0
    ay: float = 0.0

    def shifted(self, delay: float) -> "Segment":
        return Segment(self.start + delay, self.end + delay, self.ax, self.ay)


@dataclass
class VehicleScript:
    """Initial state plus acceleration segments of one synthetic vehicle"""
    x0: float
    y0: float
    vx0: float
    vy0: float = 0.0
    length: float = DEFAULT_LENGTH
    width: float = DEFAULT_WIDTH
    segments: List[Segment] = field(default_factory=list)


@dataclass
class Road:
    lane_count: int
    lane_width: float

    @property
    def lines(self) -> List[float]:
        return [FIRST_LINE_Y + k * self.lane_width for k in range(self.lane_count + 1)]

    @property
    def markers(self) -> List[float]:
        return self.lines[1:-1]

    @property
    def boundaries(self) -> List[float]:
        return [self.lines[0], self.lines[-1]]

    def center(self, lane: int) -> float:
        if not 1 <= lane <= self.lane_count:
            raise FixtureError(f"Lane {lane} outside 1..{self.lane_count}")
        return FIRST_LINE_Y + (lane - 0.5) * self.lane_width

    def lane_of(self, y: np.ndarray) -> np.ndarray:
        """1-based lane index, lane 1 being the leftmost in the driving direction."""
        return 1 + np.searchsorted(np.asarray(self.markers), y, side="right")


def _param(params: dict, key: str, default=None, kind: Callable = float):
    value = params.get(key, default)
    if value is None:
        raise FixtureError(f"Missing maneuver parameter '{key}'")
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise FixtureError(f"Invalid value for maneuver parameter '{key}': {value!r}")


def car_following(params: dict, road: Road, rng: np.random.Generator) -> List[VehicleScript]:
    """
    Leader and follower in one lane. Each phase brakes the leader for
    `brake_duration` seconds and then accelerates it back to its initial
    speed; the follower replays the leader's acceleration after
    `reaction_time`, which produces one approach per phase.
    """
    lane = _param(params, "lane", 1, int)
    speed = _param(params, "speed", 20.0)
    gap = _param(params, "gap", 15.0)
    reaction = _param(params, "reaction_time", 1.2)
    x0 = _param(params, "x0", 20.0)

    leader_segments = []
    for phase in params.get("phases", []):
        start = _param(phase, "start")
        brake = _param(phase, "brake", -3.0)
        brake_duration = _param(phase, "brake_duration", 2.5)
        recover = _param(phase, "recover", 1.5)
        if brake >= 0 or recover <= 0 or brake_duration <= 0:
            raise FixtureError("A car-following phase needs brake < 0, recover > 0 and brake_duration > 0")
        recover_start = start + brake_duration
        recover_end = recover_start - brake * brake_duration / recover
        leader_segments += [Segment(start, recover_start, ax=brake), Segment(recover_start, recover_end, ax=recover)]

    y = road.center(lane)
    follower = VehicleScript(x0=x0, y0=y, vx0=speed, segments=[s.shifted(reaction) for s in leader_segments])
    leader = VehicleScript(x0=x0 + DEFAULT_LENGTH + gap, y0=y, vx0=speed, segments=leader_segments)
    return [leader, follower]


def _lateral_pulse(start: float, ramp: float, hold: float, accel: float) -> List[Segment]:
    """Ramp lateral speed up to accel*ramp, hold it, ramp back down to zero."""
    return [
        Segment(start, start + ramp, ay=accel),
        Segment(start + ramp + hold, start + 2 * ramp + hold, ay=-accel),
    ]


def lane_change_abort(params: dict, road: Road, rng: np.random.Generator) -> List[VehicleScript]:
    """
    Ego starts a lane change towards `side`, crosses the marker and returns
    to its original lane because a faster vehicle approaches in the target
    lane from behind.
    """
    lane = _param(params, "lane", 1, int)
    side = params.get("side", "right")
    if side not in ("left", "right"):
        raise FixtureError(f"side must be 'left' or 'right', got {side!r}")
    sign = 1.0 if side == "right" else -1.0
    target = lane + (1 if side == "right" else -1)

    speed = _param(params, "speed", 25.0)
    start = _param(params, "start", 4.0)
    accel = _param(params, "lateral_accel", 0.8)
    ramp = _param(params, "ramp", 1.6)
    x0 = _param(params, "x0", 60.0)

    # +a for ramp, -a for 2*ramp, +a for ramp: out to accel*ramp^2 and back
    ego = VehicleScript(x0=x0, y0=road.center(lane), vx0=speed, segments=[
        Segment(start, start + ramp, ay=sign * accel),
        Segment(start + ramp, start + 3 * ramp, ay=-sign * accel),
        Segment(start + 3 * ramp, start + 4 * ramp, ay=sign * accel),
    ])
    intruder = VehicleScript(
        x0=x0 - _param(params, "intruder_offset", 50.0),
        y0=road.center(target),
        vx0=speed + _param(params, "intruder_relative_speed", 6.0),
    )
    return [ego, intruder]


def lateral_drift_pass(params: dict, road: Road, rng: np.random.Generator) -> List[VehicleScript]:
    """
    A neighbor passes slowly in the adjacent lane. Once alongside it drifts
    towards the ego within its own lane, dwells and drifts back; the ego
    steers away from it `response_delay` seconds after the drift starts and
    returns to its lane center later. The lateral clearance shrinks without
    any collision course.
    """
    lane = _param(params, "lane", 1, int)
    neighbor_lane = _param(params, "neighbor_lane", lane + 1, int)
    speed = _param(params, "speed", 25.0)
    relative_speed = _param(params, "relative_speed", 1.0)
    offset = _param(params, "neighbor_offset", 10.0)
    accel = _param(params, "drift_accel", 0.3)
    ramp = _param(params, "ramp", 1.0)
    hold = _param(params, "hold", 2.67)
    dwell = _param(params, "dwell", 3.0)
    response_delay = _param(params, "response_delay", 2.5)
    response_accel = _param(params, "response_accel", accel)
    response_hold = _param(params, "response_hold", 1.0)
    x0 = _param(params, "x0", 60.0)
    if relative_speed <= 0:
        raise FixtureError("relative_speed must be positive so the neighbor passes")
    if abs(neighbor_lane - lane) != 1:
        raise FixtureError(f"neighbor_lane {neighbor_lane} is not adjacent to lane {lane}")

    # +1 when the neighbor is on the ego's right
    side = 1.0 if neighbor_lane > lane else -1.0
    start = _param(params, "drift_start", offset / relative_speed)
    back = start + 2 * ramp + hold + dwell
    neighbor = VehicleScript(
        x0=x0 - offset, y0=road.center(neighbor_lane), vx0=speed + relative_speed,
        segments=_lateral_pulse(start, ramp, hold, -side * accel) + _lateral_pulse(back, ramp, hold, side * accel),
    )

    response = start + response_delay
    ego_back = response + 2 * ramp + response_hold + dwell
    ego = VehicleScript(
        x0=x0, y0=road.center(lane), vx0=speed,
        segments=(_lateral_pulse(response, ramp, response_hold, -side * response_accel)
                  + _lateral_pulse(ego_back, ramp, response_hold, side * response_accel)),
    )
    return [ego, neighbor]


def _oscillation(accel: float, block: float, phase: float, duration: float, axis: str) -> List[Segment]:
    """Zero-mean +a, -a, -a, +a blocks on one axis, starting `phase` seconds into the cycle."""
    segments = []
    t = -phase
    while t < duration:
        for k, a in enumerate((accel, -accel, -accel, accel)):
            lo, hi = t + k * block, t + (k + 1) * block
            if hi > 0:
                segments.append(Segment(max(lo, 0.0), hi, **{axis: a}))
        t += 4 * block
    return segments


def free_flow(params: dict, road: Road, rng: np.random.Generator) -> List[VehicleScript]:
    """
    Platoons on every lane around a per-lane speed.

    Gaps come from `headway_range` (meters) or, when given, from
    `time_headway_range` (seconds, times the vehicle's speed). Per-vehicle
    speed offsets within +-`speed_spread` are sorted so that no vehicle
    is faster than the one ahead of it. Each vehicle gets a zero-mean speed
    oscillation and, with `wander_accel` > 0, a zero-mean lateral wander
    around a center offset drawn within +-`lateral_offset`.
    """
    per_lane = _param(params, "vehicles_per_lane", 8, int)
    speeds = params.get("lane_speeds") or [20.0] * road.lane_count
    if len(speeds) != road.lane_count:
        raise FixtureError(f"lane_speeds needs {road.lane_count} entries, got {len(speeds)}")
    headway_lo, headway_hi = params.get("headway_range", [15.0, 50.0])
    time_headway = params.get("time_headway_range")
    spread = _param(params, "speed_spread", 0.0)
    accel = _param(params, "oscillation_accel", 0.3)
    block = _param(params, "oscillation_block", 2.0)
    lateral_offset = _param(params, "lateral_offset", 0.0)
    wander_accel = _param(params, "wander_accel", 0.0)
    wander_block = _param(params, "wander_block", 2.5)
    duration = _param(params, "duration", 0.0)

    # wander blocks are stretched by up to 25 %, the widest excursion is a * (1.25 b)^2
    excursion = lateral_offset + wander_accel * (1.25 * wander_block) ** 2
    if excursion >= 0.5 * road.lane_width:
        raise FixtureError(f"Lateral excursion {excursion:.2f} m would leave a {road.lane_width} m lane")

    scripts = []
    for lane, lane_speed in enumerate(speeds, start=1):
        x = _param(params, "x0", 0.0)
        # rear to front, slowest first
        offsets = np.sort(rng.uniform(-spread, spread, per_lane))
        for offset in offsets:
            speed = float(lane_speed) + float(offset)
            if time_headway is not None:
                gap = speed * rng.uniform(*time_headway)
            else:
                gap = rng.uniform(headway_lo, headway_hi)
            x += DEFAULT_LENGTH + gap
            # either half of the cycle, so every vehicle keeps a zero mean speed offset
            phase = float(rng.integers(0, 2)) * 2 * block
            segments = _oscillation(accel, block, phase, duration, "ax")
            y0 = road.center(lane) + rng.uniform(-lateral_offset, lateral_offset)
            if wander_accel > 0:
                sign = float(rng.choice([-1.0, 1.0]))
                stretch = wander_block * rng.uniform(0.75, 1.25)
                segments += _oscillation(sign * wander_accel, stretch, 0.0, duration, "ay")
            scripts.append(VehicleScript(x0=x, y0=y0, vx0=speed, segments=segments))
    return scripts


MANEUVERS: Dict[str, Callable[[dict, Road, np.random.Generator], List[VehicleScript]]] = {
    "car_following": car_following,
    "lane_change_abort": lane_change_abort,
    "lateral_drift_pass": lateral_drift_pass,
    "free_flow": free_flow,
}


class FixtureGenerator:
    """Turns a scenario document into a Dataset"""

    def __init__(self, seed: Optional[int] = None):
        self.logger = logger
        self.seed = settings.RANDOM_SEED if seed is None else seed

    def _integrate(self, script: VehicleScript, times: np.ndarray, dt: float) -> Tuple[np.ndarray, ...]:
        ax = np.zeros(times.size)
        ay = np.zeros(times.size)
        eps = 1e-9
        for segment in script.segments:
            active = (times >= segment.start - eps) & (times < segment.end - eps)
            ax[active] += segment.ax
            ay[active] += segment.ay

        def integrate(p0: float, v0: float, a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
            v = v0 + np.concatenate(([0.0], np.cumsum(a[:-1] * dt)))
            step = v[:-1] * dt + 0.5 * a[:-1] * dt ** 2
            p = p0 + np.concatenate(([0.0], np.cumsum(step)))
            return p, v

        x, vx = integrate(script.x0, script.vx0, ax)
        y, vy = integrate(script.y0, script.vy0, ay)
        return x, y, vx, vy, ax, ay

    def generate(self, scenario: dict) -> Dataset:
        try:
            frame_rate = float(scenario.get("frame_rate", 25.0))
            duration = float(scenario.get("duration_s", 30.0))
            lanes = scenario.get("lanes", {})
            road = Road(int(lanes.get("count", 3)), float(lanes.get("width", 3.75)))
        except (TypeError, ValueError, AttributeError) as e:
            raise FixtureError(f"Malformed scenario document: {e}")
        if frame_rate <= 0 or duration <= 0 or road.lane_count < 1 or road.lane_width <= 0:
            raise FixtureError("frame_rate, duration_s, lane count and lane width must be positive")

        rng = np.random.default_rng(self.seed)
        position_std = float(scenario.get("noise", {}).get("position_std", 0.0))
        n_frames = int(round(duration * frame_rate)) + 1
        frames = np.arange(n_frames)
        times = frames / frame_rate
        dt = 1.0 / frame_rate

        scripts: List[VehicleScript] = []
        for maneuver in scenario.get("maneuvers", []):
            kind = maneuver.get("type")
            if kind not in MANEUVERS:
                raise FixtureError(f"Unknown maneuver type: {kind!r}")
            params = dict(maneuver.get("params", {}))
            params.setdefault("duration", duration)
            created = MANEUVERS[kind](params, road, rng)
            self.logger.debug(f"Maneuver {kind}: {len(created)} vehicles")
            scripts.extend(created)

        tracks: Dict[int, List[VehicleState]] = {}
        lane_changes: Dict[int, bool] = {}
        for vehicle_id, script in enumerate(scripts, start=1):
            x, y, vx, vy, ax, ay = self._integrate(script, times, dt)
            lane_ids = road.lane_of(y)
            if position_std > 0:
                x = x + rng.normal(0.0, position_std, x.size)
                y = y + rng.normal(0.0, position_std, y.size)
            tracks[vehicle_id] = [
                VehicleState(
                    vehicle_id=vehicle_id, frame=int(frames[k]), t=float(times[k]),
                    x=float(x[k]), y=float(y[k]), vx=float(vx[k]), vy=float(vy[k]),
                    ax=float(ax[k]), ay=float(ay[k]),
                    length=script.length, width=script.width, lane_id=int(lane_ids[k]),
                )
                for k in range(n_frames)
            ]
            lane_changes[vehicle_id] = bool(np.unique(lane_ids).size > 1)

        meta = RecordingMeta(
            recording_id=int(scenario.get("recording_id", 1)),
            frame_rate=frame_rate,
            lane_marker_ys={DrivingDirection.RIGHTWARD: road.markers},
            boundary_ys={DrivingDirection.RIGHTWARD: road.boundaries},
        )
        directions = {vehicle_id: DrivingDirection.RIGHTWARD for vehicle_id in tracks}
        self.logger.info(f"🧪 Synthesized {len(tracks)} vehicles over {n_frames} frames")
        return Dataset(meta=meta, tracks=tracks, lane_changes=lane_changes, directions=directions)


def load_scenario(source: Union[str, Path, dict]) -> dict:
    """Scenario document from a dict, a JSON path or a bundled fixture name."""
    if isinstance(source, dict):
        return source
    path = Path(source)
    if not path.exists():
        bundled = Path(settings.FIXTURES_DIR) / f"{path.stem}.json"
        if not bundled.exists():
            raise FixtureError(f"Scenario not found: {source}")
        path = bundled
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise FixtureError(f"Cannot read scenario {path}: {e}")


def synthesize_fixture(source: Union[str, Path, dict], seed: Optional[int] = None) -> Dataset:
    """Generate the Dataset described by a scenario document; same seed, same Dataset."""
    return FixtureGenerator(seed).generate(load_scenario(source))
