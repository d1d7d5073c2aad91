from collections import defaultdict
from typing import Dict, Iterator, List, Optional, Tuple

from app.config import settings
from app.models.dataset import Dataset
from app.models.trajectory import DrivingDirection, SceneFrame, VehicleState
from app.services.geometry import select_neighbors
from app.utils.exceptions import AnalysisError


class SceneBuilder:
    """
    Frame index over a Dataset that builds the perceived scene of any
    vehicle at any of its frames. Vehicles of the other carriageway are
    never perceived.
    """

    def __init__(self, dataset: Dataset, window: Optional[float] = None, lane_span: Optional[int] = None):
        self.dataset = dataset
        self.window = settings.PERCEPTION_WINDOW if window is None else window
        self.lane_span = settings.LANE_SPAN if lane_span is None else lane_span

        index: Dict[Tuple[DrivingDirection, int], List[VehicleState]] = defaultdict(list)
        for vehicle_id in dataset.vehicle_ids:
            direction = dataset.direction_of(vehicle_id)
            for state in dataset.tracks[vehicle_id]:
                index[(direction, state.frame)].append(state)
        self._index = dict(index)

    def states_at(self, vehicle_id: int, frame: int) -> List[VehicleState]:
        return self._index.get((self.dataset.direction_of(vehicle_id), frame), [])

    def track(self, vehicle_id: int) -> List[VehicleState]:
        if vehicle_id not in self.dataset.tracks:
            raise AnalysisError(f"Vehicle {vehicle_id} is not present in recording {self.dataset.meta.recording_id}")
        return self.dataset.tracks[vehicle_id]

    def scene(self, state: VehicleState) -> SceneFrame:
        return select_neighbors(
            self.states_at(state.vehicle_id, state.frame),
            state.vehicle_id,
            window=self.window,
            lane_span=self.lane_span,
            lanes=self.dataset.lanes_for(state.vehicle_id),
        )

    def scenes(self, vehicle_id: int) -> Iterator[SceneFrame]:
        for state in self.track(vehicle_id):
            yield self.scene(state)
