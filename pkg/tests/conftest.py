import pytest
import tempfile
from pathlib import Path
import pandas as pd

from app.models.trajectory import VehicleState
from app.services.fixture_generator import synthesize_fixture

@pytest.fixture
def temp_dir():
    """Create temporary directory for tests"""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)

@pytest.fixture
def make_state():
    """Factory for canonical vehicle states at frame 0"""
    def _make(vehicle_id=1, x=0.0, y=0.0, vx=0.0, vy=0.0, length=4.0, width=2.0, lane_id=0, frame=0, **extra):
        return VehicleState(
            vehicle_id=vehicle_id, frame=frame, t=frame / 25.0,
            x=x, y=y, vx=vx, vy=vy, length=length, width=width, lane_id=lane_id, **extra
        )
    return _make

@pytest.fixture(scope="session")
def stop_and_go():
    """Leader (id 1) braking twice in front of a follower (id 2)"""
    return synthesize_fixture("stop_and_go", seed=0)

@pytest.fixture(scope="session")
def lateral_drift():
    """Slowly passing neighbor (id 2) drifting towards the ego (id 1), which steers away"""
    return synthesize_fixture("lateral_drift", seed=0)

@pytest.fixture(scope="session")
def lane_change_abort():
    """Ego (id 1) aborting a lane change, intruder (id 2) in the target lane"""
    return synthesize_fixture("lane_change_abort", seed=0)

@pytest.fixture
def highd_files(temp_dir):
    """Minimal highD recording: one rightward and one leftward vehicle"""
    tracks = pd.DataFrame([
        # frame, id, x, y, width, height, xVelocity, yVelocity, xAcceleration, yAcceleration, laneId
        [1, 1, 100.0, 20.0, 4.0, 2.0, 30.0, 0.0, 0.0, 0.0, 5],
        [2, 1, 101.2, 20.0, 4.0, 2.0, 30.0, 0.0, 0.0, 0.0, 5],
        [1, 2, 300.0, 8.0, 5.0, 2.0, -25.0, 0.5, -0.1, 0.0, 2],
        [2, 2, 299.0, 8.02, 5.0, 2.0, -25.0, 0.5, -0.1, 0.0, 2],
    ], columns=["frame", "id", "x", "y", "width", "height", "xVelocity", "yVelocity",
                "xAcceleration", "yAcceleration", "laneId"])
    meta = pd.DataFrame([{
        "id": 7,
        "frameRate": 25,
        "upperLaneMarkings": "4.0;7.5;11.0",
        "lowerLaneMarkings": "16.0;19.5;23.0",
        "segmentLength": 420.0,
    }])
    tracks_path = temp_dir / "07_tracks.csv"
    meta_path = temp_dir / "07_recordingMeta.csv"
    tracks.to_csv(tracks_path, index=False)
    meta.to_csv(meta_path, index=False)
    return tracks_path, meta_path
