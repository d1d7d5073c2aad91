import random

import pytest

from app.models.trajectory import DrivingDirection, LaneGeometry
from app.services.geometry import center_vector, gap_vector, nearest_lines, normalize_track, select_neighbors
from app.utils.exceptions import TrajectoryError


def test_gap_vector_longitudinal(make_state):
    """Centers 20 m apart with 4 m lengths leave 16 m of clearance"""
    ego = make_state(1, x=0.0, length=4.0)
    other = make_state(2, x=20.0, length=4.0)
    gap = gap_vector(ego, other)
    assert gap.dx == pytest.approx(16.0)
    assert gap.dy == 0.0


def test_gap_vector_overlap_is_zero(make_state):
    ego = make_state(1, x=10.0, y=1.0)
    other = make_state(2, x=11.0, y=1.5)
    gap = gap_vector(ego, other)
    assert gap.dx == 0.0
    assert gap.dy == 0.0


def test_gap_vector_lateral(make_state):
    ego = make_state(1, y=0.0, width=2.0)
    other = make_state(2, y=3.5, width=2.0)
    assert gap_vector(ego, other).dy == pytest.approx(1.5)


def test_gap_vector_sign_flips(make_state):
    rng = random.Random(3)
    for _ in range(50):
        a = make_state(1, x=rng.uniform(-50, 50), y=rng.uniform(-5, 5))
        b = make_state(2, x=rng.uniform(-50, 50), y=rng.uniform(-5, 5), length=rng.uniform(3, 12))
        ab, ba = gap_vector(a, b), gap_vector(b, a)
        assert ab.dx == pytest.approx(-ba.dx)
        assert ab.dy == pytest.approx(-ba.dy)
    assert gap_vector(a, a).dx == 0.0 and gap_vector(a, a).dy == 0.0


def test_gap_vector_rejects_mismatched_frames(make_state):
    with pytest.raises(TrajectoryError):
        gap_vector(make_state(1, frame=0), make_state(2, frame=1))


def test_center_vector(make_state):
    ego = make_state(1, x=100.0, vx=30.0)
    other = make_state(2, x=120.0, vx=25.0)
    c = center_vector(ego, other)
    assert (c.dx, c.dy, c.dvx, c.dvy) == (20.0, 0.0, -5.0, 0.0)

    neighbor = make_state(3, x=100.0, y=3.7)
    c = center_vector(ego, neighbor)
    assert c.dx == 0.0 and c.dy == pytest.approx(3.7)

    same = center_vector(ego, ego)
    assert (same.dx, same.dy, same.dvx, same.dvy) == (0.0, 0.0, 0.0, 0.0)


def test_normalize_track_mirrors_leftward(make_state):
    track = [make_state(5, x=300.0 - 1.2 * k, y=8.0, vx=-30.0, vy=0.4, frame=k, ax=-0.2) for k in range(3)]
    canonical = normalize_track(track, DrivingDirection.LEFTWARD)
    assert all(s.vx == 30.0 for s in canonical)
    assert all(s.x > canonical[0].x - 1e-9 for s in canonical)
    for before, after in zip(track, canonical):
        assert after.speed == pytest.approx(before.speed)
        assert after.y == -before.y
        assert after.ax == -before.ax


def test_normalize_track_is_idempotent(make_state):
    track = [make_state(5, x=-1.2 * k, vx=-30.0, frame=k) for k in range(3)]
    once = normalize_track(track)
    assert normalize_track(once) == once
    assert normalize_track(once, DrivingDirection.LEFTWARD) == once


def test_normalize_track_preconditions(make_state):
    with pytest.raises(TrajectoryError):
        normalize_track([])
    with pytest.raises(TrajectoryError):
        normalize_track([make_state(1, frame=0), make_state(2, frame=1)])
    with pytest.raises(TrajectoryError):
        normalize_track([make_state(1, frame=2), make_state(1, frame=1)])


def test_select_neighbors_window_and_lanes(make_state):
    ego = make_state(1, x=0.0, lane_id=2)
    far_ahead = make_state(2, x=150.0, lane_id=2)
    adjacent_behind = make_state(3, x=-10.0, lane_id=3)
    two_lanes_away = make_state(4, x=5.0, lane_id=4)
    scene = select_neighbors([ego, far_ahead, adjacent_behind, two_lanes_away], 1, window=100.0, lane_span=1)
    assert [s.vehicle_id for s in scene.neighbors] == [3]


def test_select_neighbors_alone_and_missing_ego(make_state):
    assert select_neighbors([make_state(1)], 1).neighbors == []
    with pytest.raises(TrajectoryError):
        select_neighbors([make_state(1)], 9)


def test_select_neighbors_ignores_input_order(make_state):
    states = [make_state(i, x=10.0 * i, lane_id=i % 2) for i in range(1, 8)]
    shuffled = list(states)
    random.Random(0).shuffle(shuffled)
    assert select_neighbors(states, 3) == select_neighbors(shuffled, 3)


def test_nearest_lines():
    lanes = LaneGeometry(marker_ys=[13.75, 17.5], boundary_ys=[10.0, 21.25])
    markers, boundaries = nearest_lines(15.625, lanes)
    assert markers == [pytest.approx(1.875), pytest.approx(1.875)]
    assert boundaries == [pytest.approx(5.625)]

    markers, boundaries = nearest_lines(11.875, lanes)
    assert markers == [pytest.approx(1.875)]
    assert boundaries == [pytest.approx(1.875)]
