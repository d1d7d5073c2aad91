import math

import numpy as np
import pytest

from app.models.analysis import (
    PairRisk,
    ResponseDirection,
    ResponseDistribution,
    ResponseRecord,
    RiskKind,
    RiskTimeline,
    TimelineFrame,
)
from app.models.fields import SFieldParams
from app.services.analysis import (
    RiskAssessor,
    assess_pair,
    behavior_response,
    detect_events,
    first_events,
    merge_distributions,
    o_field_preset,
    rasterize_field,
    risk_timeline,
)
from app.services.fixture_generator import synthesize_fixture
from app.services.s_field import params_at_velocity
from app.utils.exceptions import AnalysisError

E_INV = math.exp(-1)


def _timeline(risks, source_id=5, dt=0.1):
    frames = [
        TimelineFrame(
            frame=k, t=k * dt, s_risk=r, o_risk=r,
            pairs=[PairRisk(neighbor_id=source_id, r_s=r, r_o=r, t_m=1.0, d_m=0.0)],
        )
        for k, r in enumerate(risks)
    ]
    return RiskTimeline(vehicle_id=1, frames=frames)


def test_isolated_vehicle_has_no_risk():
    scenario = {
        "duration_s": 2,
        "lanes": {"count": 1},
        "maneuvers": [{"type": "free_flow", "params": {"vehicles_per_lane": 1, "lane_speeds": [20.0]}}],
    }
    dataset = synthesize_fixture(scenario)
    timeline = risk_timeline(dataset, 1, s_params=SFieldParams().without_lane_terms())
    assert len(timeline.frames) == 51
    assert all(f.s_risk == 0.0 and f.o_risk == 0.0 and f.ttci == 0.0 for f in timeline.frames)
    assert all(not f.pairs for f in timeline.frames)


def test_steady_lead_imposes_no_objective_risk():
    dataset = synthesize_fixture({"duration_s": 2, "maneuvers": [{"type": "car_following", "params": {"lane": 2}}]})
    timeline = risk_timeline(dataset, 2)
    assert (timeline.series(RiskKind.O) == 0.0).all()
    assert (timeline.series(RiskKind.S) > 0.0).all()


def test_stop_and_go_objective_peaks(stop_and_go):
    timeline = RiskAssessor(stop_and_go).risk_timeline(2, with_ttc=False)
    times = timeline.times
    o_risk = timeline.series(RiskKind.O)

    approaching = ((times > 3.0) & (times < 6.4)) | ((times > 14.0) & (times < 17.4))
    assert (o_risk[~approaching] == 0.0).all()

    for lo, hi, expected_peak in ((0.0, 12.0, 5.5), (12.0, 25.0, 16.5)):
        phase = (times >= lo) & (times < hi)
        peak_t = times[phase][int(np.argmax(o_risk[phase]))]
        assert peak_t == pytest.approx(expected_peak, abs=0.5)
        assert o_risk[phase].max() == pytest.approx(math.exp(-(3.52 / 7.5) ** 2), abs=0.02)


def test_stop_and_go_leader_sees_the_same_risk(stop_and_go):
    assessor = RiskAssessor(stop_and_go)
    leader = assessor.risk_timeline(1, with_ttc=False).series(RiskKind.O)
    follower = assessor.risk_timeline(2, with_ttc=False).series(RiskKind.O)
    np.testing.assert_allclose(leader, follower, atol=1e-12)


def test_timeline_is_cached(stop_and_go):
    assessor = RiskAssessor(stop_and_go)
    assert assessor.risk_timeline(1, with_ttc=False) is assessor.risk_timeline(1, with_ttc=False)


def test_unknown_vehicle(stop_and_go):
    with pytest.raises(AnalysisError):
        RiskAssessor(stop_and_go).risk_timeline(99)


def test_lateral_drift_is_seen_only_by_the_subjective_field(lateral_drift):
    timeline = RiskAssessor(lateral_drift).risk_timeline(1)
    assert timeline.series(RiskKind.S).max() > E_INV
    assert timeline.series(RiskKind.O).max() < 0.01
    assert all(f.ttci == 0.0 for f in timeline.frames)

    before_drift = timeline.times < 10.0
    assert timeline.series(RiskKind.S)[before_drift].max() < E_INV


def test_detect_events_examples():
    assert detect_events(_timeline([0.1] * 30), RiskKind.O, 0.5) == []

    once = detect_events(_timeline([0.1] * 10 + [0.8] * 10 + [0.1] * 10), RiskKind.O, 0.5)
    assert len(once) == 1
    event = once[0]
    assert (event.vehicle_id, event.source_id) == (1, 5)
    assert event.onset_t == pytest.approx(1.0)
    assert event.onset_frame == 10
    assert event.duration == pytest.approx(1.0)
    assert event.peak == 0.8

    twice = detect_events(_timeline([0.1] * 5 + [0.6] * 5 + [0.1] * 5 + [0.9] * 5), RiskKind.S, 0.5)
    assert [e.onset_frame for e in twice] == [5, 15]
    # the last run is closed by the end of the timeline
    assert twice[1].duration == pytest.approx(0.4)
    assert [e.onset_frame for e in first_events(twice)] == [5]


def test_detect_events_min_duration_and_threshold():
    timeline = _timeline([0.1, 0.7, 0.1] + [0.7] * 10 + [0.1])
    assert len(detect_events(timeline, RiskKind.O, 0.5)) == 2
    assert len(detect_events(timeline, RiskKind.O, 0.5, min_duration=0.5)) == 1
    with pytest.raises(AnalysisError):
        detect_events(timeline, RiskKind.O, 1.0)


def test_braking_response(stop_and_go):
    low, high = behavior_response(stop_and_go, RiskKind.O, ResponseDirection.LONGITUDINAL, [0.3, 0.5])
    assert low.count == 1
    record = low.records[0]
    # only the follower has a lead vehicle
    assert (record.vehicle_id, record.source_id) == (2, 1)
    assert record.value == pytest.approx(-3.0)
    assert low.mean < 0
    assert low.excluded_lane_changers == 0

    keys = lambda d: {(r.vehicle_id, r.source_id) for r in d.records}
    assert keys(high) <= keys(low)


def test_no_events_gives_empty_distribution(stop_and_go):
    (dist,) = behavior_response(stop_and_go, RiskKind.O, ResponseDirection.LONGITUDINAL, [0.99])
    assert dist.count == 0
    assert dist.mean is None
    assert dist.histogram() == {"edges": [], "counts": []}


def test_lane_changers_are_excluded(stop_and_go):
    everyone_changes = stop_and_go.model_copy(update={"lane_changes": {1: True, 2: True}})
    (dist,) = behavior_response(everyone_changes, RiskKind.O, ResponseDirection.LONGITUDINAL, [0.3])
    assert dist.count == 0
    assert dist.excluded_lane_changers == 1

    (kept,) = behavior_response(everyone_changes, RiskKind.O, ResponseDirection.LONGITUDINAL, [0.3],
                                exclude_lane_changers=False)
    assert kept.count == 1


def test_lateral_drift_response_steers_away_from_the_source(lateral_drift):
    (right,) = behavior_response(lateral_drift, RiskKind.S, ResponseDirection.LATERAL_RIGHT, [E_INV])
    assert right.count == 1
    record = right.records[0]
    assert (record.vehicle_id, record.source_id) == (1, 2)
    # the source is on the right (+y), so the response heads left
    assert -0.3 <= record.value < 0.0

    (left,) = behavior_response(lateral_drift, RiskKind.S, ResponseDirection.LATERAL_LEFT, [E_INV])
    assert {r.vehicle_id for r in left.records} <= {2}


def test_lateral_studies_ignore_off_center_same_lane_leads(stop_and_go):
    shifted_leader = [state.model_copy(update={"y": state.y + 0.2}) for state in stop_and_go.tracks[1]]
    shifted = stop_and_go.model_copy(update={"tracks": {**stop_and_go.tracks, 1: shifted_leader}})
    assert {s.lane_id for s in shifted.tracks[1]} == {s.lane_id for s in shifted.tracks[2]}

    (right,) = behavior_response(shifted, RiskKind.O, ResponseDirection.LATERAL_RIGHT, [0.3])
    (left,) = behavior_response(shifted, RiskKind.O, ResponseDirection.LATERAL_LEFT, [0.3])
    assert right.count == 0
    assert left.count == 0

    (braking,) = behavior_response(shifted, RiskKind.O, ResponseDirection.LONGITUDINAL, [0.3])
    assert braking.count == 1


def test_behavior_response_rejects_unsorted_thresholds(stop_and_go):
    with pytest.raises(AnalysisError):
        RiskAssessor(stop_and_go).behavior_response(RiskKind.O, ResponseDirection.LONGITUDINAL, [0.5, 0.3])


def test_merge_distributions():
    record = ResponseRecord(vehicle_id=1, source_id=2, onset_t=0.0, value=-1.0)
    part = ResponseDistribution(threshold=0.3, lag=1.0, direction=ResponseDirection.LONGITUDINAL,
                                risk_kind=RiskKind.O, records=[record], excluded_lane_changers=2)
    (merged,) = merge_distributions([[part], [part]])
    assert merged.count == 2
    assert merged.excluded_lane_changers == 4
    assert merge_distributions([]) == []


def test_assess_pair(make_state):
    ego = make_state(1, x=100.0, vx=30.0)
    other = make_state(2, x=120.0, vx=25.0)
    result = assess_pair(ego, other)
    assert result.o_risk == pytest.approx(0.7524, abs=1e-4)
    assert result.ttc.ttc == pytest.approx(3.2, abs=0.011)
    assert result.gap.dx == pytest.approx(16.0)
    assert 0.0 < result.s_risk < 1.0


def test_rasterize_subjective_field(make_state):
    ego = make_state(1, vx=20.0, length=4.5, width=1.9)
    grid = rasterize_field(ego, RiskKind.S, extent=(100.0, 20.0), resolution=0.25)
    assert grid.shape == (81, 401)
    assert ((grid.values >= 0.0) & (grid.values <= 1.0)).all()
    np.testing.assert_array_equal(grid.values, grid.values[::-1, :])

    row = grid.values[int(np.argmin(np.abs(grid.ys)))]
    assert row[int(np.argmin(np.abs(grid.xs - 2.25)))] == 1.0

    gamma_x = params_at_velocity(SFieldParams(), 20.0)[0]
    edge = 2.25 + gamma_x
    inside = (grid.xs > 2.25) & (grid.xs < edge)
    outside = grid.xs > edge
    assert (row[inside] >= E_INV).all()
    assert (row[outside] < E_INV).all()


def test_rasterize_objective_preset():
    ego, other = o_field_preset("car-following-5")
    grid = rasterize_field(ego, RiskKind.O, other=other, extent=(100.0, 20.0), resolution=0.25)
    row = grid.values[int(np.argmin(np.abs(grid.ys)))]
    assert row[int(np.argmin(np.abs(grid.xs + 20.0)))] == pytest.approx(0.7524, abs=1e-4)
    assert row[int(np.argmin(np.abs(grid.xs)))] == 1.0
    assert (row[grid.xs > 0.1] == 0.0).all()


def test_rasterize_errors(make_state):
    ego = make_state(1, vx=20.0)
    with pytest.raises(AnalysisError):
        rasterize_field(ego, RiskKind.S, extent=(0.0, 20.0))
    with pytest.raises(AnalysisError):
        rasterize_field(ego, RiskKind.S, resolution=0.0)
    with pytest.raises(AnalysisError):
        rasterize_field(ego, RiskKind.O)
    with pytest.raises(AnalysisError):
        o_field_preset("overtake")
