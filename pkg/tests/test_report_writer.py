import json

import openpyxl
import pandas as pd
import pytest

from app.models.analysis import ResponseDirection, ResponseDistribution, ResponseRecord, RiskKind
from app.models.calibration import BinResult, BinStatus, CalibrationBin, CalibrationReport, SpacingSample
from app.models.fields import FieldParameterSet
from app.services.analysis import RiskAssessor, rasterize_field
from app.services.report_writer import BIN_COLUMNS, FIELD_COLUMNS, TIMELINE_COLUMNS, ReportWriter


def _report():
    sample = SpacingSample(dx=10.0, dy=0.5, ego_velocity=20.0, vehicle_id=1)
    bins = [
        CalibrationBin(velocity=20, samples=[sample] * 3, n_vehicles=1),
        CalibrationBin(velocity=21, samples=[sample], n_vehicles=1, status=BinStatus.INSUFFICIENT_SAMPLES),
    ]
    results = [BinResult(velocity=20, gamma_x=11.8, beta_x=3.0, gamma_y=1.4, beta_y=5.0, n_iterations=20,
                         n_converged=20, n_samples=3, n_vehicles=1)]
    return CalibrationReport(bins=bins, results=results, n_samples=4)


def test_timeline_frame(stop_and_go, temp_dir):
    timeline = RiskAssessor(stop_and_go).risk_timeline(2, with_ttc=False)
    writer = ReportWriter(temp_dir)
    external = pd.Series({0: 0.5, 1: 0.25})
    path = writer.write_timeline(timeline, "timeline.csv", external=external)

    df = pd.read_csv(path)
    assert list(df.columns) == TIMELINE_COLUMNS + ["external"]
    assert len(df) == len(timeline.frames)
    assert (df["top_pair_id"] == 1).all()
    assert df["external"].iloc[:2].tolist() == [0.5, 0.25]
    assert df["external"].iloc[2:].isna().all()


def test_bin_report_keeps_skipped_bins(temp_dir):
    path = ReportWriter().write_bin_report(_report(), temp_dir / "bins.csv")
    df = pd.read_csv(path)
    assert list(df.columns) == BIN_COLUMNS
    assert df["velocity"].tolist() == [20, 21]
    assert df["status"].tolist() == ["ok", "insufficient_samples"]
    assert df.loc[0, "gamma_x"] == pytest.approx(11.8)
    assert pd.isna(df.loc[1, "gamma_x"])


def test_workbook_sheets(temp_dir):
    path = ReportWriter(temp_dir).write_workbook(_report(), FieldParameterSet(), "out/calibration.xlsx")
    assert path.exists()
    workbook = openpyxl.load_workbook(path)
    assert workbook.sheetnames == ["Velocity Bins", "Fitted Parameters"]
    bins = workbook["Velocity Bins"]
    assert [c.value for c in bins[1]] == BIN_COLUMNS
    assert bins.max_row == 3
    names = [row[0].value for row in workbook["Fitted Parameters"].iter_rows(min_row=2)]
    assert names[:3] == ["gamma_x(v)", "beta_x(v)", "gamma_y"]


def test_analysis_document(temp_dir):
    records = [ResponseRecord(vehicle_id=v, source_id=9, onset_t=1.0, value=-float(v)) for v in (1, 2, 3)]
    distribution = ResponseDistribution(threshold=0.4, lag=1.0, direction=ResponseDirection.LONGITUDINAL,
                                        risk_kind=RiskKind.O, records=records, excluded_lane_changers=1)
    path = ReportWriter().write_analysis("braking", [distribution], temp_dir / "braking.json", bins=3)
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["study"] == "braking"
    assert document["risk_kind"] == "o"
    entry = document["distributions"][0]
    assert entry["count"] == 3
    assert entry["mean"] == pytest.approx(-2.0)
    assert entry["excluded_lane_changers"] == 1
    assert sum(entry["histogram"]["counts"]) == 3
    assert len(entry["histogram"]["edges"]) == 4


def test_field_csv(make_state, temp_dir):
    grid = rasterize_field(make_state(1, vx=20.0), RiskKind.S, extent=(10.0, 4.0), resolution=1.0)
    df = pd.read_csv(ReportWriter().write_field(grid, temp_dir / "field.csv"))
    assert list(df.columns) == FIELD_COLUMNS
    assert len(df) == 11 * 5
    assert df["risk"].between(0.0, 1.0).all()
    assert df["risk"].max() == 1.0
