import json

import pandas as pd
import pytest

from app.cli import build_parser, main
from app.services.param_store import load_params


@pytest.fixture
def recording_dir(temp_dir):
    out = temp_dir / "recordings"
    assert main(["synthesize", "--scenario", "stop_and_go", "--seed", "0", "--out", str(out)]) == 0
    return out


def test_synthesize_writes_highd_pair(recording_dir):
    assert (recording_dir / "101_tracks.csv").exists()
    assert (recording_dir / "101_recordingMeta.csv").exists()


def test_assess(recording_dir, temp_dir):
    out = temp_dir / "timeline.csv"
    assert main(["assess", "--input", str(recording_dir), "--vehicle", "2", "--out", str(out)]) == 0
    df = pd.read_csv(out)
    assert len(df) == 626
    assert df["o_risk"].max() > 0.5
    assert df["ttci"].max() > 0.0


def test_assess_kappa_zero_keeps_vehicle_terms_only(recording_dir, temp_dir):
    full, bare = temp_dir / "full.csv", temp_dir / "bare.csv"
    base = ["assess", "--input", str(recording_dir), "--vehicle", "2", "--no-ttc"]
    assert main(base + ["--out", str(full)]) == 0
    assert main(base + ["--kappa-zero", "--out", str(bare)]) == 0

    with_lanes, vehicles_only = pd.read_csv(full), pd.read_csv(bare)
    # the leader is the follower's only neighbor
    assert (vehicles_only["s_risk"] - vehicles_only["pair_s"]).abs().max() < 1e-12
    assert (with_lanes["s_risk"] - with_lanes["pair_s"]).min() > 0.0
    assert (with_lanes["o_risk"] == vehicles_only["o_risk"]).all()


def test_analyze_has_no_kappa_flag():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["analyze", "--input", "x", "--study", "braking", "--kappa-zero", "--out", "x.json"])


def test_analyze(recording_dir, temp_dir):
    out = temp_dir / "braking.json"
    code = main(["analyze", "--input", str(recording_dir), "--study", "braking",
                 "--thresholds", "0.3,0.5", "--out", str(out)])
    assert code == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert [d["threshold"] for d in document["distributions"]] == [0.3, 0.5]
    assert document["distributions"][0]["mean"] < 0


def test_render_field(temp_dir):
    out = temp_dir / "s_field.csv"
    assert main(["render-field", "--velocity", "20", "--extent", "20x4", "--res", "1", "--out", str(out)]) == 0
    assert len(pd.read_csv(out)) == 21 * 5

    preset = temp_dir / "o_field.csv"
    assert main(["render-field", "--preset", "car-following-5", "--extent", "40x8", "--res", "2",
                 "--out", str(preset)]) == 0
    assert pd.read_csv(preset)["risk"].max() == 1.0


def test_calibrate(temp_dir):
    pool = temp_dir / "pool"
    assert main(["synthesize", "--scenario", "calibration_pool", "--out", str(pool)]) == 0
    out = temp_dir / "fitted.json"
    code = main(["calibrate", "--input", str(pool), "--out", str(out), "--window", "30",
                 "--min-samples", "20", "--min-vehicles", "2", "--iterations", "1", "--degree", "1",
                 "--xlsx", str(temp_dir / "fitted.xlsx")])
    assert code == 0
    assert len(load_params(out).s_field.gamma_x_poly) == 2
    assert (temp_dir / "fitted_bins.csv").exists()
    assert (temp_dir / "fitted.xlsx").exists()


def test_errors_exit_with_one(recording_dir, temp_dir):
    assert main(["assess", "--input", str(recording_dir), "--vehicle", "99",
                 "--out", str(temp_dir / "x.csv")]) == 1
    assert main(["render-field", "--out", str(temp_dir / "x.csv")]) == 1
    assert main(["synthesize", "--scenario", "no_such_scenario", "--out", str(temp_dir)]) == 1


def test_parser_rejects_bad_extent():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["render-field", "--extent", "100", "--out", "x.csv"])
