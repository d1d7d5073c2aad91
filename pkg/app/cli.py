"""
Command-line surface: calibrate, assess, analyze, render-field, synthesize, serve.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from app.config import settings
from app.models.analysis import ResponseDirection, RiskKind
from app.models.dataset import Dataset
from app.models.trajectory import VehicleState
from app.services.analysis import (
    O_FIELD_PRESETS,
    RiskAssessor,
    merge_distributions,
    o_field_preset,
    rasterize_field,
)
from app.services.baselines import load_baseline_series
from app.services.calibration_pipeline import CalibrationPipeline
from app.services.fixture_generator import synthesize_fixture
from app.services.highd_reader import load_recordings, write_recording
from app.services.param_store import load_params, save_params
from app.services.report_writer import ReportWriter
from app.utils.exceptions import AnalysisError, CSPFException
from app.utils.logger import get_logger, setup_logger

logger = get_logger(__name__)

# study -> (risk kind, response directions)
STUDIES = {
    "braking": (RiskKind.O, [ResponseDirection.LONGITUDINAL]),
    "lateral-o": (RiskKind.O, [ResponseDirection.LATERAL_LEFT, ResponseDirection.LATERAL_RIGHT]),
    "lateral-s": (RiskKind.S, [ResponseDirection.LATERAL_LEFT, ResponseDirection.LATERAL_RIGHT]),
}


def _floats(text: str, sep: str = ",") -> List[float]:
    try:
        return [float(v) for v in text.split(sep) if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected numbers separated by '{sep}', got {text!r}")


def _extent(text: str) -> Tuple[float, float]:
    values = _floats(text.lower(), "x")
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"Extent must look like 100x20, got {text!r}")
    return values[0], values[1]


def _load_datasets(inputs: Sequence[str]) -> List[Dataset]:
    datasets = []
    for directory in inputs:
        datasets.extend(load_recordings(directory))
    return datasets


def cmd_calibrate(args: argparse.Namespace) -> int:
    datasets = _load_datasets(args.input)
    template = load_params(args.template).s_field if args.template else None
    pipeline = CalibrationPipeline(
        window=args.window, lane_span=args.lane_span,
        min_samples=args.min_samples, min_vehicles=args.min_vehicles,
        n_iter=args.iterations, frac=args.fraction, seed=args.seed, degree=args.degree,
    )
    params, report = pipeline.run(datasets, template=template)
    save_params(params, args.out)

    writer = ReportWriter()
    report_path = args.report or Path(args.out).with_name(Path(args.out).stem + "_bins.csv")
    writer.write_bin_report(report, report_path)
    if args.xlsx:
        writer.write_workbook(report, params, args.xlsx)
    return 0


def cmd_assess(args: argparse.Namespace) -> int:
    params = load_params(args.params)
    if args.kappa_zero:
        params = params.model_copy(update={"s_field": params.s_field.without_lane_terms()})
        logger.info("Lane-marker and boundary terms dropped from the S-field aggregate")
    datasets = _load_datasets(args.input)
    candidates = [
        d for d in datasets
        if args.vehicle in d.tracks and (args.recording is None or d.meta.recording_id == args.recording)
    ]
    if not candidates:
        raise AnalysisError(f"Vehicle {args.vehicle} not found in {', '.join(args.input)}")
    if len(candidates) > 1:
        logger.warning(f"Vehicle {args.vehicle} exists in several recordings, using "
                       f"{candidates[0].meta.recording_id}; pass --recording to choose")

    assessor = RiskAssessor(candidates[0], params, window=args.window, lane_span=args.lane_span)
    timeline = assessor.risk_timeline(args.vehicle, with_ttc=not args.no_ttc)
    external = load_baseline_series(args.external) if args.external else None
    ReportWriter().write_timeline(timeline, args.out, external=external)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    params = load_params(args.params)
    risk_kind, directions = STUDIES[args.study]
    thresholds = args.thresholds or [settings.EVENT_THRESHOLD]

    distributions = []
    datasets = _load_datasets(args.input)
    for direction in directions:
        per_recording = [
            RiskAssessor(dataset, params, window=args.window, lane_span=args.lane_span).behavior_response(
                risk_kind, direction, thresholds, lag=args.lag,
                exclude_lane_changers=not args.include_lane_changers,
            )
            for dataset in datasets
        ]
        merged = merge_distributions(per_recording)
        for d in merged:
            logger.info(f"   {direction.value} @ {d.threshold:.3f}: {d.count} events, "
                        f"{d.excluded_lane_changers} excluded, mean={d.mean}")
        distributions.extend(merged)

    ReportWriter().write_analysis(args.study, distributions, args.out, bins=args.bins)
    return 0


def _other_from_text(values: List[float]) -> VehicleState:
    if len(values) != 5:
        raise AnalysisError("--other expects x,y,vx,vy,w")
    x, y, vx, vy, w = values
    return VehicleState(vehicle_id=2, frame=0, t=0.0, x=x, y=y, vx=vx, vy=vy, length=4.5, width=w)


def cmd_render_field(args: argparse.Namespace) -> int:
    params = load_params(args.params)
    if args.preset:
        ego, other = o_field_preset(args.preset)
        field = RiskKind.O
    else:
        if args.velocity is None:
            raise AnalysisError("render-field needs --velocity or --preset")
        ego = VehicleState(vehicle_id=1, frame=0, t=0.0, x=0.0, y=0.0, vx=args.velocity,
                           length=args.length, width=args.width)
        other = _other_from_text(args.other) if args.other else None
        field = RiskKind(args.field)

    grid = rasterize_field(ego, field, params, other=other, extent=args.extent, resolution=args.res)
    ReportWriter().write_field(grid, args.out)
    return 0


def cmd_synthesize(args: argparse.Namespace) -> int:
    dataset = synthesize_fixture(args.scenario, seed=args.seed)
    out = Path(args.out)
    prefix = f"{dataset.meta.recording_id:02d}"
    write_recording(dataset, out / f"{prefix}_tracks.csv", out / f"{prefix}_recordingMeta.csv")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    print("=" * 60)
    print("🚀 C-SPF Risk Toolkit API")
    print("=" * 60)
    print(f"📁 Data Directory: {settings.DATA_DIR}")
    print(f"📁 Output Directory: {settings.OUTPUT_DIR}")
    print(f"⚙️  Parameter File: {settings.PARAMS_FILE}")
    print(f"🌐 Server: http://{args.host}:{args.port}")
    print(f"📚 API Docs: http://{args.host}:{args.port}/docs")
    print("=" * 60)

    uvicorn.run(
        "app.main:app",
        host=args.host,
        port=args.port,
        reload=args.reload,
        log_level=settings.LOG_LEVEL.lower()
    )
    return 0


def _add_perception(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=float, default=None,
                        help=f"Longitudinal perception window in m (default {settings.PERCEPTION_WINDOW})")
    parser.add_argument("--lane-span", type=int, default=None,
                        help=f"Perceived lanes on each side (default {settings.LANE_SPAN})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cspf", description="Composite safety potential field toolkit")
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="Calibrate S-field parameters from highD recordings")
    p.add_argument("--input", action="append", required=True, help="Recording directory (repeatable)")
    p.add_argument("--out", required=True, help="Parameter file to write")
    p.add_argument("--report", default=None, help="Per-bin report CSV (default <out>_bins.csv)")
    p.add_argument("--xlsx", default=None, help="Optional styled Excel workbook")
    p.add_argument("--template", default=None, help="Parameter file supplying kappa and O-field values")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--min-samples", type=int, default=None)
    p.add_argument("--min-vehicles", type=int, default=None)
    p.add_argument("--degree", type=int, default=3)
    _add_perception(p)
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("assess", help="Per-frame risk timeline of one vehicle")
    p.add_argument("--input", action="append", required=True)
    p.add_argument("--params", default=None)
    p.add_argument("--vehicle", type=int, required=True)
    p.add_argument("--recording", type=int, default=None, help="Recording id when several are loaded")
    p.add_argument("--external", default=None, help="External baseline CSV with columns frame,value")
    p.add_argument("--no-ttc", action="store_true", help="Skip the TTC baseline")
    p.add_argument("--kappa-zero", action="store_true",
                   help="Aggregate vehicle terms only (lane-marker and boundary weights set to 0)")
    p.add_argument("--out", required=True)
    _add_perception(p)
    p.set_defaults(handler=cmd_assess)

    p = sub.add_parser("analyze", help="Behavior-response distributions")
    p.add_argument("--input", action="append", required=True)
    p.add_argument("--params", default=None)
    p.add_argument("--study", choices=sorted(STUDIES), required=True)
    p.add_argument("--thresholds", type=_floats, default=None, help="Comma-separated, ascending")
    p.add_argument("--lag", type=float, default=None)
    p.add_argument("--bins", type=int, default=20, help="Histogram bins")
    p.add_argument("--include-lane-changers", action="store_true")
    p.add_argument("--out", required=True)
    _add_perception(p)
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("render-field", help="Rasterize the S-field or O-field")
    p.add_argument("--field", choices=["s", "o"], default="s")
    p.add_argument("--velocity", type=float, default=None)
    p.add_argument("--length", type=float, default=4.5)
    p.add_argument("--width", type=float, default=1.9)
    p.add_argument("--other", type=_floats, default=None, help="x,y,vx,vy,w of the influencing vehicle")
    p.add_argument("--preset", choices=sorted(O_FIELD_PRESETS), default=None)
    p.add_argument("--extent", type=_extent, default=(100.0, 20.0))
    p.add_argument("--res", type=float, default=0.25)
    p.add_argument("--params", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_render_field)

    p = sub.add_parser("synthesize", help="Write a synthetic highD recording")
    p.add_argument("--scenario", required=True, help="Scenario JSON path or bundled fixture name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="Output directory")
    p.set_defaults(handler=cmd_synthesize)

    p = sub.add_parser("serve", help="Run the HTTP API")
    p.add_argument("--host", default=settings.API_HOST)
    p.add_argument("--port", type=int, default=settings.API_PORT)
    p.add_argument("--reload", action="store_true", default=settings.API_RELOAD)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logger(args.log_level)
    try:
        return args.handler(args)
    except CSPFException as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
