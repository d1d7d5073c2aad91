from .trajectory import DrivingDirection, VehicleState, LaneGeometry, GapVector, CenterVector, SceneFrame
from .dataset import RecordingMeta, Dataset
from .fields import SFieldParams, OFieldParams, FieldParameterSet, CpaResult, CpaRegime, DStarRule
from .calibration import SpacingSample, SpacingKind, CalibrationBin, BinResult, BinStatus, CalibrationReport
from .analysis import RiskKind, ResponseDirection, TtcResult, RiskTimeline, ThresholdEvent, ResponseDistribution

__all__ = [
    "DrivingDirection",
    "VehicleState",
    "LaneGeometry",
    "GapVector",
    "CenterVector",
    "SceneFrame",
    "RecordingMeta",
    "Dataset",
    "SFieldParams",
    "OFieldParams",
    "FieldParameterSet",
    "CpaResult",
    "CpaRegime",
    "DStarRule",
    "SpacingSample",
    "SpacingKind",
    "CalibrationBin",
    "BinResult",
    "BinStatus",
    "CalibrationReport",
    "RiskKind",
    "ResponseDirection",
    "TtcResult",
    "RiskTimeline",
    "ThresholdEvent",
    "ResponseDistribution",
]
