from .calibration_pipeline import CalibrationPipeline
from .analysis import RiskAssessor
from .fixture_generator import FixtureGenerator
from .report_writer import ReportWriter
from .scenes import SceneBuilder

__all__ = [
    "CalibrationPipeline",
    "RiskAssessor",
    "FixtureGenerator",
    "ReportWriter",
    "SceneBuilder",
]
