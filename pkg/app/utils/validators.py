import math
from pathlib import Path
from typing import Iterable
from .exceptions import AnalysisError, ConfigurationError, FieldParameterError, IngestionError

def validate_csv_file(file_path) -> bool:
    """Validate that a source file exists and is a CSV file"""
    path = Path(file_path)
    if not path.exists():
        raise IngestionError(f"File not found: {file_path}")
    if path.suffix.lower() != ".csv":
        raise IngestionError(f"Invalid file type {path.suffix}. Expected .csv")
    return True

def validate_json_file(file_path) -> bool:
    path = Path(file_path)
    if not path.exists():
        raise ConfigurationError(f"File not found: {file_path}")
    if path.suffix.lower() != ".json":
        raise ConfigurationError(f"Invalid file type {path.suffix}. Expected .json")
    return True

def validate_finite(*values: float, name: str = "value") -> bool:
    """Reject NaN and infinite inputs to field evaluations"""
    for value in values:
        if not math.isfinite(value):
            raise FieldParameterError(f"Non-finite {name}: {value}")
    return True

def validate_probabilities(values: Iterable[float]) -> bool:
    for value in values:
        if not 0.0 <= value <= 1.0:
            raise FieldParameterError(f"Risk {value} outside [0, 1]")
    return True

def validate_threshold(threshold: float) -> bool:
    if not 0.0 < threshold < 1.0:
        raise AnalysisError(f"Threshold {threshold} must lie in (0, 1)")
    return True
