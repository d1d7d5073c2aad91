class CSPFException(Exception):
    """Base exception for the C-SPF toolkit"""
    pass

class TrajectoryError(CSPFException):
    """Track and scene precondition violations"""
    pass

class IngestionError(CSPFException):
    """Recording ingestion related errors"""
    pass

class SchemaError(IngestionError):
    """A required column is missing from a source file"""

    def __init__(self, column: str, source: str = ""):
        self.column = column
        where = f" in {source}" if source else ""
        super().__init__(f"Missing required column '{column}'{where}")

class DataError(IngestionError):
    """Source rows violate ordering or finiteness constraints"""
    pass

class FixtureError(CSPFException):
    """Synthetic scenario document errors"""
    pass

class FieldParameterError(CSPFException):
    """Invalid field parameters or field inputs"""
    pass

class CalibrationError(CSPFException):
    """Parameter inference related errors"""
    pass

class InsufficientDataError(CalibrationError):
    """Not enough samples, vehicles or bins to calibrate"""
    pass

class AnalysisError(CSPFException):
    """Timeline, event and rasterization errors"""
    pass

class ConfigurationError(CSPFException):
    """Configuration and parameter file related errors"""
    pass
