from app.models.fields import FieldParameterSet
from app.services.param_store import load_params
from app.services.report_writer import ReportWriter


def get_params() -> FieldParameterSet:
    """Dependency to get the configured field parameters"""
    return load_params()


def get_report_writer() -> ReportWriter:
    """Dependency to get ReportWriter instance"""
    return ReportWriter()
