from .routes import router
from .dependencies import get_params, get_report_writer

__all__ = ["router", "get_params", "get_report_writer"]
