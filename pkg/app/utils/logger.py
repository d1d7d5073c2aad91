import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

from app.config import settings

CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<cyan>{extra[name]}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {extra[name]}:{function}:{line} - {message}"

# records logged through the bare loguru logger carry no bound name
logger.configure(extra={"name": "cspf"})


def setup_logger(level: Optional[str] = None) -> List[int]:
    """
    Route records to stderr and, unless LOG_FILE is empty, to a rotating
    file. DEBUG=true lowers the console to DEBUG and turns on loguru's
    extended tracebacks with variable values. Returns the sink ids.
    """
    logger.remove()
    verbose = settings.DEBUG
    console_level = (level or ("DEBUG" if verbose else settings.LOG_LEVEL)).upper()

    sinks = [logger.add(
        sys.stderr,
        level=console_level,
        format=CONSOLE_FORMAT,
        colorize=True,
        backtrace=verbose,
        diagnose=verbose,
    )]

    if settings.LOG_FILE:
        Path(settings.LOG_FILE).parent.mkdir(parents=True, exist_ok=True)
        sinks.append(logger.add(
            settings.LOG_FILE,
            level="DEBUG",
            format=FILE_FORMAT,
            rotation="10 MB",
            retention="7 days",
            compression="zip",
            backtrace=verbose,
            diagnose=verbose,
        ))

    logger.bind(name=__name__).debug(f"Logging at {console_level} (debug mode {'on' if verbose else 'off'})")
    return sinks


def get_logger(name: str = __name__):
    """Logger bound to a module name"""
    return logger.bind(name=name)
