import json
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from app.config import TEMPLATES_DIR, settings
from app.models.fields import FieldParameterSet
from app.utils.exceptions import ConfigurationError
from app.utils.logger import get_logger
from app.utils.validators import validate_json_file

logger = get_logger(__name__)

DEFAULT_PARAMS_FILE = TEMPLATES_DIR / "default_params.json"


def parse_params(document: dict) -> FieldParameterSet:
    """
    Build a parameter set from a parsed parameter document. Missing sections
    take the published defaults; kappa weights missing from the s_field
    section come from the KAPPA_L / KAPPA_B settings.
    """
    if not isinstance(document, dict):
        raise ConfigurationError("Parameter document must be a JSON object")
    unknown = set(document) - {"s_field", "o_field"}
    if unknown:
        raise ConfigurationError(f"Unknown parameter sections: {sorted(unknown)}")

    s_field = dict(document.get("s_field") or {})
    s_field.setdefault("kappa_l", settings.KAPPA_L)
    s_field.setdefault("kappa_b", settings.KAPPA_B)
    try:
        return FieldParameterSet.model_validate({"s_field": s_field, "o_field": document.get("o_field") or {}})
    except ValidationError as e:
        raise ConfigurationError(f"Invalid field parameters: {e}")


def load_params(path: Optional[Union[str, Path]] = None) -> FieldParameterSet:
    """Read a parameter file; None resolves to PARAMS_FILE, then the shipped defaults."""
    if path is None:
        path = Path(settings.PARAMS_FILE)
        if not path.exists():
            logger.warning(f"PARAMS_FILE {path} not found, using {DEFAULT_PARAMS_FILE}")
            path = DEFAULT_PARAMS_FILE
    validate_json_file(path)

    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read parameter file {path}: {e}")

    params = parse_params(document)
    logger.debug(f"Loaded field parameters from {path}")
    return params


def dump_params(params: FieldParameterSet) -> dict:
    return params.model_dump(mode="json")


def save_params(params: FieldParameterSet, path: Union[str, Path]) -> Path:
    """Write a parameter file; floats are stored with repr precision so they reload exactly."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(dump_params(params), f, indent=2)
            f.write("\n")
    except OSError as e:
        raise ConfigurationError(f"Cannot write parameter file {path}: {e}")
    logger.info(f"💾 Field parameters saved to {path}")
    return path
