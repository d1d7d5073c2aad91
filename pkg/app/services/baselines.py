"""
Two-dimensional time-to-collision baseline: both bounding boxes advance at
their current velocities and the first sampled instant at which they
intersect is the TTC.
"""
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from app.config import settings
from app.models.analysis import TtcResult
from app.models.trajectory import VehicleState
from app.services.geometry import center_vector
from app.utils.exceptions import AnalysisError, SchemaError
from app.utils.logger import get_logger
from app.utils.validators import validate_csv_file

logger = get_logger(__name__)

CONTACT_TOLERANCE = 1e-9  # meters


def ttc_2d(ego: VehicleState, other: VehicleState, dt: Optional[float] = None,
           horizon: Optional[float] = None) -> TtcResult:
    dt = settings.TTC_DT if dt is None else dt
    horizon = settings.TTC_HORIZON if horizon is None else horizon
    if not dt > 0:
        raise AnalysisError(f"TTC step must be positive, got {dt}")

    c = center_vector(ego, other)
    steps = np.arange(int(math.floor(horizon / dt + 1e-9)) + 1) * dt
    dx = c.dx + c.dvx * steps
    dy = c.dy + c.dvy * steps
    hit = (
        (np.abs(dx) <= 0.5 * (ego.length + other.length) + CONTACT_TOLERANCE)
        & (np.abs(dy) <= 0.5 * (ego.width + other.width) + CONTACT_TOLERANCE)
    )
    if not hit.any():
        return TtcResult(ttc=None, ttci=0.0)
    ttc = float(steps[int(np.argmax(hit))])
    return TtcResult(ttc=ttc, ttci=math.inf if ttc == 0.0 else 1.0 / ttc)


def ttci_timeline(ego_track: Iterable[VehicleState], other_track: Iterable[VehicleState],
                  dt: Optional[float] = None, horizon: Optional[float] = None) -> pd.DataFrame:
    """Per-frame TTCi over the frames both tracks share (columns frame, t, ttci)."""
    others = {s.frame: s for s in other_track}
    rows = [
        {"frame": ego.frame, "t": ego.t, "ttci": ttc_2d(ego, others[ego.frame], dt, horizon).ttci}
        for ego in ego_track
        if ego.frame in others
    ]
    return pd.DataFrame(rows, columns=["frame", "t", "ttci"])


def load_baseline_series(path) -> pd.Series:
    """External risk series (e.g. RDSI computed elsewhere) as a frame-indexed Series."""
    path = Path(path)
    validate_csv_file(path)
    df = pd.read_csv(path)
    for column in ("frame", "value"):
        if column not in df.columns:
            raise SchemaError(column, path.name)
    series = df.drop_duplicates("frame", keep="last").set_index("frame")["value"].astype(float)
    logger.info(f"📂 Loaded {len(series)} external baseline values from {path.name}")
    return series
