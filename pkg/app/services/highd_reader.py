"""
highD recording reader and writer.

Source tracks reference the bounding box by its upper-left corner with
`width` as the longitudinal extent and `height` as the lateral extent.
Vehicles of the upper carriageway drive towards -x; they are mirrored into
the canonical frame on ingestion and mirrored back on export.
"""
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from app.models.dataset import Dataset, RecordingMeta
from app.models.trajectory import DrivingDirection, VehicleState
from app.services.geometry import normalize_track
from app.utils.exceptions import DataError, IngestionError, SchemaError
from app.utils.logger import get_logger
from app.utils.validators import validate_csv_file

logger = get_logger(__name__)

TRACK_COLUMNS = [
    "frame", "id", "x", "y", "width", "height",
    "xVelocity", "yVelocity", "xAcceleration", "yAcceleration", "laneId",
]
META_COLUMNS = ["id", "frameRate"]
NUMERIC_COLUMNS = ["x", "y", "width", "height", "xVelocity", "yVelocity", "xAcceleration", "yAcceleration"]


def _parse_markings(value) -> List[float]:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return []
    return sorted(float(v) for v in str(value).split(";") if v.strip())


def _split_lines(lines: List[float]) -> Tuple[List[float], List[float]]:
    """Outermost lines are road boundaries, the rest are lane markers."""
    if len(lines) < 2:
        return list(lines), []
    return lines[1:-1], [lines[0], lines[-1]]


def parse_meta(meta_path) -> RecordingMeta:
    meta_path = Path(meta_path)
    validate_csv_file(meta_path)
    df = pd.read_csv(meta_path)
    for column in META_COLUMNS:
        if column not in df.columns:
            raise SchemaError(column, meta_path.name)
    if df.empty:
        raise DataError(f"Recording meta {meta_path.name} has no rows")
    row = df.iloc[0]

    markers, boundaries = {}, {}
    for direction, column in ((DrivingDirection.LEFTWARD, "upperLaneMarkings"),
                              (DrivingDirection.RIGHTWARD, "lowerLaneMarkings")):
        if column in df.columns:
            lines = _parse_markings(row[column])
            if lines:
                markers[direction], boundaries[direction] = _split_lines(lines)

    segment_length = float(row["segmentLength"]) if "segmentLength" in df.columns else 420.0
    try:
        return RecordingMeta(
            recording_id=int(row["id"]),
            frame_rate=float(row["frameRate"]),
            lane_marker_ys=markers,
            boundary_ys=boundaries,
            segment_length=segment_length,
        )
    except ValueError as e:
        raise DataError(f"Invalid recording meta in {meta_path.name}: {e}")


def _infer_direction(group: pd.DataFrame, meta: RecordingMeta) -> DrivingDirection:
    median_vx = float(group["xVelocity"].median())
    if median_vx < 0:
        return DrivingDirection.LEFTWARD
    if median_vx > 0:
        return DrivingDirection.RIGHTWARD
    # standing vehicle: pick the carriageway whose lines are closest
    center_y = float((group["y"] + 0.5 * group["height"]).median())
    best, best_distance = DrivingDirection.RIGHTWARD, np.inf
    for direction, lines in meta.boundary_ys.items():
        if lines:
            distance = abs(center_y - 0.5 * (lines[0] + lines[-1]))
            if distance < best_distance:
                best, best_distance = direction, distance
    return best


def parse_recording(tracks_path, meta_path) -> Dataset:
    """
    Parse a highD tracks CSV and its recording meta into a normalized Dataset.
    """
    tracks_path = Path(tracks_path)
    meta = parse_meta(meta_path)
    validate_csv_file(tracks_path)

    logger.info(f"📂 Reading tracks: {tracks_path.name}")
    df = pd.read_csv(tracks_path)
    for column in TRACK_COLUMNS:
        if column not in df.columns:
            raise SchemaError(column, tracks_path.name)

    finite = np.isfinite(df[NUMERIC_COLUMNS].to_numpy(dtype=float)).all(axis=1)
    if not finite.all():
        logger.warning(f"Dropping {int((~finite).sum())} rows with non-finite values from {tracks_path.name}")
        df = df[finite]

    tracks: Dict[int, List[VehicleState]] = {}
    lane_changes: Dict[int, bool] = {}
    directions: Dict[int, DrivingDirection] = {}

    for vehicle_id, group in df.groupby("id", sort=True):
        frames = group["frame"].to_numpy()
        if np.any(np.diff(frames) <= 0):
            raise DataError(f"Frames of vehicle {vehicle_id} are not strictly increasing")

        direction = _infer_direction(group, meta)
        states = [
            VehicleState(
                vehicle_id=int(vehicle_id),
                frame=int(row.frame),
                t=float(row.frame) / meta.frame_rate,
                x=float(row.x) + 0.5 * float(row.width),
                y=float(row.y) + 0.5 * float(row.height),
                vx=float(row.xVelocity),
                vy=float(row.yVelocity),
                ax=float(row.xAcceleration),
                ay=float(row.yAcceleration),
                length=float(row.width),
                width=float(row.height),
                lane_id=int(row.laneId),
            )
            for row in group.itertuples(index=False)
        ]
        tracks[int(vehicle_id)] = normalize_track(states, direction)
        directions[int(vehicle_id)] = direction
        lane_changes[int(vehicle_id)] = group["laneId"].nunique() > 1

    dataset = Dataset(meta=meta, tracks=tracks, lane_changes=lane_changes, directions=directions)
    logger.info(f"✅ Parsed {len(tracks)} tracks ({dataset.n_states} states) from recording {meta.recording_id}")
    return dataset


def _denormalize(state: VehicleState, direction: DrivingDirection) -> VehicleState:
    if direction != DrivingDirection.LEFTWARD:
        return state
    return state.model_copy(update={
        "x": -state.x, "y": -state.y, "vx": -state.vx, "vy": -state.vy,
        "ax": -state.ax, "ay": -state.ay,
    })


def write_recording(dataset: Dataset, tracks_path, meta_path) -> None:
    """Write a Dataset back to the highD tracks and recording-meta schema."""
    rows = []
    for vehicle_id in dataset.vehicle_ids:
        direction = dataset.direction_of(vehicle_id)
        for state in dataset.tracks[vehicle_id]:
            source = _denormalize(state, direction)
            rows.append({
                "frame": source.frame,
                "id": source.vehicle_id,
                "x": source.x - 0.5 * source.length,
                "y": source.y - 0.5 * source.width,
                "width": source.length,
                "height": source.width,
                "xVelocity": source.vx,
                "yVelocity": source.vy,
                "xAcceleration": source.ax,
                "yAcceleration": source.ay,
                "laneId": source.lane_id,
            })
    tracks_df = pd.DataFrame(rows, columns=TRACK_COLUMNS)
    tracks_df = tracks_df.sort_values(["frame", "id"], kind="stable")

    meta = dataset.meta
    meta_row = {"id": meta.recording_id, "frameRate": meta.frame_rate}
    for direction, column in ((DrivingDirection.LEFTWARD, "upperLaneMarkings"),
                              (DrivingDirection.RIGHTWARD, "lowerLaneMarkings")):
        lines = sorted(meta.lane_marker_ys.get(direction, []) + meta.boundary_ys.get(direction, []))
        meta_row[column] = ";".join(repr(v) for v in lines)
    meta_row["segmentLength"] = meta.segment_length

    Path(tracks_path).parent.mkdir(parents=True, exist_ok=True)
    tracks_df.to_csv(tracks_path, index=False, encoding="utf-8")
    pd.DataFrame([meta_row]).to_csv(meta_path, index=False, encoding="utf-8")
    logger.info(f"💾 Wrote {len(tracks_df)} rows to {Path(tracks_path).name}")


def recording_paths(directory) -> List[Tuple[Path, Path]]:
    """Pairs of (tracks, recordingMeta) files found in a highD-style directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestionError(f"Recording directory not found: {directory}")
    pairs = []
    for tracks_path in sorted(directory.glob("*_tracks.csv")):
        prefix = tracks_path.name[: -len("_tracks.csv")]
        meta_path = directory / f"{prefix}_recordingMeta.csv"
        if meta_path.exists():
            pairs.append((tracks_path, meta_path))
        else:
            logger.warning(f"No recording meta for {tracks_path.name}, skipped")
    if not pairs:
        raise IngestionError(f"No highD recordings found in {directory}")
    return pairs


def load_recordings(directory) -> List[Dataset]:
    """Parse every recording of a directory; recordings are pooled by the caller."""
    return [parse_recording(tracks, meta) for tracks, meta in recording_paths(directory)]
