import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import openpyxl
import pandas as pd

from app.models.analysis import FieldGrid, ResponseDistribution, RiskTimeline
from app.models.calibration import CalibrationReport
from app.models.fields import FieldParameterSet
from app.utils.logger import get_logger
from templates.excel_styles import apply_table_styling

logger = get_logger(__name__)

TIMELINE_COLUMNS = ["frame", "t", "s_risk", "o_risk", "ttci", "top_pair_id", "pair_s", "pair_o", "t_m", "d_m"]
BIN_COLUMNS = [
    "velocity", "status", "n_samples", "n_vehicles", "n_iterations", "n_converged",
    "gamma_x", "beta_x", "gamma_y", "beta_y",
    "std_gamma_x", "std_beta_x", "std_gamma_y", "std_beta_y",
]
FIELD_COLUMNS = ["x", "y", "risk"]


class ReportWriter:
    """Writes every plot-ready output of the toolkit"""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = Path(output_dir) if output_dir else None
        self.logger = logger

    def _resolve(self, path) -> Path:
        path = Path(path)
        if self.output_dir is not None and not path.is_absolute():
            path = self.output_dir / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def timeline_frame(self, timeline: RiskTimeline, external: Optional[pd.Series] = None) -> pd.DataFrame:
        rows = []
        for frame in timeline.frames:
            top = frame.top_pair
            rows.append({
                "frame": frame.frame,
                "t": frame.t,
                "s_risk": frame.s_risk,
                "o_risk": frame.o_risk,
                "ttci": frame.ttci,
                "top_pair_id": top.neighbor_id if top else None,
                "pair_s": top.r_s if top else None,
                "pair_o": top.r_o if top else None,
                "t_m": top.t_m if top else None,
                "d_m": top.d_m if top else None,
            })
        df = pd.DataFrame(rows, columns=TIMELINE_COLUMNS)
        df["top_pair_id"] = df["top_pair_id"].astype("Int64")
        if external is not None:
            df["external"] = df["frame"].map(external)
        return df

    def write_timeline(self, timeline: RiskTimeline, path, external: Optional[pd.Series] = None) -> Path:
        path = self._resolve(path)
        self.timeline_frame(timeline, external).to_csv(path, index=False, encoding="utf-8")
        self.logger.info(f"💾 Timeline of vehicle {timeline.vehicle_id} written to {path}")
        return path

    def bin_frame(self, report: CalibrationReport) -> pd.DataFrame:
        """One row per velocity bin, skipped bins included with empty estimates."""
        results = {r.velocity: r for r in report.results}
        rows = []
        for b in report.bins:
            result = results.get(b.velocity)
            row = {"velocity": b.velocity, "status": b.status.value,
                   "n_samples": b.n_samples, "n_vehicles": b.n_vehicles}
            if result is not None:
                row.update(result.model_dump(include=set(BIN_COLUMNS) - {"velocity"}, mode="json"))
            rows.append(row)
        if not report.bins:
            rows = [r.model_dump(include=set(BIN_COLUMNS), mode="json") for r in report.results]
        return pd.DataFrame(rows, columns=BIN_COLUMNS)

    def write_bin_report(self, report: CalibrationReport, path) -> Path:
        path = self._resolve(path)
        self.bin_frame(report).to_csv(path, index=False, encoding="utf-8")
        self.logger.info(f"💾 Calibration bin report written to {path}")
        return path

    def write_workbook(self, report: CalibrationReport, params: FieldParameterSet, path) -> Path:
        """Bin table plus the fitted parameters, styled for reading in Excel."""
        path = self._resolve(path)
        workbook = openpyxl.Workbook()

        bins_sheet = workbook.active
        bins_sheet.title = "Velocity Bins"
        bins = self.bin_frame(report)
        bins_sheet.append(BIN_COLUMNS)
        for row in bins.itertuples(index=False):
            bins_sheet.append([None if pd.isna(v) else getattr(v, "item", lambda: v)() for v in row])
        apply_table_styling(bins_sheet, BIN_COLUMNS, len(bins), status_column="status")

        params_sheet = workbook.create_sheet("Fitted Parameters")
        params_sheet.append(["parameter", "value", "coefficients"])
        s_field = params.s_field
        rows: List[list] = [
            ["gamma_x(v)", None, ", ".join(f"{c:.6g}" for c in s_field.gamma_x_poly)],
            ["beta_x(v)", None, ", ".join(f"{c:.6g}" for c in s_field.beta_x_poly)],
        ]
        for name in ("gamma_y", "beta_y", "gamma_l", "beta_l", "gamma_b", "beta_b", "kappa_l", "kappa_b"):
            rows.append([name, float(getattr(s_field, name)), None])
        for line in (report.lane_marker, report.boundary):
            if line is not None:
                rows.append([f"{line.kind.value} samples", line.n_samples, None])
        for row in rows:
            params_sheet.append(row)
        apply_table_styling(params_sheet, ["parameter", "value", "coefficients"], len(rows))

        workbook.save(path)
        self.logger.info(f"📊 Calibration workbook written to {path}")
        return path

    def analysis_document(self, study: str, distributions: Sequence[ResponseDistribution],
                          bins: int = 20) -> Dict:
        return {
            "study": study,
            "risk_kind": distributions[0].risk_kind.value if distributions else None,
            "directions": sorted({d.direction.value for d in distributions}),
            "lag": distributions[0].lag if distributions else None,
            "distributions": [
                {
                    "threshold": d.threshold,
                    "direction": d.direction.value,
                    "lag": d.lag,
                    "count": d.count,
                    "excluded_lane_changers": d.excluded_lane_changers,
                    "mean": d.mean,
                    "values": d.values,
                    "histogram": d.histogram(bins),
                }
                for d in distributions
            ],
        }

    def write_analysis(self, study: str, distributions: Sequence[ResponseDistribution], path,
                       bins: int = 20) -> Path:
        path = self._resolve(path)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.analysis_document(study, distributions, bins), f, indent=2)
        self.logger.info(f"💾 {study} distributions written to {path}")
        return path

    def field_frame(self, grid: FieldGrid) -> pd.DataFrame:
        X, Y = np.meshgrid(grid.xs, grid.ys)
        return pd.DataFrame({"x": X.ravel(), "y": Y.ravel(), "risk": grid.values.ravel()}, columns=FIELD_COLUMNS)

    def write_field(self, grid: FieldGrid, path) -> Path:
        path = self._resolve(path)
        self.field_frame(grid).to_csv(path, index=False, encoding="utf-8")
        self.logger.info(f"💾 {grid.field.value.upper()}-field grid {grid.shape[0]}x{grid.shape[1]} written to {path}")
        return path
